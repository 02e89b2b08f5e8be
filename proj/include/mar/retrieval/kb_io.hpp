#pragma once

#include "mar/retrieval/documents.hpp"
#include "mar/retrieval/index.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mar::retrieval {

// KB directory layout:
//   <root>/manager.jsonl
//   <root>/operator/<App>.jsonl
//   <root>/screenshots/<sha256>.<ext>
inline constexpr const char* kManagerFile = "manager.jsonl";
inline constexpr const char* kOperatorDir = "operator";
inline constexpr const char* kScreenshotDir = "screenshots";

std::string manager_doc_line(const ManagerDoc& d);
std::string operator_doc_line(const OperatorDoc& d);
ManagerDoc parse_manager_doc_line(const std::string& line);
OperatorDoc parse_operator_doc_line(const std::string& line);

std::vector<ManagerDoc> load_manager_docs(const std::filesystem::path& file);
std::vector<OperatorDoc> load_operator_docs(const std::filesystem::path& file);

// Writes one line per doc, sorted by id.
void write_manager_docs(const std::filesystem::path& file, std::vector<ManagerDoc> docs);
void write_operator_docs(const std::filesystem::path& file, std::vector<OperatorDoc> docs);

// Reads every operator/<App>.jsonl under root; each doc's app must equal <App> and its
// screenshot path must stay inside root.
std::vector<OperatorDoc> load_operator_kb(const std::filesystem::path& root);

struct KnowledgeBase {
    ManagerKB manager;
    OperatorKBRegistry operators;
    std::filesystem::path root;
};

// Missing manager.jsonl or operator/ means an empty KB of that kind.
KnowledgeBase load_knowledge_base(const std::filesystem::path& root, std::shared_ptr<const Embedder> embedder);

}  // namespace mar::retrieval
