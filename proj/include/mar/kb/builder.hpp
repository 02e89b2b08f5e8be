#pragma once

#include "mar/retrieval/documents.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mar::kb {

struct ManagerTask {
    std::string instruction;
    std::string human_steps;
};

// `.json`: list of {"instruction", "human_steps"}; anything else: TSV with one
// "instruction<TAB>human steps" pair per line.
std::vector<ManagerTask> read_manager_tasks(const std::filesystem::path& file);

// Sequential ids from 0. Throws InvalidKbEntry on empty fields and
// DuplicateInstruction on a repeated instruction.
std::vector<retrieval::ManagerDoc> build_manager_kb(const std::vector<ManagerTask>& tasks);

enum class Verdict { Accept, Reject, Edit };

struct CurationDecision {
    int entry_id = 0;
    Verdict verdict = Verdict::Accept;
    std::optional<retrieval::OperatorDoc> replacement;  // Edit only
};

std::vector<CurationDecision> load_decisions(const std::filesystem::path& file);
void save_decisions(const std::filesystem::path& file, const std::vector<CurationDecision>& decisions);

std::vector<retrieval::OperatorDoc> load_staged_entries(const std::filesystem::path& staging);

struct CurationSummary {
    std::map<std::string, int> per_app;
    int accepted = 0;
    int rejected = 0;
    int edited = 0;
};

// Emits accepted and edited entries into <kb>/operator/<App>.jsonl (merging with
// existing libraries; new ids continue after the KB's largest id) and copies their
// screenshots. Rejected entries' screenshots are deleted from staging unless another
// kept entry shares the file. Throws UncoveredEntry if an entry lacks a decision.
CurationSummary curate(const std::filesystem::path& staging, const std::vector<CurationDecision>& decisions,
                       const std::filesystem::path& kb_root);

}  // namespace mar::kb
