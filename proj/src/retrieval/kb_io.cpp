#include "mar/retrieval/kb_io.hpp"

#include "mar/core/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace mar::retrieval {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(line);
    }
    return lines;
}

void write_lines(const fs::path& file, const std::vector<std::string>& lines) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    for (const auto& l : lines) out << l << '\n';
}

bool stays_inside(const std::string& rel) {
    fs::path p(rel);
    if (rel.empty() || p.is_absolute()) return false;
    for (const auto& part : p.lexically_normal())
        if (part == "..") return false;
    return true;
}

}  // namespace

std::string manager_doc_line(const ManagerDoc& d) {
    ojson j;
    j["id"] = d.id;
    j["instruction"] = d.instruction;
    j["human_steps"] = d.human_steps;
    return j.dump();
}

std::string operator_doc_line(const OperatorDoc& d) {
    ojson j;
    j["id"] = d.id;
    j["app"] = d.app;
    j["subtask"] = d.subtask;
    j["screenshot"] = d.screenshot;
    j["action"] = render_action(d.action);
    return j.dump();
}

ManagerDoc parse_manager_doc_line(const std::string& line) {
    try {
        auto j = nlohmann::json::parse(line);
        ManagerDoc d{j.at("id").get<int>(), j.at("instruction").get<std::string>(),
                     j.at("human_steps").get<std::string>()};
        if (d.instruction.empty() || d.human_steps.empty())
            throw InvalidKbEntry("manager doc " + std::to_string(d.id) + " has an empty field");
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidKbEntry(std::string("malformed manager doc line: ") + e.what());
    }
}

OperatorDoc parse_operator_doc_line(const std::string& line) {
    try {
        auto j = nlohmann::json::parse(line);
        OperatorDoc d{j.at("id").get<int>(), j.at("app").get<std::string>(), j.at("subtask").get<std::string>(),
                      j.at("screenshot").get<std::string>(), parse_action(j.at("action").get<std::string>())};
        if (d.subtask.empty()) throw InvalidKbEntry("operator doc " + std::to_string(d.id) + " has an empty subtask");
        if (!stays_inside(d.screenshot))
            throw InvalidKbEntry("operator doc " + std::to_string(d.id) + " screenshot '" + d.screenshot +
                                 "' escapes the KB root");
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidKbEntry(std::string("malformed operator doc line: ") + e.what());
    }
}

std::vector<ManagerDoc> load_manager_docs(const fs::path& file) {
    std::vector<ManagerDoc> docs;
    for (const auto& l : read_lines(file)) docs.push_back(parse_manager_doc_line(l));
    return docs;
}

std::vector<OperatorDoc> load_operator_docs(const fs::path& file) {
    std::vector<OperatorDoc> docs;
    for (const auto& l : read_lines(file)) docs.push_back(parse_operator_doc_line(l));
    return docs;
}

void write_manager_docs(const fs::path& file, std::vector<ManagerDoc> docs) {
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<std::string> lines;
    for (const auto& d : docs) lines.push_back(manager_doc_line(d));
    write_lines(file, lines);
}

void write_operator_docs(const fs::path& file, std::vector<OperatorDoc> docs) {
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<std::string> lines;
    for (const auto& d : docs) lines.push_back(operator_doc_line(d));
    write_lines(file, lines);
}

std::vector<OperatorDoc> load_operator_kb(const fs::path& root) {
    std::vector<OperatorDoc> all;
    const fs::path dir = root / kOperatorDir;
    if (!fs::exists(dir)) return all;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string app = f.stem().string();
        for (auto& d : load_operator_docs(f)) {
            if (d.app != app)
                throw InvalidKbEntry("operator doc " + std::to_string(d.id) + " in " + f.filename().string() +
                                     " declares app '" + d.app + "'");
            all.push_back(std::move(d));
        }
    }
    return all;
}

KnowledgeBase load_knowledge_base(const fs::path& root, std::shared_ptr<const Embedder> embedder) {
    KnowledgeBase kb;
    kb.root = root;
    std::vector<ManagerDoc> mdocs;
    if (fs::exists(root / kManagerFile)) mdocs = load_manager_docs(root / kManagerFile);
    kb.manager = build_manager_index(std::move(mdocs), embedder);
    kb.operators = build_operator_registry(load_operator_kb(root), embedder);
    return kb;
}

}  // namespace mar::retrieval
