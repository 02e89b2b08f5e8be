#include "mar/kb/builder.hpp"

#include "mar/core/error.hpp"
#include "mar/kb/trace.hpp"
#include "mar/retrieval/kb_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace mar::kb {

namespace fs = std::filesystem;
using nlohmann::json;
using retrieval::ManagerDoc;
using retrieval::OperatorDoc;

namespace {

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::Edit: return "edit";
    }
    return "?";
}

}  // namespace

std::vector<ManagerTask> read_manager_tasks(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<ManagerTask> tasks;
    if (file.extension() == ".json") {
        try {
            for (const auto& j : json::parse(in))
                tasks.push_back({j.at("instruction").get<std::string>(), j.at("human_steps").get<std::string>()});
        } catch (const json::exception& e) {
            throw InvalidKbEntry(file.string() + ": " + e.what());
        }
        return tasks;
    }
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InvalidKbEntry(file.string() + ":" + std::to_string(lineno) + ": expected instruction<TAB>steps");
        tasks.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return tasks;
}

std::vector<ManagerDoc> build_manager_kb(const std::vector<ManagerTask>& tasks) {
    std::vector<ManagerDoc> docs;
    std::set<std::string> seen;
    for (const auto& t : tasks) {
        if (blank(t.instruction) || blank(t.human_steps))
            throw InvalidKbEntry("manager entry " + std::to_string(docs.size()) + " has an empty field");
        if (!seen.insert(t.instruction).second) throw DuplicateInstruction("duplicate instruction: " + t.instruction);
        docs.push_back(ManagerDoc{static_cast<int>(docs.size()), t.instruction, t.human_steps});
    }
    return docs;
}

std::vector<CurationDecision> load_decisions(const fs::path& file) {
    std::vector<CurationDecision> out;
    if (!fs::exists(file)) return out;
    std::ifstream in(file);
    try {
        for (const auto& j : json::parse(in)) {
            CurationDecision d;
            d.entry_id = j.at("id").get<int>();
            const std::string v = j.at("verdict").get<std::string>();
            if (v == "accept") d.verdict = Verdict::Accept;
            else if (v == "reject") d.verdict = Verdict::Reject;
            else if (v == "edit") d.verdict = Verdict::Edit;
            else throw InvalidKbEntry("unknown verdict '" + v + "'");
            if (d.verdict == Verdict::Edit) {
                const auto& r = j.at("replacement");
                OperatorDoc doc;
                doc.id = d.entry_id;
                doc.app = r.at("app").get<std::string>();
                doc.subtask = r.at("subtask").get<std::string>();
                doc.screenshot = r.value("screenshot", "");
                doc.action = parse_action(r.at("action").get<std::string>());
                d.replacement = std::move(doc);
            }
            out.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw InvalidKbEntry("malformed decisions file " + file.string() + ": " + e.what());
    }
    return out;
}

void save_decisions(const fs::path& file, const std::vector<CurationDecision>& decisions) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& d : decisions) {
        nlohmann::ordered_json j;
        j["id"] = d.entry_id;
        j["verdict"] = verdict_name(d.verdict);
        if (d.replacement) {
            nlohmann::ordered_json r;
            r["app"] = d.replacement->app;
            r["subtask"] = d.replacement->subtask;
            r["screenshot"] = d.replacement->screenshot;
            r["action"] = render_action(d.replacement->action);
            j["replacement"] = r;
        }
        arr.push_back(j);
    }
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    out << arr.dump(2) << '\n';
}

std::vector<OperatorDoc> load_staged_entries(const fs::path& staging) {
    const fs::path f = staging / kEntriesFile;
    if (!fs::exists(f)) return {};
    return retrieval::load_operator_docs(f);
}

CurationSummary curate(const fs::path& staging, const std::vector<CurationDecision>& decisions, const fs::path& kb_root) {
    const auto entries = load_staged_entries(staging);
    std::map<int, const CurationDecision*> by_id;
    for (const auto& d : decisions) by_id[d.entry_id] = &d;
    for (const auto& e : entries)
        if (!by_id.count(e.id)) throw UncoveredEntry("staged entry " + std::to_string(e.id) + " has no decision");
    for (const auto& d : decisions)
        if (d.verdict == Verdict::Edit && !d.replacement)
            throw InvalidKbEntry("edit decision for entry " + std::to_string(d.entry_id) + " lacks a replacement");

    // Existing libraries stay; new ids continue after the largest id already in the KB.
    auto existing = retrieval::load_operator_kb(kb_root);
    int base = 0;
    for (const auto& d : existing) base = std::max(base, d.id + 1);

    CurationSummary summary;
    std::map<std::string, std::vector<OperatorDoc>> libraries;
    for (auto& d : existing) libraries[d.app].push_back(std::move(d));
    std::set<std::string> kept_shots;
    std::vector<std::string> rejected_shots;

    for (const auto& e : entries) {
        const CurationDecision& d = *by_id.at(e.id);
        if (d.verdict == Verdict::Reject) {
            ++summary.rejected;
            rejected_shots.push_back(e.screenshot);
            continue;
        }
        OperatorDoc doc = d.verdict == Verdict::Edit ? *d.replacement : e;
        if (doc.screenshot.empty()) doc.screenshot = e.screenshot;
        if (doc.subtask.empty() || doc.app.empty() || doc.app == kNoApp)
            throw InvalidKbEntry("entry " + std::to_string(e.id) + " needs a subtask and an app");
        doc.id = base + e.id;
        (d.verdict == Verdict::Edit ? summary.edited : summary.accepted) += 1;
        summary.per_app[doc.app] += 1;
        kept_shots.insert(doc.screenshot);
        libraries[doc.app].push_back(std::move(doc));
    }

    for (const auto& rel : kept_shots) {
        const fs::path src = staging / rel;
        const fs::path dst = kb_root / rel;
        if (!fs::exists(src) || fs::exists(dst)) continue;
        fs::create_directories(dst.parent_path());
        fs::copy_file(src, dst);
    }
    for (auto& [app, docs] : libraries)
        retrieval::write_operator_docs(kb_root / retrieval::kOperatorDir / (app + ".jsonl"), std::move(docs));
    for (const auto& rel : rejected_shots)
        if (!kept_shots.count(rel)) fs::remove(staging / rel);
    return summary;
}

}  // namespace mar::kb
