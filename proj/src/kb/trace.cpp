#include "mar/kb/trace.hpp"

#include "mar/core/digest.hpp"
#include "mar/core/error.hpp"
#include "mar/retrieval/kb_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace mar::kb {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string store_screenshot(const fs::path& root, const Screenshot& shot) {
    const std::string ext = shot.mime == "image/png" ? ".png" : ".json";
    const std::string rel = std::string(retrieval::kScreenshotDir) + "/" + sha256_hex(shot.payload) + ext;
    const fs::path file = root / rel;
    if (!fs::exists(file)) {
        fs::create_directories(file.parent_path());
        std::ofstream out(file, std::ios::binary);
        if (!out) throw IoError("cannot write " + file.string());
        out.write(shot.payload.data(), static_cast<std::streamsize>(shot.payload.size()));
        if (!out) throw IoError("short write to " + file.string());
    }
    return rel;
}

TraceLogger::TraceLogger(fs::path staging, std::string task_id, std::string run_id)
    : staging_(std::move(staging)), task_id_(std::move(task_id)), run_id_(std::move(run_id)) {
    if (staging_.empty()) return;
    try {
        fs::create_directories(staging_ / kTraceDir);
        if (run_id_.empty()) {
            for (int i = 1;; ++i) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "run_%04d", i);
                std::string candidate = buf;
                if (!fs::exists(staging_ / kTraceDir / (candidate + ".jsonl"))) {
                    run_id_ = candidate;
                    break;
                }
            }
        }
        std::ofstream(staging_ / kTraceDir / (run_id_ + ".jsonl"), std::ios::trunc);
        active_ = true;
    } catch (const std::exception& e) {
        fail(e.what());
    }
}

void TraceLogger::fail(const std::string& what) {
    active_ = false;
    error_ = what;
}

void TraceLogger::log_step(const std::string& subtask, const std::string& app, const Screenshot& shot,
                           const AtomicAction& a) {
    if (!active_) return;
    try {
        ojson line;
        line["subtask"] = subtask;
        line["app"] = app;
        line["screenshot"] = store_screenshot(staging_, shot);
        line["action"] = render_action(a);
        std::ofstream out(staging_ / kTraceDir / (run_id_ + ".jsonl"), std::ios::app);
        if (!out) throw IoError("cannot append to trace " + run_id_);
        out << line.dump() << '\n';
    } catch (const std::exception& e) {
        fail(e.what());
    }
}

void TraceLogger::finish(bool success) {
    if (!active_) return;
    try {
        ojson meta;
        meta["task_id"] = task_id_;
        meta["success"] = success;
        std::ofstream out(staging_ / kTraceDir / (run_id_ + ".meta.json"), std::ios::trunc);
        if (!out) throw IoError("cannot write trace metadata for " + run_id_);
        out << meta.dump() << '\n';
    } catch (const std::exception& e) {
        fail(e.what());
    }
    active_ = false;
}

std::vector<RawTrace> load_traces(const fs::path& staging) {
    std::vector<RawTrace> out;
    const fs::path dir = staging / kTraceDir;
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 6 && name.ends_with(".jsonl")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        RawTrace t;
        t.run_id = f.stem().string();
        const fs::path meta = dir / (t.run_id + ".meta.json");
        if (fs::exists(meta)) {
            std::ifstream in(meta);
            auto j = json::parse(in);
            t.task_id = j.value("task_id", "");
            t.success = j.value("success", false);
        }
        std::ifstream in(f);
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            auto j = json::parse(line);
            t.records.push_back(TraceRecord{j.at("subtask").get<std::string>(), j.value("app", ""),
                                            j.at("screenshot").get<std::string>(),
                                            parse_action(j.at("action").get<std::string>())});
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<RawTrace> filter_traces(const std::vector<RawTrace>& traces) {
    auto names = [](const RawTrace& t) {
        std::vector<std::string_view> out;
        for (const auto& r : t.records) out.push_back(action_name(r.action));
        return out;
    };
    // task -> kept index (into traces) of the shortest surviving trace
    std::map<std::string, std::size_t> best;
    std::map<std::string, std::vector<std::vector<std::string_view>>> seen;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const RawTrace& t = traces[i];
        if (!t.success) continue;
        auto seq = names(t);
        auto& prior = seen[t.task_id];
        if (std::find(prior.begin(), prior.end(), seq) != prior.end()) continue;
        prior.push_back(std::move(seq));
        auto it = best.find(t.task_id);
        if (it == best.end() || t.length() < traces[it->second].length()) best[t.task_id] = i;
    }
    std::vector<std::size_t> keep;
    for (const auto& [task, idx] : best) keep.push_back(idx);
    std::sort(keep.begin(), keep.end());
    std::vector<RawTrace> out;
    for (auto idx : keep) out.push_back(traces[idx]);
    return out;
}

void write_filtered_staging(const fs::path& in, const std::vector<RawTrace>& kept, const fs::path& out) {
    fs::create_directories(out / kTraceDir);
    std::vector<retrieval::OperatorDoc> entries;
    std::set<std::string> shots;
    for (const auto& t : kept) {
        std::ofstream trace(out / kTraceDir / (t.run_id + ".jsonl"), std::ios::trunc);
        for (const auto& r : t.records) {
            ojson line;
            line["subtask"] = r.subtask;
            line["app"] = r.app;
            line["screenshot"] = r.screenshot;
            line["action"] = render_action(r.action);
            trace << line.dump() << '\n';
            shots.insert(r.screenshot);
            if (r.app.empty() || r.app == kNoApp) continue;
            entries.push_back(retrieval::OperatorDoc{static_cast<int>(entries.size()), r.app, r.subtask, r.screenshot,
                                                     r.action});
        }
        ojson meta;
        meta["task_id"] = t.task_id;
        meta["success"] = t.success;
        std::ofstream(out / kTraceDir / (t.run_id + ".meta.json"), std::ios::trunc) << meta.dump() << '\n';
    }
    for (const auto& rel : shots) {
        const fs::path src = in / rel;
        const fs::path dst = out / rel;
        if (!fs::exists(src) || fs::exists(dst)) continue;
        fs::create_directories(dst.parent_path());
        fs::copy_file(src, dst);
    }
    retrieval::write_operator_docs(out / kEntriesFile, entries);
}

}  // namespace mar::kb
