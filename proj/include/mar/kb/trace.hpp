#pragma once

#include "mar/core/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mar::kb {

// Staging directory layout:
//   <staging>/traces/<run>.jsonl      one TraceRecord per line
//   <staging>/traces/<run>.meta.json  {"task_id", "success"}
//   <staging>/screenshots/<sha256>.<png|json>
//   <staging>/entries.jsonl           pending operator docs (written by the filter pass)
inline constexpr const char* kTraceDir = "traces";
inline constexpr const char* kEntriesFile = "entries.jsonl";

struct TraceRecord {
    std::string subtask;
    std::string app;
    std::string screenshot;  // relative to the staging root
    AtomicAction action;
    bool operator==(const TraceRecord&) const = default;
};

struct RawTrace {
    std::string run_id;
    std::string task_id;
    std::vector<TraceRecord> records;
    bool success = false;

    std::size_t length() const { return records.size(); }
};

// Stores a screenshot under <root>/screenshots/ named by its SHA-256; returns the relative path.
std::string store_screenshot(const std::filesystem::path& root, const Screenshot& shot);

// One logging session per agent run. Any IO failure ends the session quietly;
// the run itself is never interrupted.
class TraceLogger {
public:
    // An empty staging path gives a disabled logger.
    TraceLogger(std::filesystem::path staging, std::string task_id, std::string run_id = {});

    bool active() const { return active_; }
    const std::string& run_id() const { return run_id_; }
    const std::string& error() const { return error_; }

    void log_step(const std::string& subtask, const std::string& app, const Screenshot& shot, const AtomicAction& a);
    void finish(bool success);

private:
    void fail(const std::string& what);

    std::filesystem::path staging_;
    std::string task_id_;
    std::string run_id_;
    bool active_ = false;
    std::string error_;
};

std::vector<RawTrace> load_traces(const std::filesystem::path& staging);

// Drops failed traces, collapses traces of one task with identical action-name
// sequences, then keeps the shortest surviving trace per task (earliest on ties).
// Output keeps input order.
std::vector<RawTrace> filter_traces(const std::vector<RawTrace>& traces);

// Copies the kept traces and their screenshots into `out`, and writes entries.jsonl
// with one pending operator doc per record (ids sequential from 0).
void write_filtered_staging(const std::filesystem::path& in, const std::vector<RawTrace>& kept,
                            const std::filesystem::path& out);

}  // namespace mar::kb
