#pragma once

#include "mar/eval/criteria.hpp"
#include "mar/orchestrator/trajectory.hpp"
#include "mar/retrieval/embedding.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mar::eval {

// Paths are resolved against the suite file's directory.
struct SuiteTask {
    std::string id;
    std::string category;
    std::string instruction;
    std::filesystem::path scenario;
    std::filesystem::path criteria;
    std::filesystem::path script;
    std::filesystem::path kb;
    std::filesystem::path judgments;  // optional
};

struct Suite {
    std::string name;
    std::vector<SuiteTask> tasks;

    // {"name", "tasks": [{"id", "category", "instruction", "scenario", "criteria", "script", "kb", "judgments"?}]}
    static Suite load(const std::filesystem::path& file);
};

struct TaskResult {
    std::string id;
    std::string category;
    bool ok = false;  // false: the run or its evaluation threw
    std::string error;
    std::string termination;
    MetricsRecord metrics;
};

struct Aggregate {
    std::string category;  // "overall" for the whole suite
    int tasks = 0;
    int evaluated = 0;
    double cr = 0;
    double oa = 0;
    double ra = 0;
    double steps = 0;
    double efficiency = 0;  // mean CR / mean Steps
    double sr = 0;          // percentage over all tasks; failed runs count as failures
};

struct Report {
    std::string suite;
    std::vector<TaskResult> tasks;
    std::vector<Aggregate> categories;
    Aggregate overall;
};

Aggregate aggregate(const std::string& label, const std::vector<const TaskResult*>& results);

// Throws mar::Error on an empty suite. Writes <out>/<task id>/trajectory.json per task,
// plus <out>/report.json and <out>/report.txt.
Report run_benchmark(const Suite& suite, const orch::RunConfig& cfg,
                     std::shared_ptr<const retrieval::Embedder> embedder, const std::filesystem::path& out,
                     int workers = 1);

nlohmann::ordered_json report_json(const Report& r);
std::string report_table(const Report& r);

}  // namespace mar::eval
