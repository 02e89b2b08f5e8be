#include "mar/eval/benchmark.hpp"

#include "mar/core/error.hpp"
#include "mar/env/simulator.hpp"
#include "mar/orchestrator/run.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace mar::eval {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

Suite Suite::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    const fs::path base = file.parent_path();
    auto resolve = [&](const json& t, const char* key) -> fs::path {
        if (!t.contains(key)) return {};
        fs::path p = t.at(key).get<std::string>();
        return p.is_absolute() ? p : base / p;
    };
    Suite s;
    try {
        const json j = json::parse(in);
        s.name = j.value("name", file.stem().string());
        for (const auto& t : j.at("tasks")) {
            SuiteTask task;
            task.id = t.at("id").get<std::string>();
            task.category = t.value("category", "default");
            task.instruction = t.at("instruction").get<std::string>();
            task.scenario = resolve(t, "scenario");
            task.criteria = resolve(t, "criteria");
            task.script = resolve(t, "script");
            task.kb = resolve(t, "kb");
            task.judgments = resolve(t, "judgments");
            s.tasks.push_back(std::move(task));
        }
    } catch (const json::exception& e) {
        throw Error("malformed suite " + file.string() + ": " + e.what());
    }
    return s;
}

Aggregate aggregate(const std::string& label, const std::vector<const TaskResult*>& results) {
    Aggregate a;
    a.category = label;
    a.tasks = static_cast<int>(results.size());
    int successes = 0;
    for (const auto* r : results) {
        if (r->metrics.sr && r->ok) ++successes;
        if (!r->ok) continue;
        ++a.evaluated;
        a.cr += r->metrics.cr;
        a.oa += r->metrics.oa;
        a.ra += r->metrics.ra;
        a.steps += r->metrics.steps;
    }
    if (a.evaluated > 0) {
        a.cr /= a.evaluated;
        a.oa /= a.evaluated;
        a.ra /= a.evaluated;
        a.steps /= a.evaluated;
        a.efficiency = a.steps > 0 ? a.cr / a.steps : 0.0;
    }
    a.sr = a.tasks > 0 ? 100.0 * successes / a.tasks : 0.0;
    return a;
}

namespace {

TaskResult run_one(const SuiteTask& task, const orch::RunConfig& cfg, const retrieval::KnowledgeBase& kb,
                   const fs::path& out) {
    TaskResult r;
    r.id = task.id;
    r.category = task.category;
    try {
        const auto criteria = CompletionCriteria::load(task.criteria);
        auto scenario = env::Scenario::load(task.scenario);
        env::SimulatedDevice device(scenario);
        agents::ScriptedProvider provider(agents::load_script(task.script));
        orch::RunContext ctx{device, provider, kb, cfg, nullptr, out / task.id};
        const auto traj = orch::run_task(TaskInstruction::make(task.instruction), ctx);
        r.termination = std::string(orch::termination_name(*traj.termination));
        const ManualJudgments judgments = task.judgments.empty() ? ManualJudgments{} : load_judgments(task.judgments);
        const auto result = evaluate_criteria(traj, &scenario, criteria, judgments);
        r.metrics = compute_metrics(traj, result);
        std::ofstream(out / task.id / "metrics.json") << metrics_json(r.metrics, result, criteria).dump(2) << '\n';
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

}  // namespace

Report run_benchmark(const Suite& suite, const orch::RunConfig& cfg, std::shared_ptr<const retrieval::Embedder> embedder,
                     const fs::path& out, int workers) {
    if (suite.tasks.empty()) throw Error("benchmark suite '" + suite.name + "' has no tasks");
    cfg.validate();
    fs::create_directories(out);

    // Indices are built once per KB directory and shared read-only.
    std::map<fs::path, retrieval::KnowledgeBase> kbs;
    std::map<fs::path, std::string> kb_errors;
    for (const auto& t : suite.tasks) {
        if (kbs.count(t.kb) || kb_errors.count(t.kb)) continue;
        try {
            kbs.emplace(t.kb, retrieval::load_knowledge_base(t.kb, embedder));
        } catch (const std::exception& e) {
            kb_errors[t.kb] = e.what();
        }
    }

    Report report;
    report.suite = suite.name;
    report.tasks.resize(suite.tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < suite.tasks.size(); i = next++) {
            const auto& t = suite.tasks[i];
            if (auto err = kb_errors.find(t.kb); err != kb_errors.end()) {
                report.tasks[i] = TaskResult{t.id, t.category, false, "knowledge base: " + err->second, {}, {}};
                continue;
            }
            report.tasks[i] = run_one(t, cfg, kbs.at(t.kb), out);
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(suite.tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::map<std::string, std::vector<const TaskResult*>> by_cat;
    std::vector<const TaskResult*> all;
    for (const auto& r : report.tasks) {
        by_cat[r.category].push_back(&r);
        all.push_back(&r);
    }
    for (const auto& [cat, rs] : by_cat) report.categories.push_back(aggregate(cat, rs));
    report.overall = aggregate("overall", all);

    std::ofstream(out / "report.json") << report_json(report).dump(2) << '\n';
    std::ofstream(out / "report.txt") << report_table(report);
    return report;
}

namespace {

ojson aggregate_json(const Aggregate& a) {
    return ojson{{"category", a.category}, {"tasks", a.tasks},  {"evaluated", a.evaluated},
                 {"CR", a.cr},             {"OA", a.oa},        {"RA", a.ra},
                 {"Steps", a.steps},       {"Efficiency", a.efficiency}, {"SR", a.sr}};
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

ojson report_json(const Report& r) {
    ojson j;
    j["suite"] = r.suite;
    j["tasks"] = ojson::array();
    for (const auto& t : r.tasks) {
        ojson tj{{"id", t.id}, {"category", t.category}, {"ok", t.ok}};
        if (!t.ok) {
            tj["error"] = t.error;
        } else {
            tj["termination"] = t.termination;
            tj["CR"] = t.metrics.cr;
            tj["OA"] = t.metrics.oa;
            tj["RA"] = t.metrics.ra;
            tj["Steps"] = t.metrics.steps;
            tj["Efficiency"] = t.metrics.efficiency;
            tj["SR"] = t.metrics.sr;
            tj["sr_failed_conditions"] = t.metrics.sr_detail.failed_conditions();
        }
        j["tasks"].push_back(tj);
    }
    j["categories"] = ojson::array();
    for (const auto& a : r.categories) j["categories"].push_back(aggregate_json(a));
    j["overall"] = aggregate_json(r.overall);
    return j;
}

std::string report_table(const Report& r) {
    const std::vector<std::string> head = {"Category", "Tasks", "CR", "OA", "RA", "Steps", "Efficiency", "SR"};
    std::vector<std::vector<std::string>> rows;
    auto add = [&](const Aggregate& a) {
        const bool any = a.evaluated > 0;
        rows.push_back({a.category, std::to_string(a.evaluated) + "/" + std::to_string(a.tasks),
                        any ? fmt("%.1f", a.cr) : "-", any ? fmt("%.1f", a.oa) : "-", any ? fmt("%.1f", a.ra) : "-",
                        any ? fmt("%.1f", a.steps) : "-", any ? fmt("%.2f", a.efficiency) : "-", fmt("%.1f", a.sr)});
    };
    for (const auto& a : r.categories) add(a);
    add(r.overall);

    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string pad(width[c] - cells[c].size(), ' ');
            s += c == 0 ? cells[c] + pad : "  " + pad + cells[c];
        }
        return s + "\n";
    };
    std::string out = line(head);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i + 1 == rows.size()) out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
        out += line(rows[i]);
    }
    return out;
}

}  // namespace mar::eval
