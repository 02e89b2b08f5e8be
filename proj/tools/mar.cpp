// mar: run, evaluate and benchmark the agent, and build its knowledge bases.
#include "mar/core/error.hpp"
#include "mar/env/adb.hpp"
#include "mar/env/simulator.hpp"
#include "mar/eval/benchmark.hpp"
#include "mar/eval/criteria.hpp"
#include "mar/kb/builder.hpp"
#include "mar/kb/trace.hpp"
#include "mar/orchestrator/run.hpp"
#include "mar/retrieval/kb_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace mar;

namespace {

std::string read_task(const std::string& arg) {
    if (fs::is_regular_file(arg)) {
        std::ifstream in(arg);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string s = ss.str();
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
        return s;
    }
    return arg;
}

std::unique_ptr<agents::ModelProvider> make_provider(const std::string& spec) {
    if (spec.rfind("scripted:", 0) == 0)
        return std::make_unique<agents::ScriptedProvider>(agents::load_script(spec.substr(9)));
    if (spec == "http") return std::make_unique<agents::HttpProvider>(agents::HttpProvider::from_env());
    if (spec.rfind("http:", 0) == 0)
        return std::make_unique<agents::HttpProvider>(spec.substr(5),
                                                      std::getenv("MAR_PROVIDER_KEY") ? std::getenv("MAR_PROVIDER_KEY") : "");
    throw Error("unknown provider '" + spec + "' (expected scripted:<file>, http or http:<url>)");
}

struct RunArgs {
    std::string task;
    std::string scenario;
    std::string serial;
    std::string packages;
    std::string provider;
    std::string kb;
    std::string embedder = "fallback";
    std::string log_kb;
    std::string out;
    orch::RunConfig cfg;
};

int cmd_run(const RunArgs& a) {
    std::unique_ptr<env::DeviceBackend> device;
    if (!a.scenario.empty()) {
        device = std::make_unique<env::SimulatedDevice>(env::Scenario::load(a.scenario));
    } else if (!a.serial.empty()) {
        env::PackageMap packages;
        if (!a.packages.empty()) packages = env::load_package_map(a.packages);
        device = std::make_unique<env::AdbDevice>(a.serial, std::move(packages));
    } else {
        throw Error("either --scenario or --serial is required");
    }
    auto provider = make_provider(a.provider);
    auto embedder = retrieval::make_embedder(a.embedder, true);
    const auto kb = retrieval::load_knowledge_base(a.kb, embedder);
    const auto task = TaskInstruction::make(read_task(a.task));

    orch::RunConfig cfg = a.cfg;
    cfg.provider = a.provider.rfind("scripted:", 0) == 0 ? "scripted" : provider->name();
    cfg.embedder = embedder->name();
    std::unique_ptr<kb::TraceLogger> trace;
    if (!a.log_kb.empty()) trace = std::make_unique<kb::TraceLogger>(a.log_kb, task.text);
    orch::RunContext ctx{*device, *provider, kb, cfg, trace.get(), a.out};
    const auto traj = orch::run_task(task, ctx);

    std::cout << "termination: " << orch::termination_name(*traj.termination);
    if (!traj.termination_detail.empty()) std::cout << " (" << traj.termination_detail << ")";
    std::cout << "\nsteps: " << traj.steps.size() << "\n";
    const auto usage = traj.usage.total();
    std::cout << "tokens: " << usage.input << " in, " << usage.output << " out\n";
    std::cout << "trajectory: " << (fs::path(a.out) / orch::kTrajectoryFile).string() << "\n";
    if (trace) {
        if (!trace->error().empty()) std::cerr << "warning: trace logging stopped: " << trace->error() << "\n";
        else std::cout << "trace: " << trace->run_id() << "\n";
    }
    return traj.termination == orch::Termination::ProviderFailure ? 3 : 0;
}

int cmd_eval(const std::string& trajectory, const std::string& criteria_file, const std::string& judgments_file,
             const std::string& scenario_file, const std::string& annotation_file) {
    const auto traj = orch::load_trajectory(trajectory);
    const auto criteria = eval::CompletionCriteria::load(criteria_file);
    const auto judgments = judgments_file.empty() ? eval::ManualJudgments{} : eval::load_judgments(judgments_file);
    std::optional<env::Scenario> scenario;
    if (!scenario_file.empty()) scenario = env::Scenario::load(scenario_file);
    const auto result = eval::evaluate_criteria(traj, scenario ? &*scenario : nullptr, criteria, judgments);
    const auto metrics = eval::compute_metrics(traj, result, eval::load_annotation(annotation_file));
    std::cout << eval::metrics_json(metrics, result, criteria).dump(2) << "\n";
    for (int i : result.unjudged)
        std::cerr << "warning: manual item " << i << " has no judgment; counted as not completed\n";
    return 0;
}

int cmd_bench(const std::string& suite_file, const std::string& out, int workers, const std::string& embedder_spec,
              const orch::RunConfig& cfg) {
    const auto suite = eval::Suite::load(suite_file);
    auto embedder = retrieval::make_embedder(embedder_spec, true);
    orch::RunConfig c = cfg;
    c.provider = "scripted";
    c.embedder = embedder->name();
    const auto report = eval::run_benchmark(suite, c, embedder, out, workers);
    std::cout << eval::report_table(report);
    for (const auto& t : report.tasks)
        if (!t.ok) std::cerr << "task " << t.id << " failed: " << t.error << "\n";
    return 0;
}

int cmd_kb_log(const std::string& staging) {
    const auto traces = kb::load_traces(staging);
    for (const auto& t : traces)
        std::cout << t.run_id << "  task=\"" << t.task_id << "\"  steps=" << t.length()
                  << "  success=" << (t.success ? "yes" : "no") << "\n";
    std::cout << traces.size() << " trace(s)\n";
    return 0;
}

int cmd_kb_filter(const std::string& in, const std::string& out) {
    const auto traces = kb::load_traces(in);
    const auto kept = kb::filter_traces(traces);
    kb::write_filtered_staging(in, kept, out);
    std::size_t entries = 0;
    for (const auto& t : kept) entries += t.length();
    std::cout << "kept " << kept.size() << " of " << traces.size() << " trace(s); " << entries << " record(s)\n";
    return 0;
}

int cmd_kb_build_manager(const std::string& in, const std::string& out) {
    const auto docs = kb::build_manager_kb(kb::read_manager_tasks(in));
    retrieval::write_manager_docs(out, docs);
    std::cout << "wrote " << docs.size() << " manager doc(s) to " << out << "\n";
    return 0;
}

std::string prompt_line(const std::string& question) {
    std::cout << question << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) throw Error("input closed during review");
    return line;
}

// Asks for a verdict on every staged entry that has none yet, saving after each answer.
void review(const std::vector<retrieval::OperatorDoc>& entries, std::vector<kb::CurationDecision>& decisions,
            const fs::path& file) {
    std::set<int> done;
    for (const auto& d : decisions) done.insert(d.entry_id);
    std::size_t pending = 0;
    for (const auto& e : entries) pending += done.count(e.id) ? 0 : 1;
    std::size_t seen = 0;
    for (const auto& e : entries) {
        if (done.count(e.id)) continue;
        ++seen;
        std::cout << "\n[" << seen << "/" << pending << "] entry " << e.id << "\n  app:        " << e.app
                  << "\n  subtask:    " << e.subtask << "\n  action:     " << render_action(e.action)
                  << "\n  screenshot: " << e.screenshot << "\n";
        for (;;) {
            const std::string answer = prompt_line("accept / reject / edit / quit [a/r/e/q]: ");
            kb::CurationDecision d{e.id, kb::Verdict::Accept, std::nullopt};
            if (answer == "q") return;
            if (answer == "a") {
                d.verdict = kb::Verdict::Accept;
            } else if (answer == "r") {
                d.verdict = kb::Verdict::Reject;
            } else if (answer == "e") {
                retrieval::OperatorDoc doc = e;
                if (auto s = prompt_line("  subtask [" + e.subtask + "]: "); !s.empty()) doc.subtask = s;
                if (auto s = prompt_line("  app [" + e.app + "]: "); !s.empty()) doc.app = s;
                for (;;) {
                    auto s = prompt_line("  action [" + render_action(e.action) + "]: ");
                    if (s.empty()) break;
                    try {
                        doc.action = parse_action(s);
                        break;
                    } catch (const ParseError& err) {
                        std::cout << "  " << err.what() << "\n";
                    }
                }
                d.verdict = kb::Verdict::Edit;
                d.replacement = std::move(doc);
            } else {
                continue;
            }
            decisions.push_back(std::move(d));
            kb::save_decisions(file, decisions);
            break;
        }
    }
}

int cmd_kb_curate(const std::string& staging, const std::string& decisions_file, const std::string& out,
                  bool interactive) {
    const auto entries = kb::load_staged_entries(staging);
    auto decisions = kb::load_decisions(decisions_file);
    if (interactive) review(entries, decisions, decisions_file);
    const auto summary = kb::curate(staging, decisions, out);
    for (const auto& [app, n] : summary.per_app) std::cout << app << ": " << n << " doc(s)\n";
    std::cout << "accepted " << summary.accepted << ", edited " << summary.edited << ", rejected " << summary.rejected
              << "\n";
    return 0;
}

void add_run_config(CLI::App* cmd, orch::RunConfig& cfg) {
    cmd->add_option("--max-steps", cfg.max_steps, "Step budget")->check(CLI::PositiveNumber);
    cmd->add_option("--repeat-cap", cfg.repeat_cap, "Identical actions allowed in a row")->check(CLI::PositiveNumber);
    cmd->add_option("--k", cfg.k_retrieve, "Manager exemplars to retrieve")->check(CLI::PositiveNumber);
    cmd->add_option("--k-err", cfg.k_err, "Error-log tail shown to the Manager");
    cmd->add_option("--k-log", cfg.k_log, "Log tail shown to the Operator");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented multi-agent mobile automation"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one task");
    run_cmd->add_option("--task", run.task, "Instruction text, or a file holding it")->required();
    run_cmd->add_option("--scenario", run.scenario, "Simulator scenario file");
    run_cmd->add_option("--serial", run.serial, "adb device serial (real device)");
    run_cmd->add_option("--packages", run.packages, "App-to-package map for --serial");
    run_cmd->add_option("--provider", run.provider, "scripted:<file>, http, or http:<url>")->required();
    run_cmd->add_option("--kb", run.kb, "Knowledge-base directory")->required();
    run_cmd->add_option("--embedder", run.embedder, "fallback or http:<url>");
    run_cmd->add_option("--log-kb", run.log_kb, "Staging directory for trace logging");
    run_cmd->add_option("--out", run.out, "Output directory")->required();
    add_run_config(run_cmd, run.cfg);

    std::string traj_path, criteria_path, judgments_path, scenario_path, annotation_path;
    auto* eval_cmd = app.add_subcommand("eval", "Score a recorded trajectory");
    eval_cmd->add_option("--trajectory", traj_path, "Trajectory directory or file")->required();
    eval_cmd->add_option("--criteria", criteria_path, "Completion criteria file")->required();
    eval_cmd->add_option("--judgments", judgments_path, "Manual judgments (item index -> bool)");
    eval_cmd->add_option("--scenario", scenario_path, "Scenario, to map visited screens to apps");
    eval_cmd->add_option("--annotation", annotation_path, "Real-device annotation file");

    std::string suite_path, bench_out, bench_embedder = "fallback";
    int workers = 1;
    orch::RunConfig bench_cfg;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite");
    bench_cmd->add_option("--suite", suite_path, "Suite file")->required();
    bench_cmd->add_option("--out", bench_out, "Output directory")->required();
    bench_cmd->add_option("--workers", workers, "Parallel tasks")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--embedder", bench_embedder, "fallback or http:<url>");
    add_run_config(bench_cmd, bench_cfg);

    auto* kb_cmd = app.add_subcommand("kb", "Knowledge-base tools");
    kb_cmd->require_subcommand(1);
    std::string staging, kb_in, kb_out, decisions_path;
    bool no_review = false;
    auto* log_cmd = kb_cmd->add_subcommand("log", "List traces logged with run --log-kb");
    log_cmd->add_option("--staging", staging, "Staging directory")->required();
    auto* filter_cmd = kb_cmd->add_subcommand("filter", "Keep the shortest successful trace per task");
    filter_cmd->add_option("--in", kb_in, "Staging directory")->required();
    filter_cmd->add_option("--out", kb_out, "Filtered staging directory")->required();
    auto* manager_cmd = kb_cmd->add_subcommand("build-manager", "Build the Manager KB from task/steps pairs");
    manager_cmd->add_option("--in", kb_in, "TSV or JSON input")->required();
    manager_cmd->add_option("--out", kb_out, "manager.jsonl output")->required();
    auto* curate_cmd = kb_cmd->add_subcommand("curate", "Review staged entries and emit per-app libraries");
    curate_cmd->add_option("--staging", staging, "Filtered staging directory")->required();
    curate_cmd->add_option("--decisions", decisions_path, "Decisions file (created or resumed)")->required();
    curate_cmd->add_option("--out", kb_out, "KB directory")->required();
    curate_cmd->add_flag("--no-review", no_review, "Use the decisions file as is");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*eval_cmd) return cmd_eval(traj_path, criteria_path, judgments_path, scenario_path, annotation_path);
        if (*bench_cmd) return cmd_bench(suite_path, bench_out, workers, bench_embedder, bench_cfg);
        if (*log_cmd) return cmd_kb_log(staging);
        if (*filter_cmd) return cmd_kb_filter(kb_in, kb_out);
        if (*manager_cmd) return cmd_kb_build_manager(kb_in, kb_out);
        if (*curate_cmd) return cmd_kb_curate(staging, decisions_path, kb_out, !no_review && isatty(STDIN_FILENO));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
