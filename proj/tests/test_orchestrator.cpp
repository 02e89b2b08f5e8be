#include "mar/core/error.hpp"
#include "mar/kb/trace.hpp"
#include "mar/orchestrator/run.hpp"
#include "mar/orchestrator/trajectory.hpp"

#include "ramen_fixture.hpp"

#include <doctest.h>

#include <functional>

using namespace mar;
using namespace mar::orch;

namespace {

using ActionAt = std::function<std::string(int)>;
using OutcomeAt = std::function<char(int)>;

// Four responses per step, never DONE.
agents::ProviderScript loop_script(int steps, const ActionAt& action, const OutcomeAt& outcome) {
    agents::ProviderScript s;
    for (int t = 1; t <= steps; ++t) {
        s.push_back({"Role: Manager", "PLAN: look around\nSUBTASK: Poke the screen\nAPP: Maps"});
        s.push_back({"Role: Operator", "THOUGHT: poke\nACTION: " + action(t)});
        const char o = outcome(t);
        std::string refl = std::string("OUTCOME: ") + o + "\nPROGRESS: step " + std::to_string(t);
        if (o != 'A') refl += "\nFEEDBACK: nothing happened";
        s.push_back({"Role: Action Reflector", refl});
        s.push_back({"Role: Notetaker", "NOTES: <unchanged>"});
    }
    return s;
}

std::string distinct_tap(int t) {
    return "Tap at {\"x\": " + std::to_string(100 + t) + ", \"y\": 3000}";
}

Trajectory run_script(agents::ProviderScript script, RunConfig cfg = {}) {
    env::SimulatedDevice device(env::Scenario::load(testing::ramen_dir() / "scenario.json"));
    agents::ScriptedProvider provider(std::move(script));
    const auto kb = retrieval::load_knowledge_base(testing::ramen_dir() / "kb", retrieval::make_embedder("fallback", true));
    RunContext ctx{device, provider, kb, cfg};
    return run_task(TaskInstruction::make("Find a ramen place"), ctx);
}

std::vector<ActionLogEntry> taps(std::initializer_list<std::pair<int, OutcomeLabel>> xs) {
    std::vector<ActionLogEntry> log;
    int step = 1;
    for (auto [x, o] : xs) log.push_back({action::Tap{x, 0}, o, step++});
    return log;
}

}  // namespace

TEST_CASE("ramen run terminates by DONE with every phase") {
    const auto traj = testing::run_ramen();
    REQUIRE(traj.termination == Termination::ManagerDone);
    CHECK(traj.completion_claimed);
    CHECK(traj.steps.size() == 9);
    CHECK(traj.final_manager.has_value());
    CHECK(traj.final_screen == "notes_saved");
    CHECK(traj.manager_retrieve_calls == 1);
    CHECK(traj.operator_retrieve_calls == 9);
    CHECK(traj.steps[0].manager_retrieved == std::vector<int>{0, 4, 3});
    for (const auto& s : traj.steps) {
        for (const char* p : {"perceive", "manage", "operate", "perceive_after", "reflect", "note"})
            CHECK_MESSAGE(s.has_phase(p), "step " << s.index << " lacks " << p);
        CHECK(s.operator_retrieval);
        CHECK(s.error.empty());
        if (s.index > 1) CHECK(s.manager_retrieved.empty());
    }
}

TEST_CASE("ramen run is deterministic after normalization") {
    CHECK(testing::normalized_dump(testing::run_ramen()) == testing::normalized_dump(testing::run_ramen()));
}

TEST_CASE("trajectory json round trip") {
    const auto dir = testing::scratch_dir("orch_roundtrip");
    const auto traj = testing::run_ramen(dir);
    const auto loaded = load_trajectory(dir);
    CHECK(to_json(loaded).dump() == to_json(traj).dump());
    CHECK(std::filesystem::exists(dir / "screenshots"));
    CHECK_THROWS_AS(trajectory_from_json(nlohmann::json{{"task", 3}}), InvalidTrajectory);
}

TEST_CASE("same tap every step hits the repetition cap") {
    const auto traj = run_script(loop_script(10, [](int) { return std::string("Tap at {\"x\": 50, \"y\": 3000}"); },
                                             [](int) { return 'C'; }));
    CHECK(traj.termination == Termination::RepetitionCap);
    CHECK(traj.steps.size() == 6);
    CHECK_FALSE(traj.completion_claimed);
}

TEST_CASE("a manager that never answers DONE runs out of steps") {
    const auto traj = run_script(loop_script(31, distinct_tap, [](int) { return 'A'; }));
    CHECK(traj.termination == Termination::MaxSteps);
    CHECK(traj.steps.size() == 30);
    CHECK_FALSE(traj.final_manager.has_value());
}

TEST_CASE("stored error flag matches recomputation from outcomes") {
    const std::string pattern = "ACCABCAACCCA";
    const auto traj = run_script(loop_script(static_cast<int>(pattern.size()), distinct_tap,
                                             [&](int t) { return pattern[static_cast<std::size_t>(t - 1)]; }));
    REQUIRE(traj.steps.size() == pattern.size());
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const bool expect = i >= 2 && pattern[i - 1] != 'A' && pattern[i - 2] != 'A';
        CHECK_MESSAGE(traj.steps[i].error_flag == expect, "step " << i + 1);
    }
    CHECK(traj.final_memory.error_log.size() == 7);
}

TEST_CASE("provider failure ends the run") {
    auto script = loop_script(2, distinct_tap, [](int) { return 'A'; });
    script.pop_back();  // step 2 has no notetaker answer
    const auto traj = run_script(script);
    CHECK(traj.termination == Termination::ProviderFailure);
    REQUIRE(traj.steps.size() == 2);
    CHECK(traj.steps[1].action.has_value());
    CHECK(traj.steps[1].error.find("provider") == 0);
    CHECK_FALSE(traj.termination_detail.empty());
}

TEST_CASE("malformed operator output is recorded and the loop goes on") {
    agents::ProviderScript s = {
        {"Role: Manager", "PLAN: p\nSUBTASK: Poke\nAPP: Maps"},
        {"Role: Operator", "ACTION: dance wildly"},
        {"Role: Manager", "PLAN: p\nSUBTASK: DONE"},
    };
    const auto traj = run_script(s);
    CHECK(traj.termination == Termination::ManagerDone);
    REQUIRE(traj.steps.size() == 1);
    CHECK_FALSE(traj.steps[0].action.has_value());
    CHECK(traj.steps[0].error.find("operator") == 0);
}

TEST_CASE("update_error_flag") {
    using O = OutcomeLabel;
    const std::vector<ErrorLogEntry> none;
    CHECK_FALSE(update_error_flag(none, {}));
    CHECK_FALSE(update_error_flag(none, taps({{1, O::FailedNoChange}})));
    CHECK(update_error_flag(none, taps({{1, O::FailedNoChange}, {2, O::FailedWrongPage}})));
    CHECK_FALSE(update_error_flag(none, taps({{1, O::FailedNoChange}, {2, O::Success}})));
    CHECK_FALSE(update_error_flag(none, taps({{1, O::FailedNoChange}, {2, O::Success}, {3, O::FailedNoChange}})));
    CHECK(update_error_flag(none, taps({{1, O::Success}, {2, O::FailedNoChange}, {3, O::FailedNoChange}})));
}

TEST_CASE("detect_repetition") {
    const auto ok = OutcomeLabel::Success;
    CHECK_FALSE(detect_repetition(taps({{1, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}}), 5));
    CHECK(detect_repetition(taps({{1, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}}), 5));
    CHECK_FALSE(detect_repetition(taps({{1, ok}, {1, ok}, {1, ok}, {2, ok}, {1, ok}, {1, ok}}), 5));
    CHECK(detect_repetition(taps({{2, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}, {1, ok}}), 5));
    CHECK(detect_repetition(std::vector<AtomicAction>{action::Back{}, action::Back{}}, 1));
    CHECK_FALSE(detect_repetition(std::vector<AtomicAction>{action::Tap{1, 2}, action::Tap{1, 3}}, 1));
}

TEST_CASE("trace logging during a run") {
    const auto staging = testing::scratch_dir("orch_trace");
    kb::TraceLogger logger(staging, "ramen_chicago_loop");
    const auto traj = testing::run_ramen({}, &logger);
    REQUIRE(logger.error().empty());
    const auto traces = kb::load_traces(staging);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].success);
    CHECK(traces[0].task_id == "ramen_chicago_loop");
    REQUIRE(traces[0].length() == traj.steps.size());
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        CHECK(traces[0].records[i].action == *traj.steps[i].action);
        CHECK(std::filesystem::exists(staging / traces[0].records[i].screenshot));
    }
}

TEST_CASE("run config validation") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
