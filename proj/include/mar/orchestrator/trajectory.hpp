#pragma once

#include "mar/agents/provider.hpp"
#include "mar/core/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mar::orch {

enum class Termination { ManagerDone, MaxSteps, RepetitionCap, ProviderFailure };

std::string_view termination_name(Termination t);
Termination termination_from_name(std::string_view s);

struct RunConfig {
    int max_steps = 30;
    int repeat_cap = 5;
    int k_retrieve = 3;
    int k_err = 3;
    int k_log = 5;
    int max_tokens = agents::kDefaultMaxTokens;
    double temperature = agents::kDefaultTemperature;
    // Descriptive only; recorded in the trajectory.
    std::string provider;
    std::string embedder;
    std::string backend;

    // Throws mar::Error when a bound is below 1.
    void validate() const;
};

// One model call as persisted: the prompt is kept as a digest only.
struct CallRecord {
    std::string prompt_sha256;
    std::size_t images = 0;
    agents::TokenUsage usage;
    std::string response;
};

struct PhaseMark {
    std::string name;  // perceive, manage, operate, perceive_after, reflect, note
    long long t_ms = 0;  // since run start
};

struct StepRecord {
    int index = 0;
    bool error_flag = false;  // F as seen by this step's Manager prompt
    std::vector<PhaseMark> phases;

    std::optional<CallRecord> manager;
    std::vector<int> manager_retrieved;  // t = 1 only
    std::string plan;
    Subtask subtask;

    bool operator_retrieval = false;  // operator_retrieve was called
    std::optional<int> operator_retrieved;
    std::optional<CallRecord> op;
    std::optional<AtomicAction> action;

    std::string screenshot_before;
    std::string screenshot_after;
    std::string screen_before;
    std::string screen_after;
    std::optional<bool> state_changed;
    std::optional<OutcomeLabel> oracle_outcome;
    std::optional<bool> operation_correct;

    std::optional<CallRecord> reflector;
    std::optional<OutcomeLabel> outcome;
    std::string progress;
    std::string feedback;

    std::optional<CallRecord> notetaker;
    std::string notes;

    std::string error;
    long long wall_ms = 0;

    bool has_phase(std::string_view name) const;
};

struct ComponentUsage {
    agents::TokenUsage manager;
    agents::TokenUsage op;
    agents::TokenUsage reflector;
    agents::TokenUsage notetaker;
    agents::TokenUsage total() const;
};

struct Trajectory {
    std::string task;
    RunConfig config;
    std::vector<StepRecord> steps;
    std::optional<CallRecord> final_manager;  // the call that answered DONE
    WorkingMemory final_memory;
    std::optional<Termination> termination;
    std::string termination_detail;
    bool completion_claimed = false;
    std::optional<std::string> final_screen;  // simulator only
    int manager_retrieve_calls = 0;
    int operator_retrieve_calls = 0;
    ComponentUsage usage;
    std::string started_at;
    std::string finished_at;

    // Executed Operator actions in step order.
    std::vector<AtomicAction> actions() const;
};

nlohmann::ordered_json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

// Clears wall-clock fields so two runs can be compared byte for byte.
void normalize_timestamps(Trajectory& t);

inline constexpr const char* kTrajectoryFile = "trajectory.json";

void save_trajectory(const std::filesystem::path& dir, const Trajectory& t);
Trajectory load_trajectory(const std::filesystem::path& dir);

// True iff the last two entries of the action log both failed.
bool update_error_flag(const std::vector<ErrorLogEntry>& error_log, const std::vector<ActionLogEntry>& action_log);

// True iff the last cap + 1 logged actions are identical, arguments included.
bool detect_repetition(const std::vector<ActionLogEntry>& action_log, int cap);
bool detect_repetition(const std::vector<AtomicAction>& actions, int cap);

}  // namespace mar::orch
