#include "mar/orchestrator/trajectory.hpp"

#include "mar/core/error.hpp"

#include <fstream>

namespace mar::orch {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view termination_name(Termination t) {
    switch (t) {
    case Termination::ManagerDone: return "ManagerDone";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::RepetitionCap: return "RepetitionCap";
    case Termination::ProviderFailure: return "ProviderFailure";
    }
    return "?";
}

Termination termination_from_name(std::string_view s) {
    for (auto t : {Termination::ManagerDone, Termination::MaxSteps, Termination::RepetitionCap,
                   Termination::ProviderFailure})
        if (termination_name(t) == s) return t;
    throw InvalidTrajectory("unknown termination '" + std::string(s) + "'");
}

void RunConfig::validate() const {
    if (max_steps < 1) throw Error("max_steps must be >= 1");
    if (repeat_cap < 1) throw Error("repeat_cap must be >= 1");
    if (k_retrieve < 1) throw Error("k_retrieve must be >= 1");
    if (k_err < 0 || k_log < 0) throw Error("log tail sizes must be >= 0");
}

bool StepRecord::has_phase(std::string_view name) const {
    for (const auto& p : phases)
        if (p.name == name) return true;
    return false;
}

agents::TokenUsage ComponentUsage::total() const {
    agents::TokenUsage t;
    t += manager;
    t += op;
    t += reflector;
    t += notetaker;
    return t;
}

std::vector<AtomicAction> Trajectory::actions() const {
    std::vector<AtomicAction> out;
    for (const auto& s : steps)
        if (s.action) out.push_back(*s.action);
    return out;
}

namespace {

ojson usage_json(const agents::TokenUsage& u) { return ojson{{"input", u.input}, {"output", u.output}}; }

agents::TokenUsage usage_from(const json& j) {
    return agents::TokenUsage{j.at("input").get<long long>(), j.at("output").get<long long>()};
}

ojson call_json(const std::optional<CallRecord>& c) {
    if (!c) return nullptr;
    ojson j;
    j["prompt_sha256"] = c->prompt_sha256;
    j["images"] = c->images;
    j["usage"] = usage_json(c->usage);
    j["response"] = c->response;
    return j;
}

std::optional<CallRecord> call_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return CallRecord{j.at("prompt_sha256").get<std::string>(), j.at("images").get<std::size_t>(),
                      usage_from(j.at("usage")), j.at("response").get<std::string>()};
}

template <typename T>
ojson opt_json(const std::optional<T>& v) {
    if (!v) return nullptr;
    return *v;
}

ojson outcome_json(const std::optional<OutcomeLabel>& o) {
    if (!o) return nullptr;
    return std::string(1, outcome_code(*o));
}

std::optional<OutcomeLabel> outcome_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return outcome_from_code(j.get<std::string>());
}

template <typename T>
std::optional<T> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

ojson subtask_json(const Subtask& s) { return ojson{{"description", s.description}, {"app", s.app}}; }
Subtask subtask_from(const json& j) {
    return Subtask{j.at("description").get<std::string>(), j.at("app").get<std::string>()};
}

ojson memory_json(const WorkingMemory& m) {
    ojson j;
    j["step"] = m.step;
    j["plan"] = m.plan;
    j["subtask"] = subtask_json(m.subtask);
    j["progress"] = m.progress;
    j["notes"] = m.notes;
    j["error_flag"] = m.error_flag;
    j["action_log"] = ojson::array();
    for (const auto& e : m.action_log)
        j["action_log"].push_back(
            ojson{{"step", e.step}, {"action", render_action(e.action)}, {"outcome", std::string(1, outcome_code(e.outcome))}});
    j["error_log"] = ojson::array();
    for (const auto& e : m.error_log)
        j["error_log"].push_back(ojson{{"step", e.step}, {"action", render_action(e.action)}, {"feedback", e.feedback}});
    return j;
}

WorkingMemory memory_from(const json& j) {
    WorkingMemory m;
    m.step = j.at("step").get<int>();
    m.plan = j.at("plan").get<std::string>();
    m.subtask = subtask_from(j.at("subtask"));
    m.progress = j.at("progress").get<std::string>();
    m.notes = j.at("notes").get<std::string>();
    m.error_flag = j.at("error_flag").get<bool>();
    for (const auto& e : j.at("action_log"))
        m.action_log.push_back(ActionLogEntry{parse_action(e.at("action").get<std::string>()),
                                              outcome_from_code(e.at("outcome").get<std::string>()),
                                              e.at("step").get<int>()});
    for (const auto& e : j.at("error_log"))
        m.error_log.push_back(ErrorLogEntry{parse_action(e.at("action").get<std::string>()),
                                            e.at("feedback").get<std::string>(), e.at("step").get<int>()});
    return m;
}

ojson step_json(const StepRecord& s) {
    ojson j;
    j["index"] = s.index;
    j["error_flag"] = s.error_flag;
    j["phases"] = ojson::array();
    for (const auto& p : s.phases) j["phases"].push_back(ojson{{"name", p.name}, {"t_ms", p.t_ms}});
    j["manager"] = call_json(s.manager);
    j["manager_retrieved"] = s.manager_retrieved;
    j["plan"] = s.plan;
    j["subtask"] = subtask_json(s.subtask);
    j["operator_retrieval"] = s.operator_retrieval;
    j["operator_retrieved"] = opt_json(s.operator_retrieved);
    j["operator"] = call_json(s.op);
    j["action"] = s.action ? ojson(render_action(*s.action)) : ojson(nullptr);
    j["screenshot_before"] = s.screenshot_before;
    j["screenshot_after"] = s.screenshot_after;
    j["screen_before"] = s.screen_before;
    j["screen_after"] = s.screen_after;
    j["state_changed"] = opt_json(s.state_changed);
    j["oracle_outcome"] = outcome_json(s.oracle_outcome);
    j["operation_correct"] = opt_json(s.operation_correct);
    j["reflector"] = call_json(s.reflector);
    j["outcome"] = outcome_json(s.outcome);
    j["progress"] = s.progress;
    j["feedback"] = s.feedback;
    j["notetaker"] = call_json(s.notetaker);
    j["notes"] = s.notes;
    j["error"] = s.error;
    j["wall_ms"] = s.wall_ms;
    return j;
}

StepRecord step_from(const json& j) {
    StepRecord s;
    s.index = j.at("index").get<int>();
    s.error_flag = j.at("error_flag").get<bool>();
    for (const auto& p : j.at("phases"))
        s.phases.push_back(PhaseMark{p.at("name").get<std::string>(), p.at("t_ms").get<long long>()});
    s.manager = call_from(j.at("manager"));
    s.manager_retrieved = j.at("manager_retrieved").get<std::vector<int>>();
    s.plan = j.at("plan").get<std::string>();
    s.subtask = subtask_from(j.at("subtask"));
    s.operator_retrieval = j.at("operator_retrieval").get<bool>();
    s.operator_retrieved = opt_from<int>(j.at("operator_retrieved"));
    s.op = call_from(j.at("operator"));
    if (!j.at("action").is_null()) s.action = parse_action(j.at("action").get<std::string>());
    s.screenshot_before = j.at("screenshot_before").get<std::string>();
    s.screenshot_after = j.at("screenshot_after").get<std::string>();
    s.screen_before = j.at("screen_before").get<std::string>();
    s.screen_after = j.at("screen_after").get<std::string>();
    s.state_changed = opt_from<bool>(j.at("state_changed"));
    s.oracle_outcome = outcome_from(j.at("oracle_outcome"));
    s.operation_correct = opt_from<bool>(j.at("operation_correct"));
    s.reflector = call_from(j.at("reflector"));
    s.outcome = outcome_from(j.at("outcome"));
    s.progress = j.at("progress").get<std::string>();
    s.feedback = j.at("feedback").get<std::string>();
    s.notetaker = call_from(j.at("notetaker"));
    s.notes = j.at("notes").get<std::string>();
    s.error = j.at("error").get<std::string>();
    s.wall_ms = j.at("wall_ms").get<long long>();
    return s;
}

}  // namespace

ojson to_json(const Trajectory& t) {
    ojson j;
    j["task"] = t.task;
    const RunConfig& c = t.config;
    j["config"] = ojson{{"max_steps", c.max_steps}, {"repeat_cap", c.repeat_cap}, {"k_retrieve", c.k_retrieve},
                        {"k_err", c.k_err},         {"k_log", c.k_log},           {"max_tokens", c.max_tokens},
                        {"temperature", c.temperature}, {"provider", c.provider}, {"embedder", c.embedder},
                        {"backend", c.backend}};
    j["termination"] = t.termination ? ojson(std::string(termination_name(*t.termination))) : ojson(nullptr);
    j["termination_detail"] = t.termination_detail;
    j["completion_claimed"] = t.completion_claimed;
    j["final_screen"] = opt_json(t.final_screen);
    j["retrieval_calls"] = ojson{{"manager", t.manager_retrieve_calls}, {"operator", t.operator_retrieve_calls}};
    j["usage"] = ojson{{"manager", usage_json(t.usage.manager)},
                       {"operator", usage_json(t.usage.op)},
                       {"reflector", usage_json(t.usage.reflector)},
                       {"notetaker", usage_json(t.usage.notetaker)},
                       {"total", usage_json(t.usage.total())}};
    j["steps"] = ojson::array();
    for (const auto& s : t.steps) j["steps"].push_back(step_json(s));
    j["final_manager"] = call_json(t.final_manager);
    j["final_memory"] = memory_json(t.final_memory);
    j["started_at"] = t.started_at;
    j["finished_at"] = t.finished_at;
    return j;
}

Trajectory trajectory_from_json(const json& j) {
    try {
        Trajectory t;
        t.task = j.at("task").get<std::string>();
        const auto& c = j.at("config");
        t.config.max_steps = c.at("max_steps").get<int>();
        t.config.repeat_cap = c.at("repeat_cap").get<int>();
        t.config.k_retrieve = c.at("k_retrieve").get<int>();
        t.config.k_err = c.at("k_err").get<int>();
        t.config.k_log = c.at("k_log").get<int>();
        t.config.max_tokens = c.at("max_tokens").get<int>();
        t.config.temperature = c.at("temperature").get<double>();
        t.config.provider = c.at("provider").get<std::string>();
        t.config.embedder = c.at("embedder").get<std::string>();
        t.config.backend = c.at("backend").get<std::string>();
        if (!j.at("termination").is_null())
            t.termination = termination_from_name(j.at("termination").get<std::string>());
        t.termination_detail = j.at("termination_detail").get<std::string>();
        t.completion_claimed = j.at("completion_claimed").get<bool>();
        t.final_screen = opt_from<std::string>(j.at("final_screen"));
        t.manager_retrieve_calls = j.at("retrieval_calls").at("manager").get<int>();
        t.operator_retrieve_calls = j.at("retrieval_calls").at("operator").get<int>();
        const auto& u = j.at("usage");
        t.usage.manager = usage_from(u.at("manager"));
        t.usage.op = usage_from(u.at("operator"));
        t.usage.reflector = usage_from(u.at("reflector"));
        t.usage.notetaker = usage_from(u.at("notetaker"));
        for (const auto& s : j.at("steps")) t.steps.push_back(step_from(s));
        t.final_manager = call_from(j.at("final_manager"));
        t.final_memory = memory_from(j.at("final_memory"));
        t.started_at = j.at("started_at").get<std::string>();
        t.finished_at = j.at("finished_at").get<std::string>();
        return t;
    } catch (const json::exception& e) {
        throw InvalidTrajectory(std::string("malformed trajectory: ") + e.what());
    } catch (const ParseError& e) {
        throw InvalidTrajectory(std::string("malformed action in trajectory: ") + e.what());
    }
}

void normalize_timestamps(Trajectory& t) {
    t.started_at.clear();
    t.finished_at.clear();
    for (auto& s : t.steps) {
        s.wall_ms = 0;
        for (auto& p : s.phases) p.t_ms = 0;
    }
}

void save_trajectory(const fs::path& dir, const Trajectory& t) {
    fs::create_directories(dir);
    std::ofstream out(dir / kTrajectoryFile, std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / kTrajectoryFile).string());
    out << to_json(t).dump(2) << '\n';
}

Trajectory load_trajectory(const fs::path& dir) {
    const fs::path file = fs::is_directory(dir) ? dir / kTrajectoryFile : dir;
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidTrajectory(file.string() + ": " + e.what());
    }
    return trajectory_from_json(j);
}

bool update_error_flag(const std::vector<ErrorLogEntry>&, const std::vector<ActionLogEntry>& action_log) {
    const std::size_t n = action_log.size();
    if (n < 2) return false;
    return action_log[n - 1].outcome != OutcomeLabel::Success && action_log[n - 2].outcome != OutcomeLabel::Success;
}

bool detect_repetition(const std::vector<AtomicAction>& actions, int cap) {
    const std::size_t need = static_cast<std::size_t>(cap) + 1;
    if (cap < 0 || actions.size() < need) return false;
    const AtomicAction& last = actions.back();
    for (std::size_t i = actions.size() - need; i < actions.size(); ++i)
        if (!(actions[i] == last)) return false;
    return true;
}

bool detect_repetition(const std::vector<ActionLogEntry>& action_log, int cap) {
    std::vector<AtomicAction> actions;
    actions.reserve(action_log.size());
    for (const auto& e : action_log) actions.push_back(e.action);
    return detect_repetition(actions, cap);
}

}  // namespace mar::orch
