#include "mar/orchestrator/run.hpp"

#include "mar/agents/prompts.hpp"
#include "mar/agents/roles.hpp"
#include "mar/core/digest.hpp"
#include "mar/core/error.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace mar::orch {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CallRecord call_record(const agents::ModelRequest& req, const agents::ModelResponse& resp) {
    return CallRecord{sha256_hex(req.flattened()), req.image_count(), resp.usage, resp.text};
}

// Reference screenshot of a KB entry; a missing file yields an empty image.
agents::ImagePart exemplar_image(const fs::path& root, const retrieval::OperatorDoc& doc) {
    std::string payload;
    if (std::ifstream in(root / doc.screenshot, std::ios::binary); in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        payload = ss.str();
    }
    const bool png = fs::path(doc.screenshot).extension() == ".png";
    const std::string digest = payload.empty() ? std::string("missing") : sha256_hex(payload).substr(0, 16);
    return agents::ImagePart{"kb:" + digest, png ? "image/png" : "application/json", std::move(payload)};
}

class Run {
public:
    Run(const TaskInstruction& task, RunContext& ctx) : task_(task), ctx_(ctx), start_(Clock::now()) {
        ctx_.config.validate();
        pcfg_.k_err = ctx_.config.k_err;
        pcfg_.k_log = ctx_.config.k_log;
        pcfg_.max_tokens = ctx_.config.max_tokens;
        pcfg_.temperature = ctx_.config.temperature;
        pcfg_.apps = ctx_.device.apps();
        traj_.task = task.text;
        traj_.config = ctx_.config;
        if (traj_.config.backend.empty()) traj_.config.backend = ctx_.device.id();
        if (traj_.config.provider.empty()) traj_.config.provider = ctx_.provider.name();
        traj_.started_at = utc_now();
    }

    Trajectory run() {
        Screenshot current = ctx_.device.capture_screenshot();
        PerceptionResult view = ctx_.device.perceptor().perceive(current);
        while (!traj_.termination) {
            const bool last = iteration(current, view);
            if (last) break;
            ++mem_.step;
        }
        traj_.final_memory = mem_;
        if (!current.screen_id.empty()) traj_.final_screen = current.screen_id;
        traj_.finished_at = utc_now();
        if (ctx_.trace) ctx_.trace->finish(traj_.termination == Termination::ManagerDone);
        if (!ctx_.out_dir.empty()) save_trajectory(ctx_.out_dir, traj_);
        return std::move(traj_);
    }

private:
    long long elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start_).count();
    }

    void mark(StepRecord& rec, const char* phase) { rec.phases.push_back(PhaseMark{phase, elapsed_ms()}); }

    std::string save_shot(const Screenshot& s) {
        if (ctx_.out_dir.empty()) return s.ref();
        return kb::store_screenshot(ctx_.out_dir, s);
    }

    void finish(Termination t, std::string detail = {}) {
        traj_.termination = t;
        traj_.termination_detail = std::move(detail);
    }

    // Returns true when the loop must stop after this iteration.
    bool iteration(Screenshot& current, PerceptionResult& view) {
        const auto t0 = Clock::now();
        StepRecord rec;
        rec.index = mem_.step;
        rec.error_flag = mem_.error_flag;
        rec.screenshot_before = save_shot(current);
        rec.screen_before = current.screen_id;
        mark(rec, "perceive");
        bool executed = false;

        auto push = [&] {
            rec.wall_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
            traj_.steps.push_back(std::move(rec));
        };

        try {
            // Manage
            std::vector<retrieval::ManagerDoc> exemplars;
            if (mem_.step == 1) {
                exemplars = retrieval::manager_retrieve(task_.text, ctx_.kb.manager, ctx_.config.k_retrieve);
                ++traj_.manager_retrieve_calls;
                for (const auto& d : exemplars) rec.manager_retrieved.push_back(d.id);
            }
            const auto mreq = agents::prompt_gen_manager(task_, mem_, current, exemplars, pcfg_);
            mark(rec, "manage");
            agents::ManagerDecision decision;
            try {
                auto res = agents::manager_step(ctx_.provider, mreq, pcfg_.apps);
                traj_.usage.manager += res.response.usage;
                rec.manager = call_record(mreq, res.response);
                decision = std::move(res.value);
            } catch (const ResponseFormatError& e) {
                rec.error = std::string("manager: ") + e.what();
                push();
                return at_step_end();
            }
            if (decision.done) {
                traj_.final_manager = rec.manager;
                if (!decision.plan.empty()) mem_.plan = decision.plan;
                traj_.completion_claimed = true;
                finish(Termination::ManagerDone);
                return true;
            }
            mem_.plan = decision.plan;
            mem_.subtask = decision.subtask;
            rec.plan = mem_.plan;
            rec.subtask = mem_.subtask;

            // Operate
            std::optional<agents::RetrievedExemplar> exemplar;
            auto doc = retrieval::operator_retrieve(mem_.subtask.description, mem_.subtask.app, ctx_.kb.operators);
            ++traj_.operator_retrieve_calls;
            rec.operator_retrieval = true;
            if (doc) {
                rec.operator_retrieved = doc->id;
                exemplar = agents::RetrievedExemplar{*doc, exemplar_image(ctx_.kb.root, *doc)};
            }
            const auto oreq = agents::prompt_gen_operator(task_, mem_, current, view, exemplar, pcfg_);
            mark(rec, "operate");
            AtomicAction action;
            try {
                auto res = agents::operator_step(ctx_.provider, oreq);
                traj_.usage.op += res.response.usage;
                rec.op = call_record(oreq, res.response);
                action = std::move(res.value);
            } catch (const ResponseFormatError& e) {
                rec.error = std::string("operator: ") + e.what();
                push();
                return at_step_end();
            } catch (const ParseError& e) {
                rec.error = std::string("operator: ") + e.what();
                push();
                return at_step_end();
            }
            rec.action = action;

            try {
                validate_action(action, current);
            } catch (const OutOfBounds& e) {
                rec.error = e.what();
                rec.outcome = OutcomeLabel::FailedNoChange;
                rec.feedback = e.what();
                rec.screenshot_after = rec.screenshot_before;
                rec.screen_after = rec.screen_before;
                mem_.record(action, OutcomeLabel::FailedNoChange, e.what());
                mem_.error_flag = update_error_flag(mem_.error_log, mem_.action_log);
                push();
                return at_step_end();
            }

            if (ctx_.trace) ctx_.trace->log_step(mem_.subtask.description, mem_.subtask.app, current, action);
            env::Execution exec;
            try {
                exec = ctx_.device.execute(action);
            } catch (const ProviderError&) {
                throw;
            } catch (const Error& e) {
                rec.error = std::string("device: ") + e.what();
                rec.outcome = OutcomeLabel::FailedNoChange;
                rec.feedback = rec.error;
                rec.screenshot_after = rec.screenshot_before;
                rec.screen_after = rec.screen_before;
                mem_.record(action, OutcomeLabel::FailedNoChange, rec.error);
                mem_.error_flag = update_error_flag(mem_.error_log, mem_.action_log);
                push();
                return at_step_end();
            }
            executed = true;
            rec.state_changed = exec.state_changed;
            rec.oracle_outcome = exec.oracle_outcome;
            rec.operation_correct = exec.operation_correct;

            // Perceive after
            Screenshot after = ctx_.device.capture_screenshot();
            PerceptionResult view_after = ctx_.device.perceptor().perceive(after);
            rec.screenshot_after = save_shot(after);
            rec.screen_after = after.screen_id;
            mark(rec, "perceive_after");

            // Reflect
            const auto rreq = agents::prompt_gen_reflector(task_, mem_.subtask, action, current, after, view,
                                                           view_after, mem_.progress, pcfg_);
            mark(rec, "reflect");
            agents::Reflection refl;
            try {
                auto res = agents::reflect_step(ctx_.provider, rreq);
                traj_.usage.reflector += res.response.usage;
                rec.reflector = call_record(rreq, res.response);
                refl = std::move(res.value);
            } catch (const ResponseFormatError& e) {
                rec.error = std::string("reflector: ") + e.what();
                refl.outcome = OutcomeLabel::FailedNoChange;
                refl.progress = mem_.progress;
                refl.feedback = e.what();
            }
            rec.outcome = refl.outcome;
            rec.feedback = refl.feedback;
            mem_.record(action, refl.outcome, refl.feedback);
            mem_.progress = refl.progress;
            rec.progress = mem_.progress;
            mem_.error_flag = update_error_flag(mem_.error_log, mem_.action_log);

            // Note
            const auto nreq = agents::prompt_gen_notetaker(task_, mem_.plan, mem_.subtask, after, view_after,
                                                           mem_.progress, mem_.notes, pcfg_);
            mark(rec, "note");
            try {
                auto res = agents::notetake_step(ctx_.provider, nreq, mem_.notes);
                traj_.usage.notetaker += res.response.usage;
                rec.notetaker = call_record(nreq, res.response);
                mem_.notes = std::move(res.value);
            } catch (const ResponseFormatError& e) {
                if (rec.error.empty()) rec.error = std::string("notetaker: ") + e.what();
            }
            rec.notes = mem_.notes;

            current = std::move(after);
            view = std::move(view_after);
            push();
            return at_step_end();
        } catch (const ProviderError& e) {
            rec.error = std::string("provider: ") + e.what();
            if (executed) push();
            finish(Termination::ProviderFailure, e.what());
            return true;
        }
    }

    bool at_step_end() {
        if (detect_repetition(mem_.action_log, ctx_.config.repeat_cap)) {
            finish(Termination::RepetitionCap);
            return true;
        }
        if (mem_.step >= ctx_.config.max_steps) {
            finish(Termination::MaxSteps);
            return true;
        }
        return false;
    }

    const TaskInstruction& task_;
    RunContext& ctx_;
    Clock::time_point start_;
    agents::PromptConfig pcfg_;
    WorkingMemory mem_;
    Trajectory traj_;
};

}  // namespace

Trajectory run_task(const TaskInstruction& task, RunContext& ctx) { return Run(task, ctx).run(); }

}  // namespace mar::orch
