#include "mar/eval/metrics.hpp"

#include "mar/core/error.hpp"

namespace mar::eval {

double compute_cr(int completed, int total) {
    if (total <= 0) throw InvalidCriteria("criteria list is empty");
    if (completed < 0 || completed > total) throw InvalidCriteria("completed count outside [0, total]");
    return 100.0 * completed / total;
}

namespace {

double step_ratio(int count, int steps, const char* what) {
    if (steps <= 0) throw InvalidTrajectory("trajectory has no steps");
    if (count < 0 || count > steps) throw InvalidTrajectory(std::string(what) + " count outside [0, steps]");
    return 100.0 * count / steps;
}

}  // namespace

double compute_oa(int correct_ops, int steps) { return step_ratio(correct_ops, steps, "correct operation"); }
double compute_ra(int correct_reflections, int steps) {
    return step_ratio(correct_reflections, steps, "correct reflection");
}

double compute_efficiency(double cr, double steps) {
    if (steps <= 0) throw InvalidTrajectory("trajectory has no steps");
    return cr / steps;
}

std::vector<int> SrVerdict::failed_conditions() const {
    std::vector<int> out;
    if (!within_steps) out.push_back(1);
    if (!no_erroneous_completion) out.push_back(2);
    if (!no_repetition) out.push_back(3);
    return out;
}

SrVerdict judge_sr(int steps, bool completed, bool repetition, bool erroneous_completion) {
    SrVerdict v;
    v.within_steps = completed && steps <= kSrStepLimit;
    v.no_erroneous_completion = !erroneous_completion;
    v.no_repetition = !repetition;
    v.success = v.within_steps && v.no_erroneous_completion && v.no_repetition;
    return v;
}

int longest_identical_run(const std::vector<AtomicAction>& actions) {
    int best = 0;
    int run = 0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        run = (i > 0 && actions[i] == actions[i - 1]) ? run + 1 : 1;
        best = std::max(best, run);
    }
    return best;
}

SrVerdict judge_sr(const orch::Trajectory& traj, bool erroneous_completion) {
    const bool completed = traj.termination == orch::Termination::ManagerDone;
    const bool repetition = longest_identical_run(traj.actions()) > kSrRepeatCap;
    return judge_sr(static_cast<int>(traj.steps.size()), completed, repetition, erroneous_completion);
}

int correct_operations(const orch::Trajectory& traj) {
    int n = 0;
    for (const auto& s : traj.steps) n += s.operation_correct.value_or(false) ? 1 : 0;
    return n;
}

int correct_reflections(const orch::Trajectory& traj) {
    int n = 0;
    for (const auto& s : traj.steps) n += (s.outcome && s.oracle_outcome && *s.outcome == *s.oracle_outcome) ? 1 : 0;
    return n;
}

}  // namespace mar::eval
