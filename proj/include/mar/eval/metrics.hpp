#pragma once

#include "mar/orchestrator/trajectory.hpp"

#include <string>
#include <vector>

namespace mar::eval {

inline constexpr int kSrStepLimit = 30;
inline constexpr int kSrRepeatCap = 5;  // more than this many identical actions in a row fails SR

// Percentages in [0, 100].
double compute_cr(int completed, int total);
double compute_oa(int correct_ops, int steps);
double compute_ra(int correct_reflections, int steps);
double compute_efficiency(double cr, double steps);

struct SrVerdict {
    bool success = false;
    bool within_steps = false;       // completed, in at most 30 steps
    bool no_erroneous_completion = false;
    bool no_repetition = false;

    std::vector<int> failed_conditions() const;  // 1-based condition numbers
};

SrVerdict judge_sr(int steps, bool completed, bool repetition, bool erroneous_completion);
SrVerdict judge_sr(const orch::Trajectory& traj, bool erroneous_completion);

// Longest run of identical consecutive actions.
int longest_identical_run(const std::vector<AtomicAction>& actions);

int correct_operations(const orch::Trajectory& traj);
int correct_reflections(const orch::Trajectory& traj);

struct MetricsRecord {
    double cr = 0;
    double oa = 0;
    double ra = 0;
    int steps = 0;
    double efficiency = 0;
    bool sr = false;
    SrVerdict sr_detail;
    bool erroneous_completion = false;
};

}  // namespace mar::eval
