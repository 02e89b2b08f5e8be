#pragma once

#include "mar/env/scenario.hpp"
#include "mar/eval/metrics.hpp"
#include "mar/orchestrator/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mar::eval {

enum class PredicateKind { OpenedApp, ExecutedActionMatching, VisitedScreen, NoteContains, Manual };

std::string_view kind_name(PredicateKind k);

struct CompletionPredicate {
    PredicateKind kind = PredicateKind::Manual;
    std::string arg;  // app name, regex, screen id or substring; empty for manual
    std::string description;
};

struct CompletionCriteria {
    std::string task_id;
    std::vector<CompletionPredicate> items;

    // {"task_id", "items": [{"kind", "args": {...}, "description"}]}. Throws InvalidCriteria
    // on unknown kinds, missing arguments, bad regexes, or an item count other than 8 or 10.
    static CompletionCriteria from_json(const nlohmann::json& j);
    static CompletionCriteria load(const std::filesystem::path& file);
};

// Item index (0-based, position in `items`) -> human verdict.
using ManualJudgments = std::map<int, bool>;
ManualJudgments load_judgments(const std::filesystem::path& file);

struct CriteriaResult {
    int completed = 0;
    std::vector<bool> items;
    std::vector<int> unjudged;  // manual items without a judgment, counted as not completed
};

// `scenario` maps visited screens to apps for opened_app; it may be null.
CriteriaResult evaluate_criteria(const orch::Trajectory& traj, const env::Scenario* scenario,
                                 const CompletionCriteria& criteria, const ManualJudgments& judgments = {});

// Real-device counts that the simulator would otherwise supply.
struct Annotation {
    int correct_operations = 0;
    int correct_reflections = 0;
    bool erroneous_completion = false;
};

std::optional<Annotation> load_annotation(const std::filesystem::path& file);

// Simulation: OA/RA from oracle fields, erroneous completion = DONE claimed with CR < 100.
// Real device: counts and the erroneous-completion flag come from `annotation`.
MetricsRecord compute_metrics(const orch::Trajectory& traj, const CriteriaResult& criteria,
                              const std::optional<Annotation>& annotation = std::nullopt);

nlohmann::ordered_json metrics_json(const MetricsRecord& m, const CriteriaResult& c, const CompletionCriteria& crit);

}  // namespace mar::eval
