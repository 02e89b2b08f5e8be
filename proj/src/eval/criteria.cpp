#include "mar/eval/criteria.hpp"

#include "mar/core/error.hpp"

#include <fstream>
#include <regex>

namespace mar::eval {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

struct KindInfo {
    PredicateKind kind;
    const char* name;
    const char* arg;
};

constexpr KindInfo kKinds[] = {
    {PredicateKind::OpenedApp, "opened_app", "name"},
    {PredicateKind::ExecutedActionMatching, "executed_action_matching", "pattern"},
    {PredicateKind::VisitedScreen, "visited_screen", "id"},
    {PredicateKind::NoteContains, "note_contains", "substring"},
    {PredicateKind::Manual, "manual", nullptr},
};

const KindInfo& info(PredicateKind k) {
    for (const auto& i : kKinds)
        if (i.kind == k) return i;
    throw InvalidCriteria("unknown predicate kind");
}

json read_json(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidCriteria(file.string() + ": " + e.what());
    }
}

}  // namespace

std::string_view kind_name(PredicateKind k) { return info(k).name; }

CompletionCriteria CompletionCriteria::from_json(const json& j) {
    CompletionCriteria c;
    if (!j.is_object() || !j.contains("items") || !j.at("items").is_array())
        throw InvalidCriteria("criteria must be an object with an items list");
    c.task_id = j.value("task_id", "");
    int index = 0;
    for (const auto& item : j.at("items")) {
        const std::string where = "item " + std::to_string(index++);
        if (!item.is_object() || !item.contains("kind") || !item.at("kind").is_string())
            throw InvalidCriteria(where + ": missing kind");
        const std::string kind = item.at("kind").get<std::string>();
        const KindInfo* found = nullptr;
        for (const auto& i : kKinds)
            if (kind == i.name) found = &i;
        if (found == nullptr) throw InvalidCriteria(where + ": unknown kind '" + kind + "'");
        CompletionPredicate p;
        p.kind = found->kind;
        p.description = item.value("description", "");
        if (found->arg != nullptr) {
            const json args = item.value("args", json::object());
            if (!args.is_object() || !args.contains(found->arg) || !args.at(found->arg).is_string() ||
                args.at(found->arg).get<std::string>().empty())
                throw InvalidCriteria(where + ": " + kind + " needs a non-empty '" + found->arg + "' argument");
            p.arg = args.at(found->arg).get<std::string>();
            if (p.kind == PredicateKind::ExecutedActionMatching) {
                try {
                    std::regex re(p.arg);
                } catch (const std::regex_error& e) {
                    throw InvalidCriteria(where + ": bad pattern: " + e.what());
                }
            }
        }
        c.items.push_back(std::move(p));
    }
    if (c.items.size() != 8 && c.items.size() != 10)
        throw InvalidCriteria("expected 8 or 10 items, got " + std::to_string(c.items.size()));
    return c;
}

CompletionCriteria CompletionCriteria::load(const fs::path& file) { return from_json(read_json(file)); }

ManualJudgments load_judgments(const fs::path& file) {
    const json j = read_json(file);
    if (!j.is_object()) throw InvalidCriteria("judgments must be an object of index -> bool");
    ManualJudgments out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_boolean()) throw InvalidCriteria("judgment for item " + k + " is not a boolean");
        try {
            std::size_t used = 0;
            const int idx = std::stoi(k, &used);
            if (used != k.size() || idx < 0) throw std::invalid_argument(k);
            out[idx] = v.get<bool>();
        } catch (const std::exception&) {
            throw InvalidCriteria("judgment key '" + k + "' is not an item index");
        }
    }
    return out;
}

CriteriaResult evaluate_criteria(const orch::Trajectory& traj, const env::Scenario* scenario,
                                 const CompletionCriteria& criteria, const ManualJudgments& judgments) {
    if (criteria.items.size() != 8 && criteria.items.size() != 10)
        throw InvalidCriteria("expected 8 or 10 items, got " + std::to_string(criteria.items.size()));
    std::vector<std::string> visited;
    for (const auto& s : traj.steps) {
        if (!s.screen_before.empty()) visited.push_back(s.screen_before);
        if (!s.screen_after.empty()) visited.push_back(s.screen_after);
    }
    if (traj.final_screen) visited.push_back(*traj.final_screen);
    std::vector<std::string> rendered;
    for (const auto& a : traj.actions()) rendered.push_back(render_action(a));

    CriteriaResult r;
    for (std::size_t i = 0; i < criteria.items.size(); ++i) {
        const auto& p = criteria.items[i];
        bool ok = false;
        switch (p.kind) {
        case PredicateKind::OpenedApp:
            for (const auto& a : traj.actions())
                if (const auto* o = std::get_if<action::OpenApp>(&a); o && o->app_name == p.arg) ok = true;
            if (scenario != nullptr)
                for (const auto& id : visited)
                    if (scenario->has_screen(id) && scenario->screen(id).app == p.arg) ok = true;
            break;
        case PredicateKind::ExecutedActionMatching: {
            const std::regex re(p.arg);
            for (const auto& line : rendered)
                if (std::regex_search(line, re)) ok = true;
            break;
        }
        case PredicateKind::VisitedScreen:
            ok = std::find(visited.begin(), visited.end(), p.arg) != visited.end();
            break;
        case PredicateKind::NoteContains:
            ok = traj.final_memory.notes.find(p.arg) != std::string::npos;
            break;
        case PredicateKind::Manual:
            if (auto it = judgments.find(static_cast<int>(i)); it != judgments.end()) ok = it->second;
            else r.unjudged.push_back(static_cast<int>(i));
            break;
        }
        r.items.push_back(ok);
        r.completed += ok ? 1 : 0;
    }
    return r;
}

std::optional<Annotation> load_annotation(const fs::path& file) {
    if (file.empty() || !fs::exists(file)) return std::nullopt;
    const json j = read_json(file);
    try {
        return Annotation{j.at("correct_operations").get<int>(), j.at("correct_reflections").get<int>(),
                          j.value("erroneous_completion", false)};
    } catch (const json::exception& e) {
        throw InvalidTrajectory(file.string() + ": " + e.what());
    }
}

MetricsRecord compute_metrics(const orch::Trajectory& traj, const CriteriaResult& criteria,
                              const std::optional<Annotation>& annotation) {
    MetricsRecord m;
    m.steps = static_cast<int>(traj.steps.size());
    m.cr = compute_cr(criteria.completed, static_cast<int>(criteria.items.size()));
    const int ops = annotation ? annotation->correct_operations : correct_operations(traj);
    const int refl = annotation ? annotation->correct_reflections : correct_reflections(traj);
    m.oa = compute_oa(ops, m.steps);
    m.ra = compute_ra(refl, m.steps);
    m.efficiency = compute_efficiency(m.cr, m.steps);
    m.erroneous_completion = annotation ? annotation->erroneous_completion
                                        : (traj.completion_claimed && criteria.completed < static_cast<int>(criteria.items.size()));
    m.sr_detail = judge_sr(traj, m.erroneous_completion);
    m.sr = m.sr_detail.success;
    return m;
}

ojson metrics_json(const MetricsRecord& m, const CriteriaResult& c, const CompletionCriteria& crit) {
    ojson j;
    j["task_id"] = crit.task_id;
    j["CR"] = m.cr;
    j["OA"] = m.oa;
    j["RA"] = m.ra;
    j["Steps"] = m.steps;
    j["Efficiency"] = m.efficiency;
    j["SR"] = m.sr;
    j["sr_conditions"] = ojson{{"within_steps", m.sr_detail.within_steps},
                               {"no_erroneous_completion", m.sr_detail.no_erroneous_completion},
                               {"no_repetition", m.sr_detail.no_repetition}};
    j["erroneous_completion"] = m.erroneous_completion;
    j["items"] = ojson::array();
    for (std::size_t i = 0; i < crit.items.size(); ++i)
        j["items"].push_back(ojson{{"kind", std::string(kind_name(crit.items[i].kind))},
                                   {"description", crit.items[i].description},
                                   {"completed", static_cast<bool>(c.items[i])}});
    j["unjudged_manual_items"] = c.unjudged;
    return j;
}

}  // namespace mar::eval
