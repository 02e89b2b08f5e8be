#include "mar/agents/prompts.hpp"

#include <algorithm>
#include <sstream>

namespace mar::agents {

namespace {

std::string tips_block() {
    std::string out = "### Tips ###\n";
    for (std::size_t i = 0; i < kInitialTips.size(); ++i)
        out += std::to_string(i + 1) + ". " + std::string(kInitialTips[i]) + "\n";
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::string apps_line(const PromptConfig& cfg) {
    return "Available apps: " + (cfg.apps.empty() ? std::string("(none)") : join(cfg.apps, ", ")) + "\n";
}

template <typename T>
std::size_t tail_start(const std::vector<T>& v, int k) {
    return v.size() > static_cast<std::size_t>(k) ? v.size() - static_cast<std::size_t>(k) : 0;
}

std::string error_lines(const std::vector<ErrorLogEntry>& log, int k) {
    std::string out;
    for (std::size_t i = tail_start(log, k); i < log.size(); ++i)
        out += "Step " + std::to_string(log[i].step) + ": " + render_action(log[i].action) +
               " | Feedback: " + log[i].feedback + "\n";
    return out;
}

std::string action_lines(const std::vector<ActionLogEntry>& log, int k) {
    std::string out;
    for (std::size_t i = tail_start(log, k); i < log.size(); ++i)
        out += "Step " + std::to_string(log[i].step) + ": " + render_action(log[i].action) + " | Outcome: " +
               outcome_code(log[i].outcome) + "\n";
    return out;
}

std::string subtask_line(const Subtask& t) { return t.description + " (app: " + t.app + ")"; }

const char* kActionSpace =
    "### Atomic Actions ###\n"
    "Open_App(app_name): launch the named app.\n"
    "Tap(x, y): tap the point (x, y).\n"
    "Swipe(x1, y1, x2, y2): drag from (x1, y1) to (x2, y2), e.g. to scroll a list.\n"
    "Type(text): enter text into the focused input field.\n"
    "Enter(): press the Enter key.\n"
    "Back(): go back one screen.\n"
    "Home(): go to the home screen.\n"
    "Wait(): wait 10 seconds for the screen to settle.\n"
    "Tap_Type_and_Enter(x, y, text): tap the input field at (x, y), type the text and press Enter, as one action.\n";

ModelRequest base_request(std::string role, std::string system, const PromptConfig& cfg) {
    ModelRequest r;
    r.role = std::move(role);
    r.system_text = std::move(system);
    r.max_tokens = cfg.max_tokens;
    r.temperature = cfg.temperature;
    return r;
}

}  // namespace

ImagePart image_of(const Screenshot& s) { return ImagePart{s.ref(), s.mime, s.payload}; }

std::string render_perception(const PerceptionResult& v) {
    std::ostringstream out;
    auto box = [](const BoundingBox& b) {
        return "[" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) + ", " +
               std::to_string(b.y2) + "]";
    };
    for (const auto& t : v.texts) out << "text \"" << t.text << "\" at " << box(t.box) << "\n";
    for (const auto& i : v.icons) out << "icon \"" << i.caption << "\" at " << box(i.box) << "\n";
    std::string s = out.str();
    return s.empty() ? "(no elements)\n" : s;
}

ModelRequest prompt_gen_manager(const TaskInstruction& task, const WorkingMemory& mem, const Screenshot& previous,
                                const std::vector<retrieval::ManagerDoc>& exemplars, const PromptConfig& cfg) {
    std::string system =
        "Role: Manager\n"
        "You are the Manager of an agent that operates an Android phone. You keep the overall plan for the "
        "user's instruction and hand the next subtask to an Operator that performs atomic actions.\n\n" +
        tips_block() + "\n" + apps_line(cfg) +
        "\n### Response Format ###\n"
        "PLAN: <overall plan>\n"
        "SUBTASK: <the next subtask, or DONE once the instruction is fully accomplished>\n"
        "APP: <app the subtask runs in, or None for the home screen>\n";
    ModelRequest r = base_request("manager", std::move(system), cfg);

    r.user_parts.emplace_back("### User Instruction ###\n" + task.text);
    if (mem.step == 1) {
        r.user_parts.emplace_back(std::string("### Current Screenshot ###"));
        r.user_parts.emplace_back(image_of(previous));
        if (!exemplars.empty()) {
            std::string block = std::string(section::kExemplars) + "\n" +
                                "Plans written by people for similar tasks. Use them as few-shot examples.\n";
            for (std::size_t i = 0; i < exemplars.size(); ++i)
                block += "Example " + std::to_string(i + 1) + ":\nTask: " + exemplars[i].instruction +
                         "\nHuman Steps: " + exemplars[i].human_steps + "\n";
            r.user_parts.emplace_back(std::move(block));
        }
        r.user_parts.emplace_back(std::string("Make the first overall plan and choose the first subtask."));
        return r;
    }

    r.user_parts.emplace_back("### Overall Plan ###\n" + mem.plan);
    r.user_parts.emplace_back("### Previous Subtask ###\n" + subtask_line(mem.subtask));
    r.user_parts.emplace_back(std::string("### Current Screenshot ###"));
    r.user_parts.emplace_back(image_of(previous));
    r.user_parts.emplace_back("### Progress Status ###\n" + (mem.progress.empty() ? "(none)" : mem.progress));
    r.user_parts.emplace_back("### Notes ###\n" + (mem.notes.empty() ? "(none)" : mem.notes));
    if (mem.error_flag) {
        r.user_parts.emplace_back(std::string(section::kRecentErrors) + "\n" +
                                  "The last actions failed consecutively. Revise the plan to recover.\n" +
                                  error_lines(mem.error_log, cfg.k_err));
    }
    return r;
}

ModelRequest prompt_gen_operator(const TaskInstruction& task, const WorkingMemory& mem, const Screenshot& previous,
                                 const PerceptionResult& previous_view,
                                 const std::optional<RetrievedExemplar>& exemplar, const PromptConfig& cfg) {
    std::string system =
        "Role: Operator\n"
        "You are the Operator of an agent that operates an Android phone. Choose exactly one atomic action that "
        "accomplishes the current subtask. Coordinates are pixels from the top-left corner.\n\n" +
        std::string(kActionSpace) + "\n" + tips_block() +
        "\n### Response Format ###\n"
        "THOUGHT: <brief reasoning>\n"
        "ACTION: <Name> at <JSON arguments, or null>\n";
    ModelRequest r = base_request("operator", std::move(system), cfg);

    r.user_parts.emplace_back("### User Instruction ###\n" + task.text);
    r.user_parts.emplace_back("### Overall Plan ###\n" + mem.plan);
    r.user_parts.emplace_back("Current Subtask: " + mem.subtask.description + "\nApp: " + mem.subtask.app);
    r.user_parts.emplace_back(std::string("### Current Screenshot ###"));
    r.user_parts.emplace_back(image_of(previous));
    r.user_parts.emplace_back(std::string(section::kScreenElements) + "\n" + render_perception(previous_view));
    r.user_parts.emplace_back("### Progress Status ###\n" + (mem.progress.empty() ? "(none)" : mem.progress));
    if (!mem.action_log.empty())
        r.user_parts.emplace_back(std::string(section::kRecentActions) + "\n" + action_lines(mem.action_log, cfg.k_log));
    if (!mem.error_log.empty())
        r.user_parts.emplace_back(std::string(section::kRecentErrors) + "\n" + error_lines(mem.error_log, cfg.k_log));
    r.user_parts.emplace_back("### Notes ###\n" + (mem.notes.empty() ? "(none)" : mem.notes));
    if (exemplar) {
        r.user_parts.emplace_back(std::string(section::kReference) + "\n" +
                                  "A verified action for a similar subtask in this app:\nSubtask: " +
                                  exemplar->doc.subtask + "\nAction: " + render_action(exemplar->doc.action) +
                                  "\nReference screenshot:");
        r.user_parts.emplace_back(exemplar->image);
    }
    return r;
}

namespace {

std::string perception_diff(const PerceptionResult& before, const PerceptionResult& after) {
    auto lines = [](const PerceptionResult& v) {
        std::vector<std::string> out;
        std::istringstream in(render_perception(v));
        for (std::string l; std::getline(in, l);)
            if (l != "(no elements)") out.push_back(l);
        return out;
    };
    const auto b = lines(before);
    const auto a = lines(after);
    std::string added, removed;
    for (const auto& l : a)
        if (std::find(b.begin(), b.end(), l) == b.end()) added += "+ " + l + "\n";
    for (const auto& l : b)
        if (std::find(a.begin(), a.end(), l) == a.end()) removed += "- " + l + "\n";
    if (added.empty() && removed.empty()) return "(no element changes)\n";
    return added + removed;
}

}  // namespace

ModelRequest prompt_gen_reflector(const TaskInstruction& task, const Subtask& subtask, const AtomicAction& action,
                                  const Screenshot& before, const Screenshot& after, const PerceptionResult& view_before,
                                  const PerceptionResult& view_after, const std::string& previous_progress,
                                  const PromptConfig& cfg) {
    std::string system =
        "Role: Action Reflector\n"
        "You judge whether the last action achieved what the subtask expected by comparing the screen before and "
        "after it.\n\n" +
        tips_block() +
        "\n### Response Format ###\n"
        "OUTCOME: A (successful), B (failed: wrong page), or C (failed: no change)\n"
        "PROGRESS: <updated progress status of the whole task>\n"
        "FEEDBACK: <why the action failed; required for B and C>\n";
    ModelRequest r = base_request("reflector", std::move(system), cfg);
    r.user_parts.emplace_back("### User Instruction ###\n" + task.text);
    r.user_parts.emplace_back("### Current Subtask ###\n" + subtask_line(subtask));
    r.user_parts.emplace_back("### Last Action ###\n" + render_action(action));
    r.user_parts.emplace_back(std::string("### Screenshot Before ###"));
    r.user_parts.emplace_back(image_of(before));
    r.user_parts.emplace_back(std::string("### Screenshot After ###"));
    r.user_parts.emplace_back(image_of(after));
    r.user_parts.emplace_back("### Elements Before ###\n" + render_perception(view_before));
    r.user_parts.emplace_back("### Elements After ###\n" + render_perception(view_after));
    r.user_parts.emplace_back("### Element Changes ###\n" + perception_diff(view_before, view_after));
    r.user_parts.emplace_back("### Progress Status ###\n" + (previous_progress.empty() ? "(none)" : previous_progress));
    return r;
}

ModelRequest prompt_gen_notetaker(const TaskInstruction& task, const std::string& plan, const Subtask& subtask,
                                  const Screenshot& current, const PerceptionResult& view, const std::string& progress,
                                  const std::string& previous_notes, const PromptConfig& cfg) {
    std::string system =
        "Role: Notetaker\n"
        "You keep the notes an agent needs later in the task, such as search results, names, prices, ratings, "
        "and phone numbers seen on screen.\n\n" +
        tips_block() +
        "\n### Response Format ###\n"
        "NOTES: <the complete updated notes, or " + std::string("<unchanged>") + " to keep them as they are>\n";
    ModelRequest r = base_request("notetaker", std::move(system), cfg);
    r.user_parts.emplace_back("### User Instruction ###\n" + task.text);
    r.user_parts.emplace_back("### Overall Plan ###\n" + plan);
    r.user_parts.emplace_back("### Current Subtask ###\n" + subtask_line(subtask));
    r.user_parts.emplace_back(std::string("### Current Screenshot ###"));
    r.user_parts.emplace_back(image_of(current));
    r.user_parts.emplace_back(std::string(section::kScreenElements) + "\n" + render_perception(view));
    r.user_parts.emplace_back("### Progress Status ###\n" + (progress.empty() ? "(none)" : progress));
    r.user_parts.emplace_back("### Existing Notes ###\n" + (previous_notes.empty() ? "(none)" : previous_notes));
    return r;
}

}  // namespace mar::agents
