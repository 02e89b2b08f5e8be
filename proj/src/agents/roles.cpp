#include "mar/agents/roles.hpp"

#include "mar/core/error.hpp"

#include <algorithm>
#include <cctype>

namespace mar::agents {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals_prefix(std::string_view line, std::string_view label) {
    if (line.size() < label.size()) return false;
    for (std::size_t i = 0; i < label.size(); ++i)
        if (std::toupper(static_cast<unsigned char>(line[i])) != label[i]) return false;
    return true;
}

const std::string& require(const std::map<std::string, std::string>& sections, const std::string& label) {
    auto it = sections.find(label);
    if (it == sections.end() || it->second.empty())
        throw ResponseFormatError("response has no " + label + ": section");
    return it->second;
}

}  // namespace

std::map<std::string, std::string> parse_sections(std::string_view text, const std::vector<std::string>& labels) {
    std::map<std::string, std::string> out;
    std::string* current = nullptr;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        std::string_view stripped = trim(line);
        // Tolerate markdown emphasis around labels, e.g. "**PLAN:**".
        while (!stripped.empty() && (stripped.front() == '*' || stripped.front() == '#')) stripped.remove_prefix(1);
        bool started = false;
        for (const auto& label : labels) {
            const std::string tag = label + ":";
            if (iequals_prefix(stripped, tag)) {
                std::string_view rest = stripped.substr(tag.size());
                while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
                current = &out[label];
                *current = std::string(trim(rest));
                started = true;
                break;
            }
        }
        if (!started && current != nullptr) {
            if (!current->empty()) *current += '\n';
            *current += std::string(line);
        }
        pos = eol + 1;
    }
    for (auto& [label, body] : out) body = std::string(trim(body));
    return out;
}

ManagerDecision parse_manager_response(std::string_view text, const std::vector<std::string>& apps) {
    auto s = parse_sections(text, {"PLAN", "SUBTASK", "APP"});
    ManagerDecision d;
    d.plan = require(s, "PLAN");
    d.subtask.description = require(s, "SUBTASK");
    if (d.subtask.description == kDoneSubtask) {
        d.done = true;
        d.subtask.app = s.count("APP") ? s["APP"] : std::string(kNoApp);
        return d;
    }
    d.subtask.app = require(s, "APP");
    if (d.subtask.app != kNoApp && std::find(apps.begin(), apps.end(), d.subtask.app) == apps.end())
        throw ResponseFormatError("APP '" + d.subtask.app + "' is not a registered app");
    return d;
}

AtomicAction parse_operator_response(std::string_view text) {
    auto s = parse_sections(text, {"THOUGHT", "ACTION"});
    const std::string& line = require(s, "ACTION");
    // Only the first line of the section is the action.
    return parse_action(line.substr(0, line.find('\n')));
}

Reflection parse_reflector_response(std::string_view text) {
    auto s = parse_sections(text, {"OUTCOME", "PROGRESS", "FEEDBACK"});
    const std::string& raw = require(s, "OUTCOME");
    auto end = std::find_if(raw.begin(), raw.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); });
    Reflection r;
    r.outcome = outcome_from_code(std::string(raw.begin(), end));
    r.progress = require(s, "PROGRESS");
    r.feedback = s.count("FEEDBACK") ? s["FEEDBACK"] : std::string();
    if (r.outcome != OutcomeLabel::Success && r.feedback.empty())
        throw ResponseFormatError("failed outcome without FEEDBACK");
    if (r.outcome == OutcomeLabel::Success) r.feedback.clear();
    return r;
}

std::string parse_notetaker_response(std::string_view text, const std::string& previous_notes) {
    auto s = parse_sections(text, {"NOTES"});
    auto it = s.find("NOTES");
    if (it == s.end()) throw ResponseFormatError("response has no NOTES: section");
    if (it->second == kUnchangedNotes) return previous_notes;
    return it->second;
}

RoleResult<ManagerDecision> manager_step(ModelProvider& provider, const ModelRequest& request,
                                         const std::vector<std::string>& apps) {
    ModelResponse resp = provider.complete(request);
    return {parse_manager_response(resp.text, apps), std::move(resp)};
}

RoleResult<AtomicAction> operator_step(ModelProvider& provider, const ModelRequest& request) {
    ModelResponse resp = provider.complete(request);
    return {parse_operator_response(resp.text), std::move(resp)};
}

RoleResult<Reflection> reflect_step(ModelProvider& provider, const ModelRequest& request) {
    ModelResponse resp = provider.complete(request);
    return {parse_reflector_response(resp.text), std::move(resp)};
}

RoleResult<std::string> notetake_step(ModelProvider& provider, const ModelRequest& request,
                                      const std::string& previous_notes) {
    ModelResponse resp = provider.complete(request);
    return {parse_notetaker_response(resp.text, previous_notes), std::move(resp)};
}

}  // namespace mar::agents
