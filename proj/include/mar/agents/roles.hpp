#pragma once

#include "mar/agents/provider.hpp"
#include "mar/core/types.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mar::agents {

// Uppercase label -> section body. Labels match case-insensitively at line start
// ("PLAN:", "Action:", ...); a body runs until the next known label.
std::map<std::string, std::string> parse_sections(std::string_view text, const std::vector<std::string>& labels);

inline constexpr std::string_view kUnchangedNotes = "<unchanged>";

template <typename T>
struct RoleResult {
    T value;
    ModelResponse response;
};

struct ManagerDecision {
    std::string plan;
    Subtask subtask;
    bool done = false;  // SUBTASK: DONE
};

struct Reflection {
    OutcomeLabel outcome = OutcomeLabel::Success;
    std::string progress;
    std::string feedback;
};

// Throw ResponseFormatError on missing or invalid sections.
ManagerDecision parse_manager_response(std::string_view text, const std::vector<std::string>& apps);
AtomicAction parse_operator_response(std::string_view text);
Reflection parse_reflector_response(std::string_view text);
std::string parse_notetaker_response(std::string_view text, const std::string& previous_notes);

RoleResult<ManagerDecision> manager_step(ModelProvider& provider, const ModelRequest& request,
                                         const std::vector<std::string>& apps);
RoleResult<AtomicAction> operator_step(ModelProvider& provider, const ModelRequest& request);
RoleResult<Reflection> reflect_step(ModelProvider& provider, const ModelRequest& request);
RoleResult<std::string> notetake_step(ModelProvider& provider, const ModelRequest& request,
                                      const std::string& previous_notes);

}  // namespace mar::agents
