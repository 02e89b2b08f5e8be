#pragma once

#include "mar/agents/provider.hpp"
#include "mar/core/types.hpp"
#include "mar/retrieval/documents.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mar::agents {

inline constexpr std::array<std::string_view, 4> kInitialTips = {
    "Do not add any payment information. If you are asked to sign in, ignore it or sign in as a guest if "
    "possible. Close any pop-up windows when opening an app.",
    "By default, no APPs are opened in the background.",
    "Screenshots may show partial text in text boxes from your previous input; this does not count as an error.",
    "When creating new Notes, you do not need to enter a title unless the user specifically requests it.",
};

// Section headers shared by prompt builders and tests.
namespace section {
inline constexpr std::string_view kExemplars = "### Reference Plans ###";
inline constexpr std::string_view kRecentErrors = "### Recent Errors ###";
inline constexpr std::string_view kRecentActions = "### Recent Actions ###";
inline constexpr std::string_view kScreenElements = "### Screen Elements ###";
inline constexpr std::string_view kReference = "### Reference Example ###";
}  // namespace section

struct PromptConfig {
    int k_err = 3;  // error-log tail shown to the Manager when F is set
    int k_log = 5;  // action/error-log tail shown to the Operator
    int max_tokens = kDefaultMaxTokens;
    double temperature = kDefaultTemperature;
    std::vector<std::string> apps;
};

// Retrieved Operator exemplar plus its reference screenshot.
struct RetrievedExemplar {
    retrieval::OperatorDoc doc;
    ImagePart image;
};

ImagePart image_of(const Screenshot& s);

std::string render_perception(const PerceptionResult& v);

// t = mem.step, F = mem.error_flag. Exemplars are used only at t = 1.
ModelRequest prompt_gen_manager(const TaskInstruction& task, const WorkingMemory& mem, const Screenshot& previous,
                                const std::vector<retrieval::ManagerDoc>& exemplars, const PromptConfig& cfg);

// mem carries the plan and subtask of this step plus the logs and notes from t-1.
ModelRequest prompt_gen_operator(const TaskInstruction& task, const WorkingMemory& mem, const Screenshot& previous,
                                 const PerceptionResult& previous_view,
                                 const std::optional<RetrievedExemplar>& exemplar, const PromptConfig& cfg);

ModelRequest prompt_gen_reflector(const TaskInstruction& task, const Subtask& subtask, const AtomicAction& action,
                                  const Screenshot& before, const Screenshot& after, const PerceptionResult& view_before,
                                  const PerceptionResult& view_after, const std::string& previous_progress,
                                  const PromptConfig& cfg);

ModelRequest prompt_gen_notetaker(const TaskInstruction& task, const std::string& plan, const Subtask& subtask,
                                  const Screenshot& current, const PerceptionResult& view, const std::string& progress,
                                  const std::string& previous_notes, const PromptConfig& cfg);

}  // namespace mar::agents
