#include "mar/core/types.hpp"

#include "mar/core/digest.hpp"
#include "mar/core/error.hpp"

#include <algorithm>
#include <cctype>

namespace mar {

TaskInstruction TaskInstruction::make(std::string text) {
    bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) throw Error("task instruction is empty");
    return TaskInstruction{std::move(text)};
}

std::string Screenshot::ref() const { return source + ":" + sha256_hex(payload).substr(0, 16); }

char outcome_code(OutcomeLabel o) {
    switch (o) {
    case OutcomeLabel::Success: return 'A';
    case OutcomeLabel::FailedWrongPage: return 'B';
    case OutcomeLabel::FailedNoChange: return 'C';
    }
    return '?';
}

OutcomeLabel outcome_from_code(std::string_view code) {
    if (code == "A") return OutcomeLabel::Success;
    if (code == "B") return OutcomeLabel::FailedWrongPage;
    if (code == "C") return OutcomeLabel::FailedNoChange;
    throw ResponseFormatError("unknown outcome code '" + std::string(code) + "'");
}

std::string_view outcome_name(OutcomeLabel o) {
    switch (o) {
    case OutcomeLabel::Success: return "Success";
    case OutcomeLabel::FailedWrongPage: return "FailedWrongPage";
    case OutcomeLabel::FailedNoChange: return "FailedNoChange";
    }
    return "?";
}

void WorkingMemory::record(const AtomicAction& a, OutcomeLabel outcome, const std::string& feedback) {
    action_log.push_back({a, outcome, step});
    if (outcome != OutcomeLabel::Success)
        error_log.push_back({a, feedback.empty() ? std::string("action failed") : feedback, step});
}

void validate_action(const AtomicAction& a, const Screenshot& s) {
    for (auto [x, y] : action_points(a)) {
        if (x < 0 || x >= s.width || y < 0 || y >= s.height)
            throw OutOfBounds("coordinate (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") outside " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                              " screen");
    }
}

}  // namespace mar
