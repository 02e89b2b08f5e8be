#pragma once

#include "mar/core/action.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mar {

struct TaskInstruction {
    std::string text;

    // Throws mar::Error when the text is blank.
    static TaskInstruction make(std::string text);
};

struct Screenshot {
    std::string payload;  // PNG bytes, or a JSON stand-in from the simulator
    int width = 0;
    int height = 0;
    std::string source;     // backend identifier, e.g. "sim" or "adb:<serial>"
    std::string screen_id;  // simulator only
    std::string mime = "image/png";

    // Stable reference used in prompts: "<source>:<first 16 hex of sha256(payload)>".
    std::string ref() const;
};

struct BoundingBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool contains(int x, int y) const { return x >= x1 && x < x2 && y >= y1 && y < y2; }
    long long area() const { return static_cast<long long>(x2 - x1) * (y2 - y1); }
    bool operator==(const BoundingBox&) const = default;
};

struct TextElement {
    std::string text;
    BoundingBox box;
    bool operator==(const TextElement&) const = default;
};

struct IconElement {
    BoundingBox box;
    std::string caption;
    bool operator==(const IconElement&) const = default;
};

struct PerceptionResult {
    std::vector<TextElement> texts;
    std::vector<IconElement> icons;
    bool operator==(const PerceptionResult&) const = default;
};

enum class OutcomeLabel { Success, FailedWrongPage, FailedNoChange };

// Wire codes A/B/C.
char outcome_code(OutcomeLabel o);
OutcomeLabel outcome_from_code(std::string_view code);
std::string_view outcome_name(OutcomeLabel o);

struct ActionLogEntry {
    AtomicAction action;
    OutcomeLabel outcome = OutcomeLabel::Success;
    int step = 0;
};

struct ErrorLogEntry {
    AtomicAction action;
    std::string feedback;
    int step = 0;
};

struct Subtask {
    std::string description;
    std::string app;  // "None" for home-screen work
    bool operator==(const Subtask&) const = default;
};

inline constexpr std::string_view kDoneSubtask = "DONE";
inline constexpr std::string_view kNoApp = "None";

struct WorkingMemory {
    std::string plan;
    Subtask subtask;
    std::string progress;
    std::string notes;
    bool error_flag = false;
    std::vector<ActionLogEntry> action_log;
    std::vector<ErrorLogEntry> error_log;
    int step = 1;

    // Appends to the action log, and to the error log iff the outcome is not Success.
    void record(const AtomicAction& a, OutcomeLabel outcome, const std::string& feedback);
};

// Throws OutOfBounds unless every coordinate lies in [0, width) x [0, height).
void validate_action(const AtomicAction& a, const Screenshot& s);

}  // namespace mar
