#pragma once

#include "mar/core/action.hpp"

#include <string>

namespace mar::retrieval {

// (task instruction, human steps) exemplar for planning.
struct ManagerDoc {
    int id = 0;
    std::string instruction;
    std::string human_steps;
    bool operator==(const ManagerDoc&) const = default;
};

// (subtask, screenshot, action) exemplar for one app.
struct OperatorDoc {
    int id = 0;
    std::string app;
    std::string subtask;
    std::string screenshot;  // relative to the KB root
    AtomicAction action;
    bool operator==(const OperatorDoc&) const = default;
};

inline const std::string& index_text(const ManagerDoc& d) { return d.instruction; }
inline const std::string& index_text(const OperatorDoc& d) { return d.subtask; }

}  // namespace mar::retrieval
