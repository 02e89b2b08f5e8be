#pragma once

#include "mar/core/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mar::env {

// V_t = P(S_t). Real-device OCR/icon grounding plugs in here.
class Perceptor {
public:
    virtual ~Perceptor() = default;
    virtual PerceptionResult perceive(const Screenshot& s) const = 0;
};

// Returns empty element lists; placeholder for devices without a perception model.
class NullPerceptor final : public Perceptor {
public:
    PerceptionResult perceive(const Screenshot&) const override { return {}; }
};

// What the backend knows about one executed action. Oracle fields are only
// available from the simulator.
struct Execution {
    std::string screen_before;
    std::string screen_after;
    std::optional<bool> state_changed;
    std::optional<OutcomeLabel> oracle_outcome;
    std::optional<bool> operation_correct;
};

class DeviceBackend {
public:
    virtual ~DeviceBackend() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> apps() const = 0;
    virtual Screenshot capture_screenshot() = 0;
    virtual Execution execute(const AtomicAction& a) = 0;
    virtual const Perceptor& perceptor() const = 0;
};

}  // namespace mar::env
