#pragma once

#include "mar/env/backend.hpp"
#include "mar/env/scenario.hpp"

#include <optional>

namespace mar::env {

struct SimStep {
    DeviceState state;
    Screenshot screenshot;
    bool changed = false;
    std::optional<std::size_t> rule;  // index of the transition that fired, if any
};

// Total function: actions the scenario cannot honour leave the state unchanged.
SimStep sim_execute(const DeviceState& state, const Scenario& scenario, const AtomicAction& a);

Screenshot sim_screenshot(const DeviceState& state, const Scenario& scenario);
PerceptionResult sim_perceive(const DeviceState& state, const Scenario& scenario);

// Ground-truth perceptor: decodes the simulator's screenshot stand-in.
class SimPerceptor final : public Perceptor {
public:
    explicit SimPerceptor(const Scenario& scenario) : scenario_(scenario) {}
    PerceptionResult perceive(const Screenshot& s) const override;

private:
    const Scenario& scenario_;
};

// Outcome the scenario expects for `a` on `screen`: explicit oracle entry if one matches,
// otherwise Success when the state changed and FailedNoChange when it did not.
OutcomeLabel oracle_outcome(const Scenario& scenario, const std::string& screen, const AtomicAction& a, bool changed);

class SimulatedDevice final : public DeviceBackend {
public:
    explicit SimulatedDevice(Scenario scenario);
    SimulatedDevice(const SimulatedDevice&) = delete;
    SimulatedDevice& operator=(const SimulatedDevice&) = delete;

    std::string id() const override { return "sim:" + scenario_.name; }
    std::vector<std::string> apps() const override { return scenario_.apps; }
    Screenshot capture_screenshot() override;
    Execution execute(const AtomicAction& a) override;
    const Perceptor& perceptor() const override { return perceptor_; }

    const Scenario& scenario() const { return scenario_; }
    const DeviceState& state() const { return state_; }

private:
    Scenario scenario_;
    DeviceState state_;
    SimPerceptor perceptor_;
};

}  // namespace mar::env
