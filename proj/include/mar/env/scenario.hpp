#pragma once

#include "mar/core/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mar::env {

enum class ElementKind { Text, Icon, Input };

struct Element {
    std::string id;
    std::string text;
    BoundingBox box;
    ElementKind kind = ElementKind::Text;
};

struct ScreenDef {
    std::string id;
    std::string app;  // app name, or "home"
    int width = 1440;
    int height = 3120;
    std::vector<Element> elements;

    const Element* element(const std::string& element_id) const;
    // Innermost element containing the point; ties resolved by element id.
    const Element* hit_test(int x, int y) const;
};

// Matches an action by name, optionally the element under its (first) point,
// and optionally the exact typed text. Absent fields are wildcards.
struct ActionMatcher {
    std::string action;
    std::optional<std::string> element;
    std::optional<std::string> text;
};

struct TransitionRule {
    std::string from;
    ActionMatcher on;
    std::string to;
    std::optional<std::string> focus;          // input element on `to` that receives focus
    std::map<std::string, std::string> slots;  // element id on `to` -> text to set
};

struct OracleOutcome {
    std::string screen;
    std::string action_pattern;  // ECMAScript regex searched in the rendered action
    OutcomeLabel outcome = OutcomeLabel::Success;
};

inline constexpr const char* kHomeScreen = "home";

// Deterministic app-screen state machine standing in for a device.
struct Scenario {
    std::string name;
    std::vector<std::string> apps;
    std::vector<ScreenDef> screens;  // document order
    std::string initial_screen = kHomeScreen;
    std::vector<TransitionRule> transitions;
    std::vector<OracleOutcome> oracle_outcomes;
    nlohmann::json completion_items = nlohmann::json::array();

    // Throws InvalidScenario on dangling screen ids, duplicate apps, elements outside
    // their screen, or two rules that could match the same (screen, action).
    void validate() const;

    const ScreenDef& screen(const std::string& id) const;
    bool has_screen(const std::string& id) const;
    bool has_app(const std::string& app) const;
    // First screen in document order that belongs to the app.
    const std::string& entry_screen(const std::string& app) const;

    static Scenario from_json(const nlohmann::json& j);
    static Scenario load(const std::filesystem::path& file);
};

struct DeviceState {
    std::string screen = kHomeScreen;
    std::optional<std::string> focus;                   // focused input element on `screen`
    std::map<std::string, std::string> slots;           // "<screen>/<element>" -> text buffer
    std::vector<std::string> back_stack;                // bottom is always home when non-empty

    bool operator==(const DeviceState&) const = default;

    static DeviceState initial(const Scenario& s);
};

std::string slot_key(const std::string& screen, const std::string& element);

}  // namespace mar::env
