#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mar {

// Atomic actions. Coordinates are screen pixels, origin top-left.
namespace action {

struct OpenApp {
    std::string app_name;
    auto operator<=>(const OpenApp&) const = default;
};
struct Tap {
    int x = 0;
    int y = 0;
    auto operator<=>(const Tap&) const = default;
};
struct Swipe {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;
    auto operator<=>(const Swipe&) const = default;
};
struct Type {
    std::string text;
    auto operator<=>(const Type&) const = default;
};
struct Enter {
    auto operator<=>(const Enter&) const = default;
};
struct Back {
    auto operator<=>(const Back&) const = default;
};
struct Home {
    auto operator<=>(const Home&) const = default;
};
struct Wait {
    auto operator<=>(const Wait&) const = default;
};
// Taps an input box, types the text, then presses Enter. Logged as one step.
struct TapTypeEnter {
    int x = 0;
    int y = 0;
    std::string text;
    auto operator<=>(const TapTypeEnter&) const = default;
};

}  // namespace action

using AtomicAction = std::variant<action::OpenApp, action::Tap, action::Swipe, action::Type,
                                  action::Enter, action::Back, action::Home, action::Wait,
                                  action::TapTypeEnter>;

inline constexpr std::size_t kActionVariantCount = std::variant_size_v<AtomicAction>;

// Canonical surface name ("Open_App", "Tap", ..., "Tap_Type_and_Enter").
std::string_view action_name(const AtomicAction& a);

// `Name at {json-args}` or `Name at null`.
AtomicAction parse_action(std::string_view text);
std::string render_action(const AtomicAction& a);

// Every (x, y) point the action touches, in argument order.
std::vector<std::pair<int, int>> action_points(const AtomicAction& a);

}  // namespace mar
