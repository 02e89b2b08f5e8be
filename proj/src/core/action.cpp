#include "mar/core/action.hpp"

#include "mar/core/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>

namespace mar {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

class ArgReader {
public:
    ArgReader(const json& args, std::string_view source) : args_(args), source_(source) {}

    int coordinate(const char* key) {
        const json& v = field(key);
        if (!v.is_number_integer()) fail(std::string("coordinate '") + key + "' is not an integer");
        if (v.is_number_unsigned()) {
            auto u = v.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
                fail(std::string("coordinate '") + key + "' out of range");
            return static_cast<int>(u);
        }
        auto i = v.get<std::int64_t>();
        if (i < 0) fail(std::string("coordinate '") + key + "' is negative");
        if (i > std::numeric_limits<int>::max()) fail(std::string("coordinate '") + key + "' out of range");
        return static_cast<int>(i);
    }

    std::string text(const char* key) {
        const json& v = field(key);
        if (!v.is_string()) fail(std::string("argument '") + key + "' is not a string");
        return v.get<std::string>();
    }

    // Rejects extra keys; missing keys were already caught by field().
    void done() const {
        if (args_.size() != used_) fail("unexpected extra arguments");
    }

private:
    const json& field(const char* key) {
        auto it = args_.find(key);
        if (it == args_.end()) fail(std::string("missing argument '") + key + "'");
        ++used_;
        return *it;
    }

    [[noreturn]] void fail(const std::string& why) const { throw ParseError(why, std::string(source_)); }

    const json& args_;
    std::string_view source_;
    std::size_t used_ = 0;
};

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

std::string_view action_name(const AtomicAction& a) {
    static constexpr std::array<std::string_view, kActionVariantCount> names = {
        "Open_App", "Tap", "Swipe", "Type", "Enter", "Back", "Home", "Wait", "Tap_Type_and_Enter"};
    return names[a.index()];
}

AtomicAction parse_action(std::string_view text) {
    const std::string_view s = trim(text);
    auto name_end = std::find_if(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    const std::string_view name(s.data(), static_cast<std::size_t>(name_end - s.begin()));
    std::string_view rest = trim(s.substr(name.size()));
    if (rest.size() < 2 || rest.substr(0, 2) != "at" ||
        (rest.size() > 2 && !std::isspace(static_cast<unsigned char>(rest[2]))))
        throw ParseError("expected 'Name at args'", std::string(text));
    const std::string_view arg_text = trim(rest.substr(2));

    json args;
    try {
        args = json::parse(arg_text);
    } catch (const json::parse_error&) {
        throw ParseError("arguments are not valid JSON", std::string(text));
    }

    auto no_args = [&]() {
        if (!args.is_null()) throw ParseError("action takes no arguments", std::string(text));
    };
    auto object_args = [&]() -> ArgReader {
        if (!args.is_object()) throw ParseError("arguments must be a JSON object", std::string(text));
        return ArgReader(args, text);
    };

    if (name == "Open_App") {
        auto r = object_args();
        action::OpenApp a{r.text("app_name")};
        r.done();
        return a;
    }
    if (name == "Tap") {
        auto r = object_args();
        action::Tap a{r.coordinate("x"), r.coordinate("y")};
        r.done();
        return a;
    }
    if (name == "Swipe") {
        auto r = object_args();
        action::Swipe a{r.coordinate("x1"), r.coordinate("y1"), r.coordinate("x2"), r.coordinate("y2")};
        r.done();
        return a;
    }
    if (name == "Type") {
        auto r = object_args();
        action::Type a{r.text("text")};
        r.done();
        return a;
    }
    if (name == "Enter") return no_args(), action::Enter{};
    if (name == "Back") return no_args(), action::Back{};
    if (name == "Home") return no_args(), action::Home{};
    if (name == "Wait") return no_args(), action::Wait{};
    // The action table spells the shortcut "Tap_Type_Enter"; recorded traces use "Tap_Type_and_Enter".
    if (name == "Tap_Type_and_Enter" || name == "Tap_Type_Enter") {
        auto r = object_args();
        action::TapTypeEnter a{r.coordinate("x"), r.coordinate("y"), r.text("text")};
        r.done();
        return a;
    }
    throw ParseError("unknown action name", std::string(text));
}

std::string render_action(const AtomicAction& a) {
    std::string args = std::visit(
        overloaded{
            [](const action::OpenApp& v) { return "{\"app_name\": " + quoted(v.app_name) + "}"; },
            [](const action::Tap& v) {
                return "{\"x\": " + std::to_string(v.x) + ", \"y\": " + std::to_string(v.y) + "}";
            },
            [](const action::Swipe& v) {
                return "{\"x1\": " + std::to_string(v.x1) + ", \"y1\": " + std::to_string(v.y1) +
                       ", \"x2\": " + std::to_string(v.x2) + ", \"y2\": " + std::to_string(v.y2) + "}";
            },
            [](const action::Type& v) { return "{\"text\": " + quoted(v.text) + "}"; },
            [](const action::TapTypeEnter& v) {
                return "{\"x\": " + std::to_string(v.x) + ", \"y\": " + std::to_string(v.y) +
                       ", \"text\": " + quoted(v.text) + "}";
            },
            [](const auto&) { return std::string("null"); },
        },
        a);
    return std::string(action_name(a)) + " at " + args;
}

std::vector<std::pair<int, int>> action_points(const AtomicAction& a) {
    return std::visit(overloaded{
                          [](const action::Tap& v) { return std::vector<std::pair<int, int>>{{v.x, v.y}}; },
                          [](const action::TapTypeEnter& v) {
                              return std::vector<std::pair<int, int>>{{v.x, v.y}};
                          },
                          [](const action::Swipe& v) {
                              return std::vector<std::pair<int, int>>{{v.x1, v.y1}, {v.x2, v.y2}};
                          },
                          [](const auto&) { return std::vector<std::pair<int, int>>{}; },
                      },
                      a);
}

}  // namespace mar
