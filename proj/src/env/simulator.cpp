#include "mar/env/simulator.hpp"

#include "mar/core/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <regex>

namespace mar::env {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const TransitionRule* match_rule(const Scenario& sc, const std::string& screen, const std::string& action,
                                 const std::string* element, const std::string* text, std::size_t* index) {
    for (std::size_t i = 0; i < sc.transitions.size(); ++i) {
        const auto& r = sc.transitions[i];
        if (r.from != screen || r.on.action != action) continue;
        if (r.on.element && (element == nullptr || *r.on.element != *element)) continue;
        if (r.on.text && (text == nullptr || *r.on.text != *text)) continue;
        *index = i;
        return &r;
    }
    return nullptr;
}

void go_to(DeviceState& st, const Scenario& sc, const std::string& target) {
    if (target == sc.initial_screen) {
        st.back_stack.clear();
    } else {
        st.back_stack.push_back(st.screen);
    }
    st.screen = target;
    st.focus.reset();
}

struct Stepper {
    const Scenario& sc;
    DeviceState st;
    std::optional<std::size_t> fired;

    bool fire(const std::string& action, const std::string* element, const std::string* text) {
        std::size_t idx = 0;
        const TransitionRule* r = match_rule(sc, st.screen, action, element, text, &idx);
        if (r == nullptr) return false;
        go_to(st, sc, r->to);
        if (r->focus) st.focus = *r->focus;
        for (const auto& [el, value] : r->slots) st.slots[slot_key(r->to, el)] = value;
        fired = idx;
        return true;
    }

    void tap(int x, int y) {
        const Element* hit = sc.screen(st.screen).hit_test(x, y);
        if (hit == nullptr) return;
        if (fire("Tap", &hit->id, nullptr)) return;
        if (hit->kind == ElementKind::Input) st.focus = hit->id;
    }

    void type(const std::string& text) {
        if (st.focus) st.slots[slot_key(st.screen, *st.focus)] += text;
        fire("Type", nullptr, &text);
    }

    void enter() { fire("Enter", st.focus ? &*st.focus : nullptr, nullptr); }

    void apply(const AtomicAction& a) {
        std::visit(overloaded{
                       [&](const action::OpenApp& v) {
                           // Launches the app fresh from anywhere, as if from the launcher.
                           if (!sc.has_app(v.app_name)) return;
                           st.screen = sc.entry_screen(v.app_name);
                           st.back_stack.assign(1, sc.initial_screen);
                           st.focus.reset();
                       },
                       [&](const action::Tap& v) { tap(v.x, v.y); },
                       [&](const action::Swipe& v) {
                           const Element* hit = sc.screen(st.screen).hit_test(v.x1, v.y1);
                           fire("Swipe", hit ? &hit->id : nullptr, nullptr);
                       },
                       [&](const action::Type& v) { type(v.text); },
                       [&](const action::Enter&) { enter(); },
                       [&](const action::Back&) {
                           if (fire("Back", nullptr, nullptr)) return;
                           if (st.back_stack.empty()) return;
                           st.screen = st.back_stack.back();
                           st.back_stack.pop_back();
                           st.focus.reset();
                       },
                       [&](const action::Home&) {
                           st.screen = sc.initial_screen;
                           st.back_stack.clear();
                           st.focus.reset();
                       },
                       [&](const action::Wait&) { fire("Wait", nullptr, nullptr); },
                       [&](const action::TapTypeEnter& v) {
                           tap(v.x, v.y);
                           type(v.text);
                           enter();
                       },
                   },
                   a);
    }
};

}  // namespace

SimStep sim_execute(const DeviceState& state, const Scenario& scenario, const AtomicAction& a) {
    Stepper s{scenario, state, std::nullopt};
    s.apply(a);
    SimStep out;
    out.changed = !(s.st == state);
    out.state = std::move(s.st);
    out.rule = s.fired;
    out.screenshot = sim_screenshot(out.state, scenario);
    return out;
}

Screenshot sim_screenshot(const DeviceState& state, const Scenario& scenario) {
    const ScreenDef& sd = scenario.screen(state.screen);
    json j;
    j["screen"] = state.screen;
    j["focus"] = state.focus ? json(*state.focus) : json(nullptr);
    json slots = json::object();
    const std::string prefix = state.screen + "/";
    for (const auto& [k, v] : state.slots)
        if (k.rfind(prefix, 0) == 0) slots[k.substr(prefix.size())] = v;
    j["slots"] = slots;
    Screenshot s;
    s.payload = j.dump();
    s.width = sd.width;
    s.height = sd.height;
    s.source = "sim";
    s.screen_id = state.screen;
    s.mime = "application/json";
    return s;
}

namespace {

PerceptionResult perceive_screen(const ScreenDef& sd, const std::map<std::string, std::string>& visible_slots) {
    std::vector<const Element*> els;
    for (const auto& e : sd.elements) els.push_back(&e);
    std::sort(els.begin(), els.end(), [](const Element* a, const Element* b) { return a->id < b->id; });
    PerceptionResult r;
    for (const Element* e : els) {
        if (e->kind == ElementKind::Icon) {
            r.icons.push_back({e->box, e->text});
            continue;
        }
        std::string text = e->text;
        if (e->kind == ElementKind::Input) {
            auto it = visible_slots.find(e->id);
            if (it != visible_slots.end() && !it->second.empty()) text = it->second;
        }
        r.texts.push_back({text, e->box});
    }
    return r;
}

}  // namespace

PerceptionResult sim_perceive(const DeviceState& state, const Scenario& scenario) {
    std::map<std::string, std::string> visible;
    const std::string prefix = state.screen + "/";
    for (const auto& [k, v] : state.slots)
        if (k.rfind(prefix, 0) == 0) visible[k.substr(prefix.size())] = v;
    return perceive_screen(scenario.screen(state.screen), visible);
}

PerceptionResult SimPerceptor::perceive(const Screenshot& s) const {
    json j;
    try {
        j = json::parse(s.payload);
    } catch (const json::parse_error&) {
        throw Error("SimPerceptor: screenshot payload is not a simulator stand-in");
    }
    return perceive_screen(scenario_.screen(j.at("screen").get<std::string>()),
                           j.value("slots", std::map<std::string, std::string>{}));
}

OutcomeLabel oracle_outcome(const Scenario& scenario, const std::string& screen, const AtomicAction& a, bool changed) {
    const std::string rendered = render_action(a);
    for (const auto& o : scenario.oracle_outcomes)
        if (o.screen == screen && std::regex_search(rendered, std::regex(o.action_pattern))) return o.outcome;
    return changed ? OutcomeLabel::Success : OutcomeLabel::FailedNoChange;
}

SimulatedDevice::SimulatedDevice(Scenario scenario)
    : scenario_(std::move(scenario)), state_(DeviceState::initial(scenario_)), perceptor_(scenario_) {}

Screenshot SimulatedDevice::capture_screenshot() { return sim_screenshot(state_, scenario_); }

Execution SimulatedDevice::execute(const AtomicAction& a) {
    Execution e;
    e.screen_before = state_.screen;
    SimStep step = sim_execute(state_, scenario_, a);
    state_ = std::move(step.state);
    e.screen_after = state_.screen;
    e.state_changed = step.changed;
    e.oracle_outcome = oracle_outcome(scenario_, e.screen_before, a, step.changed);
    const bool scripted_wait =
        std::holds_alternative<action::Wait>(a) && *e.oracle_outcome == OutcomeLabel::Success;
    e.operation_correct = step.changed || scripted_wait;
    return e;
}

}  // namespace mar::env
