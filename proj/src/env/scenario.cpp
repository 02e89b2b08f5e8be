#include "mar/env/scenario.hpp"

#include "mar/core/error.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>

namespace mar::env {

using nlohmann::json;

namespace {

ElementKind parse_kind(const std::string& k) {
    if (k == "text") return ElementKind::Text;
    if (k == "icon") return ElementKind::Icon;
    if (k == "input") return ElementKind::Input;
    throw InvalidScenario("unknown element kind '" + k + "'");
}

bool disjoint(const BoundingBox& a, const BoundingBox& b) {
    return a.x2 <= b.x1 || b.x2 <= a.x1 || a.y2 <= b.y1 || b.y2 <= a.y1;
}

bool nested_in(const BoundingBox& inner, const BoundingBox& outer) {
    return inner.x1 >= outer.x1 && inner.y1 >= outer.y1 && inner.x2 <= outer.x2 && inner.y2 <= outer.y2;
}

bool overlap(const std::optional<std::string>& a, const std::optional<std::string>& b) {
    return !a || !b || *a == *b;
}

}  // namespace

const Element* ScreenDef::element(const std::string& element_id) const {
    for (const auto& e : elements)
        if (e.id == element_id) return &e;
    return nullptr;
}

const Element* ScreenDef::hit_test(int x, int y) const {
    const Element* best = nullptr;
    for (const auto& e : elements) {
        if (!e.box.contains(x, y)) continue;
        if (best == nullptr || e.box.area() < best->box.area() ||
            (e.box.area() == best->box.area() && e.id < best->id))
            best = &e;
    }
    return best;
}

const ScreenDef& Scenario::screen(const std::string& id) const {
    for (const auto& s : screens)
        if (s.id == id) return s;
    throw InvalidScenario("unknown screen '" + id + "'");
}

bool Scenario::has_screen(const std::string& id) const {
    return std::any_of(screens.begin(), screens.end(), [&](const auto& s) { return s.id == id; });
}

bool Scenario::has_app(const std::string& app) const {
    return std::find(apps.begin(), apps.end(), app) != apps.end();
}

const std::string& Scenario::entry_screen(const std::string& app) const {
    for (const auto& s : screens)
        if (s.app == app) return s.id;
    throw InvalidScenario("app '" + app + "' has no screens");
}

void Scenario::validate() const {
    if (!has_screen(initial_screen)) throw InvalidScenario("initial screen '" + initial_screen + "' does not exist");
    std::set<std::string> seen_apps;
    for (const auto& a : apps) {
        if (!seen_apps.insert(a).second) throw InvalidScenario("duplicate app '" + a + "'");
        entry_screen(a);
    }
    std::set<std::string> seen_screens;
    for (const auto& s : screens) {
        if (!seen_screens.insert(s.id).second) throw InvalidScenario("duplicate screen '" + s.id + "'");
        if (s.width <= 0 || s.height <= 0) throw InvalidScenario("screen '" + s.id + "' has no size");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < s.elements.size(); ++i) {
            const auto& e = s.elements[i];
            if (!ids.insert(e.id).second) throw InvalidScenario("duplicate element '" + e.id + "' on " + s.id);
            if (e.box.x1 < 0 || e.box.y1 < 0 || e.box.x2 > s.width || e.box.y2 > s.height || e.box.x1 >= e.box.x2 ||
                e.box.y1 >= e.box.y2)
                throw InvalidScenario("element '" + e.id + "' on " + s.id + " lies outside the screen");
            for (std::size_t j = 0; j < i; ++j) {
                const auto& o = s.elements[j];
                if (!disjoint(e.box, o.box) && !nested_in(e.box, o.box) && !nested_in(o.box, e.box))
                    throw InvalidScenario("elements '" + o.id + "' and '" + e.id + "' on " + s.id +
                                          " partially overlap");
            }
        }
    }
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& r = transitions[i];
        if (!has_screen(r.from) || !has_screen(r.to))
            throw InvalidScenario("transition " + std::to_string(i) + " references a missing screen");
        if (r.on.element && screen(r.from).element(*r.on.element) == nullptr)
            throw InvalidScenario("transition " + std::to_string(i) + " matches unknown element '" + *r.on.element + "'");
        if (r.focus && screen(r.to).element(*r.focus) == nullptr)
            throw InvalidScenario("transition " + std::to_string(i) + " focuses unknown element '" + *r.focus + "'");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = transitions[j];
            if (o.from == r.from && o.on.action == r.on.action && overlap(o.on.element, r.on.element) &&
                overlap(o.on.text, r.on.text))
                throw InvalidScenario("transitions " + std::to_string(j) + " and " + std::to_string(i) +
                                      " both match " + r.on.action + " on " + r.from);
        }
    }
    for (const auto& o : oracle_outcomes) {
        try {
            std::regex re(o.action_pattern);
        } catch (const std::regex_error&) {
            throw InvalidScenario("bad oracle action pattern '" + o.action_pattern + "'");
        }
    }
}

Scenario Scenario::from_json(const json& j) {
    Scenario s;
    try {
        s.name = j.value("name", "scenario");
        s.apps = j.at("apps").get<std::vector<std::string>>();
        s.initial_screen = j.value("initial_screen", std::string(kHomeScreen));
        for (const auto& js : j.at("screens")) {
            ScreenDef sd;
            sd.id = js.at("id").get<std::string>();
            sd.app = js.value("app", std::string(kHomeScreen));
            sd.width = js.value("width", 1440);
            sd.height = js.value("height", 3120);
            for (const auto& je : js.value("elements", json::array())) {
                auto b = je.at("bbox").get<std::vector<int>>();
                if (b.size() != 4) throw InvalidScenario("bbox needs 4 integers");
                sd.elements.push_back(Element{je.at("id").get<std::string>(), je.value("text", ""),
                                              BoundingBox{b[0], b[1], b[2], b[3]},
                                              parse_kind(je.value("kind", "text"))});
            }
            s.screens.push_back(std::move(sd));
        }
        for (const auto& jt : j.value("transitions", json::array())) {
            TransitionRule r;
            r.from = jt.at("from").get<std::string>();
            r.to = jt.at("to").get<std::string>();
            const auto& on = jt.at("on");
            r.on.action = on.at("action").get<std::string>();
            if (on.contains("element")) r.on.element = on["element"].get<std::string>();
            if (on.contains("text")) r.on.text = on["text"].get<std::string>();
            if (jt.contains("focus")) r.focus = jt["focus"].get<std::string>();
            r.slots = jt.value("slots", std::map<std::string, std::string>{});
            s.transitions.push_back(std::move(r));
        }
        for (const auto& jo : j.value("oracle_outcomes", json::array()))
            s.oracle_outcomes.push_back(OracleOutcome{jo.at("screen").get<std::string>(),
                                                      jo.at("action").get<std::string>(),
                                                      outcome_from_code(jo.at("outcome").get<std::string>())});
        s.completion_items = j.value("completion_items", json::array());
    } catch (const json::exception& e) {
        throw InvalidScenario(std::string("malformed scenario: ") + e.what());
    } catch (const ResponseFormatError& e) {
        throw InvalidScenario(e.what());
    }
    s.validate();
    return s;
}

Scenario Scenario::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open scenario " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidScenario(file.string() + ": " + e.what());
    }
    return from_json(j);
}

DeviceState DeviceState::initial(const Scenario& s) {
    DeviceState st;
    st.screen = s.initial_screen;
    return st;
}

std::string slot_key(const std::string& screen, const std::string& element) { return screen + "/" + element; }

}  // namespace mar::env
