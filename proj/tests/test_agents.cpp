#include "mar/agents/prompts.hpp"
#include "mar/agents/provider.hpp"
#include "mar/agents/roles.hpp"
#include "mar/core/digest.hpp"
#include "mar/core/error.hpp"

#include "fake_server.hpp"

#include <doctest.h>
#include <json.hpp>

#include <atomic>

using namespace mar;
using namespace mar::agents;
using nlohmann::json;

namespace {

Screenshot shot(const std::string& payload) {
    Screenshot s;
    s.payload = payload;
    s.width = 1440;
    s.height = 3120;
    s.source = "sim";
    s.mime = "application/json";
    return s;
}

PromptConfig config() {
    PromptConfig cfg;
    cfg.apps = {"Maps", "Notes"};
    return cfg;
}

std::vector<retrieval::ManagerDoc> three_exemplars() {
    return {{0, "Find a ramen place", "Open Maps. Search ramen."},
            {1, "Find a taco place", "Open Maps. Search tacos."},
            {2, "Find a sushi place", "Open Maps. Search sushi."}};
}

WorkingMemory memory_at(int step, bool flag, int errors) {
    WorkingMemory mem;
    mem.step = step;
    mem.error_flag = flag;
    mem.plan = "1. open maps";
    mem.subtask = {"Search for ramen", "Maps"};
    for (int i = 1; i <= errors; ++i)
        mem.error_log.push_back({action::Tap{i, i}, "miss " + std::to_string(i), i});
    return mem;
}

bool contains(const std::string& hay, std::string_view needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("manager prompt at t=1 carries every exemplar") {
    const auto task = TaskInstruction::make("Find the best ramen place in Chicago Loop");
    const auto r = prompt_gen_manager(task, memory_at(1, false, 0), shot("{}"), three_exemplars(), config());
    const std::string text = r.flattened();
    CHECK(r.role == "manager");
    CHECK(contains(text, section::kExemplars));
    for (const auto& e : three_exemplars()) {
        CHECK(contains(text, e.instruction));
        CHECK(contains(text, e.human_steps));
    }
    CHECK_FALSE(contains(text, section::kRecentErrors));
    CHECK(r.image_count() == 1);
}

TEST_CASE("manager prompt after t=1 without error flag") {
    const auto task = TaskInstruction::make("Find ramen");
    const auto r = prompt_gen_manager(task, memory_at(4, false, 5), shot("{}"), three_exemplars(), config());
    const std::string text = r.flattened();
    CHECK_FALSE(contains(text, section::kExemplars));
    CHECK_FALSE(contains(text, "Find a taco place"));
    CHECK_FALSE(contains(text, section::kRecentErrors));
    CHECK(contains(text, "Search for ramen (app: Maps)"));
}

TEST_CASE("manager prompt with error flag shows the k_err tail") {
    const auto task = TaskInstruction::make("Find ramen");
    const auto r = prompt_gen_manager(task, memory_at(4, true, 5), shot("{}"), {}, config());
    const std::string text = r.user_text();
    const auto at = text.find(section::kRecentErrors);
    REQUIRE(at != std::string::npos);
    const std::string block = text.substr(at);
    CHECK_FALSE(contains(block, "miss 1"));
    CHECK_FALSE(contains(block, "miss 2"));
    CHECK(contains(block, "Step 3: Tap at"));
    CHECK(contains(block, "miss 4"));
    CHECK(block.rfind("Step 5: ") > block.find("Step 4: "));
    CHECK(block.back() == '\n');
    CHECK(contains(block.substr(block.rfind("Step")), "miss 5"));
}

TEST_CASE("manager prompt omits screen elements; tips appear in every role") {
    const auto task = TaskInstruction::make("Find ramen");
    const auto cfg = config();
    const auto mem = memory_at(2, false, 0);
    PerceptionResult view;
    view.texts.push_back({"Search here", {10, 10, 200, 60}});
    const auto mgr = prompt_gen_manager(task, mem, shot("{}"), {}, cfg);
    CHECK_FALSE(contains(mgr.flattened(), section::kScreenElements));
    CHECK_FALSE(contains(mgr.flattened(), "Search here"));

    const std::vector<ModelRequest> all = {
        mgr,
        prompt_gen_operator(task, mem, shot("{}"), view, std::nullopt, cfg),
        prompt_gen_reflector(task, mem.subtask, action::Tap{1, 1}, shot("{}"), shot("{\"a\":1}"), view, view, "", cfg),
        prompt_gen_notetaker(task, mem.plan, mem.subtask, shot("{}"), view, "", "", cfg),
    };
    for (const auto& r : all)
        for (auto tip : kInitialTips) CHECK(contains(r.system_text, tip));
}

TEST_CASE("operator prompt with and without a retrieved exemplar") {
    const auto task = TaskInstruction::make("Find ramen");
    const auto mem = memory_at(2, false, 0);
    PerceptionResult view;
    RetrievedExemplar ex{{7, "Maps", "Search for sushi", "screenshots/x.json",
                          action::TapTypeEnter{200, 250, "sushi"}},
                         ImagePart{"kb:abc", "application/json", "{}"}};

    const auto with = prompt_gen_operator(task, mem, shot("{}"), view, ex, config());
    CHECK(with.image_count() == 2);
    CHECK(contains(with.flattened(), section::kReference));
    CHECK(contains(with.flattened(), render_action(ex.doc.action)));
    CHECK(contains(with.flattened(), "[image kb:abc]"));

    const auto without = prompt_gen_operator(task, mem, shot("{}"), view, std::nullopt, config());
    CHECK(without.image_count() == 1);
    CHECK_FALSE(contains(without.flattened(), section::kReference));
}

TEST_CASE("operator prompt shows the last k_log actions") {
    const auto task = TaskInstruction::make("Find ramen");
    auto mem = memory_at(11, false, 0);
    for (int i = 1; i <= 10; ++i) mem.action_log.push_back({action::Tap{i * 10, 5}, OutcomeLabel::Success, i});
    const auto r = prompt_gen_operator(task, mem, shot("{}"), {}, std::nullopt, config());
    const std::string text = r.user_text();
    for (int i = 1; i <= 5; ++i) CHECK_FALSE(contains(text, "Step " + std::to_string(i) + ": "));
    for (int i = 6; i <= 10; ++i) CHECK(contains(text, "Step " + std::to_string(i) + ": "));
    CHECK_FALSE(contains(text, section::kRecentErrors));
}

TEST_CASE("manager parser") {
    const std::vector<std::string> apps = {"Maps", "Notes"};
    auto d = parse_manager_response("PLAN: open maps\nthen search\nSUBTASK: Open Maps\nAPP: Maps\n", apps);
    CHECK(d.plan == "open maps\nthen search");
    CHECK(d.subtask == Subtask{"Open Maps", "Maps"});
    CHECK_FALSE(d.done);

    CHECK(parse_manager_response("**PLAN:** x\n**SUBTASK:** go home\n**APP:** None", apps).subtask.app == "None");
    CHECK(parse_manager_response("PLAN: x\nSUBTASK: DONE", apps).done);
    CHECK_THROWS_AS(parse_manager_response("PLAN: x\nAPP: Maps", apps), ResponseFormatError);
    CHECK_THROWS_AS(parse_manager_response("PLAN: x\nSUBTASK: y\nAPP: Yelp", apps), ResponseFormatError);
    CHECK_THROWS_AS(parse_manager_response("PLAN: x\nSUBTASK: y", apps), ResponseFormatError);
}

TEST_CASE("operator parser") {
    CHECK(parse_operator_response("THOUGHT: tap it\nACTION: Tap at {\"x\": 5, \"y\": 9}") ==
          AtomicAction{action::Tap{5, 9}});
    CHECK(parse_operator_response("Thought: wait\nAction: Wait at null\n") == AtomicAction{action::Wait{}});
    CHECK_THROWS_AS(parse_operator_response("THOUGHT: x\nACTION: tap the thing please"), ParseError);
    CHECK_THROWS_AS(parse_operator_response("nothing useful"), ResponseFormatError);
}

TEST_CASE("reflector parser") {
    auto r = parse_reflector_response("OUTCOME: A\nPROGRESS: opened maps\nFEEDBACK: ignored");
    CHECK(r.outcome == OutcomeLabel::Success);
    CHECK(r.feedback.empty());
    r = parse_reflector_response("OUTCOME: B (wrong page)\nPROGRESS: p\nFEEDBACK: landed on settings");
    CHECK(r.outcome == OutcomeLabel::FailedWrongPage);
    CHECK(r.feedback == "landed on settings");
    CHECK_THROWS_AS(parse_reflector_response("OUTCOME: D\nPROGRESS: p\nFEEDBACK: f"), ResponseFormatError);
    CHECK_THROWS_AS(parse_reflector_response("OUTCOME: C\nPROGRESS: p"), ResponseFormatError);
    CHECK_THROWS_AS(parse_reflector_response("OUTCOME: A"), ResponseFormatError);
}

TEST_CASE("notetaker parser") {
    CHECK(parse_notetaker_response("NOTES: Ramen-san, 4.6 stars", "old") == "Ramen-san, 4.6 stars");
    CHECK(parse_notetaker_response("NOTES: <unchanged>", "old") == "old");
    CHECK_THROWS_AS(parse_notetaker_response("nothing", "old"), ResponseFormatError);
}

TEST_CASE("scripted provider replays in order") {
    ModelRequest req;
    req.role = "manager";
    req.system_text = "Role: Manager";
    req.user_parts.emplace_back(std::string("hello world"));
    ScriptedProvider p({{"Role: Manager", "PLAN: a"}, {"nope", "x"}});
    const auto resp = p.complete(req);
    CHECK(resp.text == "PLAN: a");
    CHECK(resp.usage.input == 4);
    CHECK(resp.usage.output == 2);
    CHECK_THROWS_AS(p.complete(req), MatcherMiss);
    CHECK(p.consumed() == 1);

    ScriptedProvider empty({});
    CHECK_THROWS_AS(empty.complete(req), ScriptExhausted);
}

TEST_CASE("http provider") {
    ModelRequest req;
    req.role = "operator";
    req.system_text = "sys";
    req.user_parts.emplace_back(std::string("pick"));
    req.user_parts.emplace_back(ImagePart{"sim:1", "image/png", std::string("\x89PNG\0\1", 6)});
    const HttpProvider::Options fast{3, 1, 5};

    SUBCASE("success carries auth, images and usage") {
        testing::FakeServer fake;
        json seen;
        std::string auth;
        fake.server.Post("/complete", [&](const httplib::Request& r, httplib::Response& res) {
            seen = json::parse(r.body);
            auth = r.get_header_value("Authorization");
            res.set_content(R"({"text":"ACTION: Home at null","input_tokens":11,"output_tokens":3})",
                            "application/json");
        });
        fake.start();
        HttpProvider p(fake.url(), "sekret", fast);
        const auto resp = p.complete(req);
        CHECK(resp.text == "ACTION: Home at null");
        CHECK(resp.usage == TokenUsage{11, 3});
        CHECK(auth == "Bearer sekret");
        CHECK(seen["role"] == "operator");
        CHECK(seen["system"] == "sys");
        REQUIRE(seen["user_parts"].size() == 2);
        CHECK(seen["user_parts"][1]["data"] == base64_encode(std::string("\x89PNG\0\1", 6)));
        CHECK(seen["user_parts"][1]["mime"] == "image/png");
    }

    SUBCASE("retries 503 and 429") {
        testing::FakeServer fake;
        std::atomic<int> calls{0};
        fake.server.Post("/complete", [&](const httplib::Request&, httplib::Response& res) {
            const int n = ++calls;
            if (n == 1) res.status = 503;
            else if (n == 2) res.status = 429;
            else res.set_content(R"({"text":"ok"})", "application/json");
        });
        fake.start();
        HttpProvider p(fake.url(), "", fast);
        CHECK(p.complete(req).text == "ok");
        CHECK(calls == 3);
    }

    SUBCASE("gives up after the retry budget") {
        testing::FakeServer fake;
        std::atomic<int> calls{0};
        fake.server.Post("/complete", [&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 500;
        });
        fake.start();
        HttpProvider p(fake.url(), "", fast);
        CHECK_THROWS_AS(p.complete(req), ProviderError);
        CHECK(calls == 4);
    }

    SUBCASE("client errors are not retried") {
        testing::FakeServer fake;
        std::atomic<int> calls{0};
        fake.server.Post("/complete", [&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 400;
        });
        fake.start();
        HttpProvider p(fake.url(), "", fast);
        CHECK_THROWS_AS(p.complete(req), ProviderError);
        CHECK(calls == 1);
    }

    SUBCASE("malformed body") {
        testing::FakeServer fake;
        fake.server.Post("/complete", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"answer":"x"})", "application/json");
        });
        fake.start();
        HttpProvider p(fake.url(), "", fast);
        CHECK_THROWS_AS(p.complete(req), ResponseFormatError);
    }
}
