#include "mar/core/error.hpp"
#include "mar/retrieval/embedding.hpp"
#include "mar/retrieval/index.hpp"
#include "mar/retrieval/kb_io.hpp"

#include "fake_server.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace mar;
using namespace mar::retrieval;
using nlohmann::json;

namespace {

std::shared_ptr<const Embedder> fallback() { return std::make_shared<FallbackEmbedder>(); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("fnv1a64 reference vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    // Values below come from a separate Python implementation of the hash.
    CHECK(fnv1a64("tap") == 6257681422006929570ULL);
    CHECK(fnv1a64("search") == 2453279694985028073ULL);
}

TEST_CASE("tokenize") {
    CHECK(tokenize("Tap the search bar.") == std::vector<std::string>{"tap", "the", "search", "bar"});
    CHECK(tokenize("  ,,  ").empty());
    CHECK(tokenize("4.5 Stars & up") == std::vector<std::string>{"4", "5", "stars", "up"});
    CHECK(tokenize("café") == std::vector<std::string>{"caf\xc3\xa9"});
}

TEST_CASE("fallback embedding values") {
    const auto v = fallback_embed("Tap the search bar.");
    REQUIRE(v.size() == kFallbackDim);
    for (int i = 0; i < kFallbackDim; ++i) {
        const bool hot = i == 26 || i == 34 || i == 41 || i == 60;
        CHECK(v[i] == doctest::Approx(hot ? 0.5 : 0.0));
    }
    const auto z = fallback_embed("");
    CHECK(z.size() == kFallbackDim);
    CHECK(z.norm() == 0.0);
    CHECK(fallback_embed("tap TAP tap")[34] == doctest::Approx(1.0));
    CHECK(fallback_embed("café")[9] == doctest::Approx(1.0));
}

TEST_CASE("fallback cosine examples") {
    CHECK(cosine_similarity(fallback_embed("ramen"), fallback_embed("ramen ramen")) == doctest::Approx(1.0));
    // "ramen" and "hotel" land in buckets 52 and 29.
    CHECK(cosine_similarity(fallback_embed("ramen"), fallback_embed("hotel")) == 0.0);
    CHECK(cosine_similarity(fallback_embed("Tap the search bar."), fallback_embed("Tap the filter button.")) ==
          doctest::Approx(0.5));
}

TEST_CASE("cosine similarity") {
    Eigen::Vector3d e1(1, 0, 0);
    CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0));
    CHECK(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
    CHECK(cosine_similarity(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0)) == doctest::Approx(0.70710678).epsilon(1e-9));
    CHECK(cosine_similarity(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)) == 0.0);
    Eigen::VectorXd a(2), b(3);
    a << 1, 2;
    b << 1, 2, 3;
    CHECK_THROWS_AS(cosine_similarity(a, b), DimensionMismatch);
}

TEST_CASE("rank_top_k orders ties by id") {
    Embedding<double> s(5);
    s << 0.5, 0.9, 0.5 + 1e-12, 0.1, 0.9;
    const std::vector<int> ids = {4, 7, 2, 0, 3};
    const auto order = rank_top_k(s, ids, 5);
    std::vector<int> got;
    for (auto p : order) got.push_back(ids[p]);
    CHECK(got == std::vector<int>{3, 7, 2, 4, 0});
    CHECK(rank_top_k(s, ids, 2).size() == 2);
}

TEST_CASE("manager retrieval") {
    const std::vector<ManagerDoc> docs = {
        {0, "Search for the best ramen place in Chicago Loop", "open Maps app, tap on the search bar"},
        {1, "Book a hotel room in Urbana for two nights", "open Booking"},
        {2, "Find a yoga video for beginners on YouTube", "open YouTube"},
    };
    const auto kb = build_manager_index(docs, fallback());
    // Cosines from the Python oracle: 0.6030, 0.1667, 0.3162.
    auto top = manager_retrieve("find ramen place Chicago", kb, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].id == 0);
    auto all = manager_retrieve("find ramen place Chicago", kb, 5);
    REQUIRE(all.size() == 3);
    CHECK(all[0].id == 0);
    CHECK(all[1].id == 2);
    CHECK(all[2].id == 1);
    CHECK(manager_retrieve(docs[1].instruction, kb, 1)[0].id == 1);
    CHECK_THROWS_AS(manager_retrieve("x", kb, 0), Error);
    const auto empty = build_manager_index({}, fallback());
    CHECK(empty.empty());
    CHECK(manager_retrieve("anything", empty, 3).empty());
}

TEST_CASE("manager index of 50 docs") {
    std::vector<ManagerDoc> docs;
    for (int i = 0; i < 50; ++i) docs.push_back({i, "task number " + std::to_string(i), "steps"});
    const auto kb = build_manager_index(docs, fallback());
    CHECK(kb.size() == 50);
    CHECK(kb.embeddings().rows() == 50);
    CHECK(kb.embeddings().cols() == kFallbackDim);
}

TEST_CASE("operator retrieval stays inside the app library") {
    std::vector<OperatorDoc> docs;
    docs.push_back({0, "Maps", "Tap the search bar.", "s/a.json", action::Tap{404, 260}});
    for (int i = 1; i < 28; ++i)
        docs.push_back({i, "Maps", "Maps subtask " + std::to_string(i), "s/a.json", action::Tap{i, i}});
    docs.push_back({100, "Notes", "Tap the search bar.", "s/b.json", action::Tap{1, 1}});
    const auto reg = build_operator_registry(docs, fallback());
    CHECK(reg.find("Maps")->size() == 28);
    CHECK(reg.total_docs() == 29);
    auto hit = operator_retrieve("Tap the search bar.", "Maps", reg);
    REQUIRE(hit);
    CHECK(hit->action == AtomicAction{action::Tap{404, 260}});
    CHECK(hit->app == "Maps");
    CHECK_FALSE(operator_retrieve("Tap the search bar.", "Chess", reg));
    for (const char* q : {"open settings", "", "Notes", "zzz"}) {
        auto r = operator_retrieve(q, "Maps", reg);
        REQUIRE(r);
        CHECK(r->app == "Maps");
    }
}

TEST_CASE("registry rejects inconsistent libraries") {
    OperatorKBRegistry reg;
    CHECK_THROWS_AS(reg.add("Maps", OperatorLibrary({{0, "Notes", "x", "s", action::Home{}}}, fallback())),
                    InvalidKbEntry);
    reg.add("Maps", OperatorLibrary({{0, "Maps", "x", "s", action::Home{}}}, fallback()));
    CHECK_THROWS_AS(reg.add("Notes", OperatorLibrary({{0, "Notes", "y", "s", action::Home{}}}, fallback())),
                    InvalidKbEntry);
}

TEST_CASE("KB files round trip byte for byte") {
    const auto root = testing::data_dir() / "ramen" / "kb";
    const auto dir = testing::scratch_dir("kb_roundtrip");
    const auto mdocs = load_manager_docs(root / kManagerFile);
    CHECK(mdocs.size() == 5);
    write_manager_docs(dir / kManagerFile, mdocs);
    CHECK(slurp(dir / kManagerFile) == slurp(root / kManagerFile));
    const auto odocs = load_operator_docs(root / kOperatorDir / "Maps.jsonl");
    write_operator_docs(dir / "Maps.jsonl", odocs);
    CHECK(slurp(dir / "Maps.jsonl") == slurp(root / kOperatorDir / "Maps.jsonl"));
    CHECK(mdocs[0].human_steps.rfind("open Maps app, tap on the search bar", 0) == 0);
}

TEST_CASE("KB loading validation") {
    const auto dir = testing::scratch_dir("kb_bad");
    std::filesystem::create_directories(dir / kOperatorDir);
    {
        std::ofstream(dir / kOperatorDir / "Maps.jsonl")
            << R"({"id":0,"app":"Notes","subtask":"x","screenshot":"screenshots/a.json","action":"Home at null"})"
            << "\n";
    }
    CHECK_THROWS_AS(load_operator_kb(dir), InvalidKbEntry);
    {
        std::ofstream(dir / kOperatorDir / "Maps.jsonl")
            << R"({"id":0,"app":"Maps","subtask":"x","screenshot":"../../etc/passwd","action":"Home at null"})"
            << "\n";
    }
    CHECK_THROWS_AS(load_operator_kb(dir), InvalidKbEntry);
    {
        std::ofstream(dir / kOperatorDir / "Maps.jsonl")
            << R"({"id":0,"app":"Maps","subtask":"x","screenshot":"screenshots/a.json","action":"Fly at null"})"
            << "\n";
    }
    CHECK_THROWS(load_operator_kb(dir));
    const auto kb = load_knowledge_base(testing::scratch_dir("kb_empty"), fallback());
    CHECK(kb.manager.empty());
    CHECK(kb.operators.total_docs() == 0);
}

TEST_CASE("http embedder against a fake sidecar") {
    testing::FakeServer fake;
    std::atomic<int> posts{0};
    fake.server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok","model":"fake","dim":3})", "application/json");
    });
    fake.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++posts;
        const auto body = json::parse(req.body);
        json vectors = json::array();
        for (const auto& t : body.at("texts")) {
            const double n = static_cast<double>(t.get<std::string>().size());
            const double norm = std::sqrt(n * n + 1.0);
            vectors.push_back({n / norm, 1.0 / norm, 0.0});
        }
        res.set_content(json{{"model", "fake"}, {"dim", 3}, {"vectors", vectors}}.dump(), "application/json");
    });
    fake.start();

    HttpEmbedder emb(fake.url());
    CHECK(emb.healthy());
    const auto m = emb.embed({"a", "abc", "a"});
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 3);
    CHECK(m.row(0) == m.row(2));
    CHECK(m(1, 0) == doctest::Approx(3.0 / std::sqrt(10.0)));
    CHECK(emb.embed({}).rows() == 0);

    posts = 0;
    std::vector<std::string> many(600, "x");
    CHECK(emb.embed(many).rows() == 600);
    CHECK(posts == 3);

    auto chosen = make_embedder("http:" + fake.url(), false);
    CHECK(chosen->name() != FallbackEmbedder().name());
    const std::vector<ManagerDoc> docs = {{0, "aa", "s"}, {1, "aaaa", "s"}};
    const auto a = build_manager_index(docs, chosen);
    const auto b = build_manager_index(docs, chosen);
    CHECK(a.embeddings() == b.embeddings());
}

TEST_CASE("http embedder failure modes") {
    {
        testing::FakeServer fake;
        fake.server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
            res.set_content(R"({"status":"loading"})", "application/json");
        });
        fake.server.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"model":"m","dim":2,"vectors":[[1,0]]})", "application/json");
        });
        fake.start();
        HttpEmbedder emb(fake.url());
        CHECK_FALSE(emb.healthy());
        CHECK_THROWS_AS(emb.embed({"a", "b"}), EmbedderUnavailable);
        CHECK_THROWS_AS(make_embedder("http:" + fake.url(), false), EmbedderUnavailable);
        CHECK(make_embedder("http:" + fake.url(), true)->name() == FallbackEmbedder().name());
    }
    // Nothing listens on this port once the server above is gone.
    HttpEmbedder dead("http://127.0.0.1:9", 1);
    CHECK_FALSE(dead.healthy());
    CHECK_THROWS_AS(dead.embed({"a"}), EmbedderUnavailable);
    CHECK_THROWS_AS(make_embedder("bogus", true), Error);
}

TEST_CASE("real embedding sidecar contract" * doctest::skip(std::getenv("MAR_EMBEDDER_URL") == nullptr)) {
    const std::string url = std::getenv("MAR_EMBEDDER_URL");
    auto emb = make_embedder("http:" + url, false);
    std::vector<ManagerDoc> docs;
    const char* texts[] = {"tap the search bar", "open maps", "type ramen", "tap filter", "apply filter",
                           "swipe up",           "go home",   "open notes", "write summary", "tap first result"};
    for (int i = 0; i < 10; ++i) docs.push_back({i, texts[i], "s"});
    const auto a = build_manager_index(docs, emb);
    const auto b = build_manager_index(docs, emb);
    CHECK(a.embeddings() == b.embeddings());
    for (int i = 0; i < a.embeddings().rows(); ++i) CHECK(a.embeddings().row(i).norm() == doctest::Approx(1.0).epsilon(1e-4));
    for (const char* q : texts) {
        std::vector<int> ra, rb;
        for (const auto& d : manager_retrieve(q, a, 10)) ra.push_back(d.id);
        for (const auto& d : manager_retrieve(q, b, 10)) rb.push_back(d.id);
        CHECK(ra == rb);
    }
}
