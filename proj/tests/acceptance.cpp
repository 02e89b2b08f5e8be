// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
//   acceptance                 run every check
//   acceptance --write-golden  regenerate data/ramen/golden_trajectory.json first
#include "mar/agents/prompts.hpp"
#include "mar/core/action.hpp"
#include "mar/eval/metrics.hpp"
#include "mar/kb/builder.hpp"
#include "mar/kb/trace.hpp"
#include "mar/retrieval/index.hpp"

#include "kb_fixture.hpp"
#include "ramen_fixture.hpp"
#include "support.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace mar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

void expect(Outcome& o, bool cond, const std::string& what) {
    if (cond) return;
    if (o.pass) o.detail = what;
    o.pass = false;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1. efficiency arithmetic against a published results table ----

Outcome efficiency_table() {
    struct Row {
        double cr, steps, efficiency;
    };
    // (CR, Steps, printed Efficiency) for each of the eight rows.
    const std::array<Row, 8> rows = {{{24.4, 30.0, 0.81},
                                      {25.4, 30.0, 0.85},
                                      {29.2, 30.0, 0.97},
                                      {33.7, 29.0, 1.16},
                                      {38.5, 23.5, 1.64},
                                      {58.3, 22.4, 2.60},
                                      {61.2, 21.8, 2.81},
                                      {75.7, 18.8, 4.03}}};
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double e = eval::compute_efficiency(rows[i].cr, rows[i].steps);
        std::ostringstream msg;
        msg << "row " << i + 1 << ": " << e << " vs " << rows[i].efficiency;
        expect(o, std::abs(e - rows[i].efficiency) <= 0.005, msg.str());
    }
    const double s = seconds_since(t0);
    expect(o, s < 1.0, "took " + std::to_string(s) + " s");
    if (o.pass) o.detail = "8/8 rows within 0.005";
    return o;
}

// ---- 2. retrieval against a brute-force oracle in exact integer arithmetic ----

namespace oracle {

using Counts = std::array<long long, 64>;

Counts bag(const std::string& text) {
    Counts c{};
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : tok) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        c[h % 64] += 1;
        tok.clear();
    };
    for (unsigned char ch : text) {
        const bool word = ch >= 0x80 || (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
        if (!word) {
            flush();
            continue;
        }
        tok.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : static_cast<char>(ch));
    }
    flush();
    return c;
}

// Cosine to a fixed query is dot / |doc| (the query norm is shared), kept as
// (dot^2, |doc|^2) so candidates compare by cross-multiplication.
struct Score {
    long long dot = 0;
    long long norm2 = 0;
    int id = 0;
};

Score score(const Counts& q, const Counts& d, int id) {
    Score s{0, 0, id};
    for (std::size_t b = 0; b < 64; ++b) {
        s.dot += q[b] * d[b];
        s.norm2 += d[b] * d[b];
    }
    if (s.norm2 == 0) s = {0, 1, id};
    return s;
}

bool better(const Score& a, const Score& b) {
    const __int128 lhs = static_cast<__int128>(a.dot) * a.dot * b.norm2;
    const __int128 rhs = static_cast<__int128>(b.dot) * b.dot * a.norm2;
    if (lhs != rhs) return lhs > rhs;
    return a.id < b.id;
}

}  // namespace oracle

std::string random_sentence(std::mt19937_64& rng) {
    static const char* words[] = {"find", "ramen", "place", "Chicago", "Loop", "hotel", "book", "Urbana", "yoga",
                                  "video", "YouTube", "search", "best", "rating", "reviews", "note", "write",
                                  "summary", "open", "Maps", "tap", "filter", "café", "nights", "two", "for",
                                  "the", "in", "a", "ON", "price", "cheap", "sushi", "pizza", "near", "me",
                                  "weather", "today", "alarm", "7am"};
    static const char* seps[] = {" ", " ", " ", ", ", ". ", "-", "  "};
    std::uniform_int_distribution<int> len(0, 9);
    std::uniform_int_distribution<std::size_t> w(0, std::size(words) - 1), s(0, std::size(seps) - 1);
    std::string out;
    for (int n = len(rng); n > 0; --n) {
        if (!out.empty()) out += seps[s(rng)];
        out += words[w(rng)];
    }
    return out;
}

Outcome retrieval_oracle() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20261016);
    auto embedder = retrieval::make_embedder("fallback", true);
    const std::vector<std::string> apps = {"Maps", "Notes", "Chrome"};
    int mismatches = 0, checks = 0;
    for (int round = 0; round < 200; ++round) {
        const int n = std::uniform_int_distribution<int>(1, 100)(rng);
        const int k = std::uniform_int_distribution<int>(1, 10)(rng);
        std::vector<int> ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), 0);
        std::shuffle(ids.begin(), ids.end(), rng);

        std::vector<retrieval::ManagerDoc> mdocs;
        std::vector<retrieval::OperatorDoc> odocs;
        for (int i = 0; i < n; ++i) {
            const int id = ids[static_cast<std::size_t>(i)];
            mdocs.push_back({id, random_sentence(rng), "steps"});
            odocs.push_back({id, apps[std::uniform_int_distribution<std::size_t>(0, 2)(rng)], random_sentence(rng),
                             "screenshots/x.png", action::Home{}});
        }
        const auto mkb = retrieval::build_manager_index(mdocs, embedder);
        const auto registry = retrieval::build_operator_registry(odocs, embedder);

        for (int q = 0; q < 5; ++q) {
            const std::string query = random_sentence(rng);
            const auto qc = oracle::bag(query);

            std::vector<oracle::Score> scores;
            for (const auto& d : mdocs) scores.push_back(oracle::score(qc, oracle::bag(d.instruction), d.id));
            std::sort(scores.begin(), scores.end(), oracle::better);
            std::vector<int> want;
            for (std::size_t i = 0; i < std::min<std::size_t>(static_cast<std::size_t>(k), scores.size()); ++i)
                want.push_back(scores[i].id);
            std::vector<int> got;
            for (const auto& d : retrieval::manager_retrieve(query, mkb, k)) got.push_back(d.id);
            ++checks;
            if (got != want) ++mismatches;

            const std::string app = q == 4 ? "Yelp" : apps[static_cast<std::size_t>(q % 3)];
            std::optional<oracle::Score> best;
            for (const auto& d : odocs) {
                if (d.app != app) continue;
                const auto s = oracle::score(qc, oracle::bag(d.subtask), d.id);
                if (!best || oracle::better(s, *best)) best = s;
            }
            const auto hit = retrieval::operator_retrieve(query, app, registry);
            ++checks;
            if (hit.has_value() != best.has_value() || (hit && hit->id != best->id)) ++mismatches;
        }
    }
    const double s = seconds_since(t0);
    expect(o, mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checks) + " queries");
    expect(o, s < 10.0, "took " + std::to_string(s) + " s");
    if (o.pass) o.detail = "200 KBs, " + std::to_string(checks) + " queries, 0 mismatches";
    return o;
}

// ---- 3. deterministic end-to-end ramen run ----

fs::path golden_path() { return testing::ramen_dir() / "golden_trajectory.json"; }

Outcome ramen_run() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir_a = testing::scratch_dir("accept_ramen_a");
    const auto dir_b = testing::scratch_dir("accept_ramen_b");
    const auto a = testing::run_ramen(dir_a);
    testing::run_ramen(dir_b);
    const double s = seconds_since(t0);

    expect(o, a.termination == orch::Termination::ManagerDone, "did not terminate by DONE");
    auto file_a = orch::load_trajectory(dir_a);
    auto file_b = orch::load_trajectory(dir_b);
    const std::string dump_a = testing::normalized_dump(file_a);
    expect(o, dump_a == testing::normalized_dump(file_b), "two runs differ after normalization");
    std::ifstream in(golden_path());
    std::stringstream golden;
    golden << in.rdbuf();
    expect(o, !golden.str().empty(), "missing golden file " + golden_path().string());
    expect(o, golden.str() == dump_a + "\n", "run differs from the golden trajectory");

    for (const auto& st : a.steps)
        for (const char* p : {"perceive", "manage", "operate", "perceive_after", "reflect", "note"})
            expect(o, st.has_phase(p), "step " + std::to_string(st.index) + " lacks phase " + p);
    expect(o, !a.steps.empty() && !a.steps[0].manager_retrieved.empty(), "manager retrieval not recorded");
    expect(o, a.manager_retrieve_calls == 1, "manager_retrieve calls != 1");
    expect(o, std::all_of(a.steps.begin(), a.steps.end(), [](const auto& st) { return st.operator_retrieval; }),
           "operator retrieval missing on a step");
    expect(o, s < 5.0, "took " + std::to_string(s) + " s");
    if (o.pass)
        o.detail = std::to_string(a.steps.size()) + " steps, ManagerDone, identical to golden";
    return o;
}

// ---- 4. SR boundaries ----

orch::Trajectory trajectory_of(std::vector<AtomicAction> actions) {
    orch::Trajectory t;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        orch::StepRecord s;
        s.index = static_cast<int>(i) + 1;
        s.action = actions[i];
        t.steps.push_back(s);
    }
    t.termination = orch::Termination::ManagerDone;
    t.completion_claimed = true;
    return t;
}

std::vector<AtomicAction> varied(int n) {
    std::vector<AtomicAction> v;
    for (int i = 0; i < n; ++i) v.push_back(action::Tap{i, 2 * i});
    return v;
}

std::vector<AtomicAction> with_run(int identical) {
    auto v = varied(4);
    v.insert(v.end(), static_cast<std::size_t>(identical), action::Swipe{630, 1400, 630, 280});
    v.push_back(action::Back{});
    return v;
}

Outcome sr_boundaries() {
    struct Case {
        const char* name;
        std::vector<AtomicAction> actions;
        bool erroneous;
        bool success;
        std::vector<int> failed;
    };
    const std::vector<Case> cases = {
        {"30 steps", varied(30), false, true, {}},
        {"31 steps", varied(31), false, false, {1}},
        {"5 identical", with_run(5), false, true, {}},
        {"6 identical", with_run(6), false, false, {3}},
        {"erroneous completion", varied(10), true, false, {2}},
        {"clean completion", varied(10), false, true, {}},
    };
    Outcome o;
    for (const auto& c : cases) {
        const auto v = eval::judge_sr(trajectory_of(c.actions), c.erroneous);
        expect(o, v.success == c.success && v.failed_conditions() == c.failed, std::string("case '") + c.name + "'");
    }
    if (o.pass) o.detail = "6/6 cases";
    return o;
}

// ---- 5. prompt piecewise structure ----

bool has(const agents::ModelRequest& r, std::string_view s) { return r.flattened().find(s) != std::string::npos; }

Outcome prompt_piecewise() {
    using namespace agents;
    Outcome o;
    const auto task = TaskInstruction::make("Find the best ramen place in Chicago Loop");
    Screenshot shot;
    shot.payload = "{}";
    shot.width = 1440;
    shot.height = 3120;
    shot.source = "sim";
    PromptConfig cfg;
    cfg.apps = {"Maps", "Notes"};
    const std::vector<retrieval::ManagerDoc> ex = {{0, "Find ramen A", "steps A"},
                                                   {1, "Find ramen B", "steps B"},
                                                   {2, "Find ramen C", "steps C"}};
    WorkingMemory mem;
    mem.plan = "plan";
    mem.subtask = {"Search", "Maps"};
    for (int i = 1; i <= 5; ++i) mem.error_log.push_back({action::Tap{i, i}, "fail-" + std::to_string(i), i});

    mem.step = 1;
    const auto first = prompt_gen_manager(task, mem, shot, ex, cfg);
    expect(o, has(first, section::kExemplars) && has(first, "steps A") && has(first, "steps B") &&
                  has(first, "steps C") && !has(first, section::kRecentErrors),
           "t=1 prompt lacks exemplars or shows errors");

    mem.step = 4;
    mem.error_flag = false;
    const auto calm = prompt_gen_manager(task, mem, shot, ex, cfg);
    expect(o, !has(calm, section::kExemplars) && !has(calm, section::kRecentErrors),
           "t=4, F=false prompt has an exemplar or error block");

    mem.error_flag = true;
    const auto alarmed = prompt_gen_manager(task, mem, shot, ex, cfg);
    expect(o, !has(alarmed, section::kExemplars) && has(alarmed, section::kRecentErrors) &&
                  !has(alarmed, "fail-2") && has(alarmed, "fail-3") && has(alarmed, "fail-5"),
           "t=4, F=true prompt lacks the k_err error tail");

    PerceptionResult view;
    const RetrievedExemplar re{{9, "Maps", "Search sushi", "screenshots/s.json", action::TapTypeEnter{1, 2, "sushi"}},
                               ImagePart{"kb:s", "application/json", "{}"}};
    const auto with = prompt_gen_operator(task, mem, shot, view, re, cfg);
    const auto without = prompt_gen_operator(task, mem, shot, view, std::nullopt, cfg);
    expect(o, has(with, section::kReference) && has(with, render_action(re.doc.action)) && with.image_count() == 2,
           "operator prompt lacks the retrieved exemplar");
    expect(o, !has(without, section::kReference) && without.image_count() == 1,
           "operator prompt has an exemplar block without retrieval");
    if (o.pass) o.detail = "3 manager cases, 2 operator cases";
    return o;
}

// ---- 6. action parser round trip ----

Outcome parser_round_trip() {
    Outcome o;
    std::mt19937_64 rng(404260);
    std::array<int, kActionVariantCount> seen{};
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const AtomicAction a = testing::random_action(rng);
        ++seen[a.index()];
        try {
            if (parse_action(render_action(a)) != a) ++failures;
        } catch (const std::exception&) {
            ++failures;
        }
    }
    expect(o, failures == 0, std::to_string(failures) + " of 1000 actions did not round trip");
    expect(o, std::all_of(seen.begin(), seen.end(), [](int c) { return c > 0; }), "not every variant was drawn");
    try {
        expect(o, parse_action(R"(Open_App at {"app_name": "Maps"})") == AtomicAction{action::OpenApp{"Maps"}},
               "Open_App surface form");
        expect(o, parse_action("Enter at null") == AtomicAction{action::Enter{}}, "Enter surface form");
        expect(o, parse_action(R"(Tap at {"x": 404, "y": 260})") == AtomicAction{action::Tap{404, 260}},
               "Tap surface form");
    } catch (const std::exception& e) {
        expect(o, false, std::string("surface form threw: ") + e.what());
    }
    if (o.pass) o.detail = "1000 random actions over 9 variants, 3 surface forms";
    return o;
}

// ---- 7. KB pipeline ----

Outcome kb_pipeline() {
    Outcome o;
    const auto staging = testing::scratch_dir("accept_filter");
    const auto ids = testing::four_trace_fixture(staging);
    const auto kept = kb::filter_traces(kb::load_traces(staging));
    expect(o, kept.size() == 1 && kept[0].run_id == ids[0] && kept[0].length() == 12,
           "filter did not keep exactly the 12-step trace");

    const auto raw = testing::scratch_dir("accept_cur_raw");
    const auto staged = testing::scratch_dir("accept_cur_staged");
    const auto kb_root = testing::scratch_dir("accept_cur_kb");
    testing::five_entry_staging(raw, staged);
    const auto entries = kb::load_staged_entries(staged);
    expect(o, entries.size() == 5, "expected 5 staged entries");
    if (entries.size() != 5) return o;
    auto edit = entries[4];
    edit.subtask = "Confirm the note";
    const std::vector<kb::CurationDecision> decisions = {{0, kb::Verdict::Accept, {}},
                                                         {1, kb::Verdict::Accept, {}},
                                                         {2, kb::Verdict::Accept, {}},
                                                         {3, kb::Verdict::Reject, {}},
                                                         {4, kb::Verdict::Edit, edit}};
    kb::curate(staged, decisions, kb_root);
    const auto docs = retrieval::load_operator_kb(kb_root);
    const auto maps = retrieval::load_operator_docs(kb_root / "operator" / "Maps.jsonl");
    const auto notes = retrieval::load_operator_docs(kb_root / "operator" / "Notes.jsonl");
    expect(o, docs.size() == 4 && maps.size() == 2 && notes.size() == 2, "curation did not emit 2 + 2 docs");
    expect(o, !fs::exists(staged / entries[3].screenshot), "rejected screenshot still present");
    expect(o, std::any_of(notes.begin(), notes.end(), [](const auto& d) { return d.subtask == "Confirm the note"; }),
           "edit not applied");
    if (o.pass) o.detail = "filter kept the 12-step trace; curate emitted 4 docs over 2 apps";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::strcmp(argv[1], "--write-golden") == 0) {
        std::ofstream out(golden_path(), std::ios::trunc);
        out << testing::normalized_dump(orch::load_trajectory([] {
            const auto dir = testing::scratch_dir("accept_golden");
            testing::run_ramen(dir);
            return dir;
        }())) << "\n";
        std::cout << "wrote " << golden_path().string() << "\n";
    }

    const std::vector<std::pair<const char*, Outcome (*)()>> checks = {
        {"efficiency-table-arithmetic", efficiency_table},
        {"retrieval-oracle-equivalence", retrieval_oracle},
        {"deterministic-ramen-run", ramen_run},
        {"sr-boundaries", sr_boundaries},
        {"prompt-piecewise", prompt_piecewise},
        {"action-parser-round-trip", parser_round_trip},
        {"kb-pipeline", kb_pipeline},
    };
    int failed = 0;
    for (const auto& [name, fn] : checks) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n";
    }
    std::cout << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
