#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <ldseq/auditor.hpp>
#include <ldseq/random_schedules.hpp>
#include <ldseq/schedule_io.hpp>
#include <ldseq/stacker.hpp>

using namespace ldseq;

namespace {

Schedule<Rational> half_third_sixth() {
    SymbolTable syms;
    std::vector<std::pair<SymbolId, Rational>> m;
    m.emplace_back(syms.intern("a"), Rational(1, 2));
    m.emplace_back(syms.intern("b"), Rational(1, 3));
    m.emplace_back(syms.intern("c"), Rational(1, 6));
    return Schedule<Rational>::stationary(std::move(syms), make_step_dist(std::move(m)));
}

Schedule<Rational> uniform(int n) {
    SymbolTable syms;
    std::vector<std::pair<SymbolId, Rational>> m;
    for (int i = 1; i <= n; ++i) m.emplace_back(syms.intern("u" + std::to_string(i)), Rational(1, n));
    return Schedule<Rational>::stationary(std::move(syms), make_step_dist(std::move(m)));
}

std::vector<std::string> labels_of(const std::vector<SymbolId>& seq, const SymbolTable& syms) {
    std::vector<std::string> out;
    for (SymbolId s : seq) out.push_back(syms.label(s));
    return out;
}

} // namespace

TEST_CASE("initial candidates and deadlines on (1/2, 1/3, 1/6)") {
    Stacker<Rational> st(half_third_sixth());
    const auto cands = st.candidates();
    REQUIRE(cands.size() == 3); // every symbol has N_0 = 0 < P_1
    CHECK(st.deadline(0) == 2); // a
    CHECK(st.deadline(1) == 3); // b
    CHECK(st.deadline(2) == 6); // c
    CHECK(st.select() == 0);    // earliest deadline wins
}

TEST_CASE("the canonical run emits a,b,a,b,a,c and returns to zero") {
    Stacker<Rational> st(half_third_sixth());

    st.step(); // a
    st.step(); // b
    {
        // k=2 after "a,b": b sits exactly at N_2(b) = 1 = P_3(b), not a candidate
        const auto cands = st.candidates();
        REQUIRE(cands.size() == 2);
        CHECK(cands[0].symbol == 0);
        CHECK(cands[1].symbol == 2);
    }
    st.step(); // a
    {
        // k=3: deadline tie {b: 6, c: 6}; first-seen order selects b
        CHECK(st.deadline(1) == 6);
        CHECK(st.deadline(2) == 6);
        CHECK(st.select() == 1);
    }
    st.step(); // b
    st.step(); // a
    {
        // k=5: c is the only candidate and critical
        const auto cands = st.candidates();
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].symbol == 2);
        CHECK(cands[0].slack == Rational(1)); // P_6(c) - N_5(c) = 1, forced
        const auto out = st.step();
        CHECK(out.chosen == 2);
        CHECK(out.deadline == 6);
    }
    for (SymbolId s = 0; s < 3; ++s) CHECK(st.discrepancy(s) == Rational(0));
    CHECK(st.position() == 6);
}

TEST_CASE("generation is periodic: twelve steps repeat the six-step pattern") {
    Stacker<Rational> st(half_third_sixth());
    const auto seq = st.run(12);
    CHECK(labels_of(seq, st.symbols()) ==
          std::vector<std::string>{"a", "b", "a", "b", "a", "c", "a", "b", "a", "b", "a", "c"});
}

TEST_CASE("most-negative tiebreak picks the more starved symbol") {
    StackerOptions opt;
    opt.tiebreak = Tiebreak::most_negative;
    Stacker<Rational> st(half_third_sixth(), opt);
    st.step();
    st.step();
    st.step();
    // tie {b: 6, c: 6}; D_3 = (1/2, 0, -1/2), so c wins under this policy
    CHECK(st.select() == 2);
    const auto rest = st.run(3);
    CHECK(labels_of(rest, st.symbols()) == std::vector<std::string>{"c", "b", "a"});
    for (SymbolId s = 0; s < 3; ++s) CHECK(st.discrepancy(s) == Rational(0));
}

TEST_CASE("degenerate schedules") {
    SECTION("uniform-2 alternates with |D| in {0, 1/2}") {
        Stacker<Rational> st(uniform(2));
        const auto seq = st.run(10);
        for (std::size_t i = 0; i < seq.size(); ++i) REQUIRE(seq[i] == i % 2);
    }
    SECTION("single symbol repeats with D = 0") {
        SymbolTable syms;
        std::vector<std::pair<SymbolId, Rational>> m;
        m.emplace_back(syms.intern("a"), Rational(1));
        Stacker<Rational> st(
            Schedule<Rational>::stationary(std::move(syms), make_step_dist(std::move(m))));
        const auto seq = st.run(5);
        for (SymbolId s : seq) REQUIRE(s == 0);
        CHECK(st.discrepancy(0) == Rational(0));
    }
    SECTION("zero steps is a no-op") {
        Stacker<Rational> st(uniform(2));
        CHECK(st.run(0).empty());
        CHECK(st.position() == 0);
    }
}

TEST_CASE("uniform-5 after three steps: three distinct picks, two symbols at -3/5") {
    Stacker<Rational> st(uniform(5));
    const auto seq = st.run(3);
    std::vector<char> seen(5, 0);
    for (SymbolId s : seq) seen[s] = 1;
    int distinct = 0, low = 0;
    for (SymbolId s = 0; s < 5; ++s) {
        distinct += seen[s];
        if (st.discrepancy(s) == Rational(-3, 5)) ++low;
    }
    CHECK(distinct == 3);
    CHECK(low == 2);
}

TEST_CASE("fresh-pair schedule: every deadline unresolved, fallback keeps the bound") {
    for (std::int64_t cap : {10, 100}) {
        StackerOptions opt;
        opt.horizon_cap = cap;
        std::int64_t fallbacks = 0;
        Stacker<Rational> st(fresh_pair_schedule(), opt,
                             [&](const FallbackEvent&) { ++fallbacks; });
        CHECK(!st.deadline(st.candidates().front().symbol).has_value());
        const auto seq = st.run(40);
        CHECK(fallbacks == 40);
        Rational maxd(0);
        for (SymbolId s = 0; s < st.symbols().size(); ++s)
            maxd = std::max(maxd, abs_val(st.discrepancy(s)));
        CHECK(maxd == Rational(1, 2));
        // first-seen tiebreak consumes the oldest starving symbol first
        CHECK(st.symbols().label(seq[0]) == "a1");
        CHECK(st.symbols().label(seq[1]) == "b1");
        CHECK(st.symbols().label(seq[2]) == "a2");
    }
}

TEST_CASE("online stepping equals full knowledge on stationary schedules") {
    for (const auto tb : {Tiebreak::first_seen, Tiebreak::most_negative}) {
        StackerOptions offline;
        offline.tiebreak = tb;
        StackerOptions online = offline;
        online.lookahead = 1;
        Stacker<Rational> a(half_third_sixth(), offline);
        Stacker<Rational> b(half_third_sixth(), online);
        CHECK(a.run(60) == b.run(60));
    }
}

TEST_CASE("online stepping with unbounded lookahead equals offline on tables") {
    auto doc = random_schedule(31337, ScheduleKind::table);
    auto doc2 = random_schedule(31337, ScheduleKind::table);
    StackerOptions offline;
    StackerOptions online;
    online.lookahead = 1000000; // effectively infinite for this run
    Stacker<Rational> a(std::move(doc), offline);
    Stacker<Rational> b(std::move(doc2), online);
    CHECK(a.run(300) == b.run(300));
}

TEST_CASE("bound, zero-sum, and recurrence hold over randomized schedules") {
    for (std::uint64_t i = 0; i < 36; ++i) {
        const auto kind = mixed_kind(i);
        Stacker<Rational> st(random_schedule(777 + i, kind)); // invariant checks armed
        const auto seq = st.run(1500);
        const auto report = audit_bound(seq, random_schedule(777 + i, kind));
        INFO("instance " << i);
        REQUIRE(report.violations.empty());
        REQUIRE(report.max_abs < Rational(1));
        REQUIRE(report.max_zero_sum_residual == Rational(0));
        REQUIRE(report.recurrence_ok);
    }
}

TEST_CASE("chosen symbols are always candidates (no oversampling)") {
    Stacker<Rational> st(random_schedule(2024, ScheduleKind::table));
    for (int i = 0; i < 200; ++i) {
        const auto cands = st.candidates();
        const auto out = st.step();
        const bool was_candidate =
            std::any_of(cands.begin(), cands.end(),
                        [&](const Candidate<Rational>& c) { return c.symbol == out.chosen; });
        REQUIRE(was_candidate);
        REQUIRE(st.discrepancy(out.chosen) < Rational(1));
    }
}

TEST_CASE("minimal undersampling requirement never exceeds the step budget") {
    // R_{k,k'}(s) = floor(P_{k'}(s) - N_k(s))^+ summed over s stays <= k' - k.
    auto sched = random_schedule(5150, ScheduleKind::table);
    Stacker<Rational> st(random_schedule(5150, ScheduleKind::table));
    std::vector<std::vector<std::int64_t>> counts_history; // N_k by step
    std::vector<std::vector<Rational>> prefix_history;     // P_k by step
    std::vector<std::int64_t> counts(8, 0);
    std::vector<Rational> prefix(8, Rational(0));
    counts_history.push_back(counts);
    prefix_history.push_back(prefix);
    const int T = 120;
    for (int k = 1; k <= T; ++k) {
        for (const auto& [s, m] : sched.pull(k).masses) prefix[s] += m;
        sched.advance();
        counts[st.step().chosen] += 1;
        counts_history.push_back(counts);
        prefix_history.push_back(prefix);
    }
    Bits bits(11);
    for (int trial = 0; trial < 60; ++trial) {
        const auto k = static_cast<std::size_t>(bits.below(T));
        const auto kp = k + 1 + bits.below(static_cast<std::uint64_t>(T) - k);
        BigInt sum(0);
        for (std::size_t s = 0; s < 8; ++s) {
            const Rational r = prefix_history[kp][s] - Rational(counts_history[k][s]);
            if (r > Rational(0)) sum += floor_big(r);
        }
        REQUIRE(sum <= BigInt(static_cast<std::int64_t>(kp - k)));
    }
}

TEST_CASE("generation is a pure function of the document and options") {
    const std::string doc =
        "{\"mode\":\"exact\"}\n"
        "{\"step\":1,\"probs\":{\"x\":\"2/5\",\"y\":\"3/5\"}}\n"
        "{\"step\":2,\"probs\":{\"y\":\"1/10\",\"z\":\"9/10\"}}\n"
        "{\"tail\":\"repeat-last\"}\n";
    const auto run = [&] {
        std::istringstream in(doc);
        auto sched = std::get<Schedule<Rational>>(parse_schedule(in));
        Stacker<Rational> st(std::move(sched));
        return st.run(400);
    };
    CHECK(run() == run());
}

TEST_CASE("float mode runs and tracks discrepancies approximately") {
    SymbolTable syms;
    std::vector<std::pair<SymbolId, double>> m;
    m.emplace_back(syms.intern("x"), 0.25);
    m.emplace_back(syms.intern("y"), 0.75);
    Stacker<double> st(Schedule<double>::stationary(std::move(syms), make_step_dist(std::move(m))));
    const auto seq = st.run(200);
    CHECK(seq.size() == 200);
    CHECK(std::abs(st.discrepancy(0)) < 1.0);
    CHECK(std::abs(st.discrepancy(1)) < 1.0);
}

TEST_CASE("schedule exhaustion propagates") {
    SymbolTable syms;
    std::vector<StepDist<Rational>> steps;
    std::vector<std::pair<SymbolId, Rational>> m;
    m.emplace_back(syms.intern("a"), Rational(1));
    steps.push_back(make_step_dist(std::move(m)));
    Stacker<Rational> st(Schedule<Rational>::table(std::move(syms), std::move(steps), TailPolicy::halt));
    CHECK_THROWS_AS(st.run(2), schedule_error);
}
