#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <ldseq/schedule.hpp>
#include <ldseq/trace.hpp>

namespace ldseq {

// Tie resolution among equal deadlines. Both policies depend only on the
// deadlines and the current discrepancies, so rotor extraction stays
// deterministic under either.
enum class Tiebreak { first_seen, most_negative };

struct StackerOptions {
    Tiebreak tiebreak = Tiebreak::first_seen;
    // Budget for forward deadline scanning, in steps past the current
    // position; nullopt = unbounded. Closed-form deadlines over stationary
    // sources and constant tails are exact and ignore the cap.
    std::optional<std::int64_t> horizon_cap = 1000000;
    // Online mode: when set, deadline scans may examine steps <= k+L only,
    // so the choice of s_{k+1} depends on pi_1..pi_{k+L} alone. No
    // discrepancy guarantee. Stationary sources are structurally known and
    // behave identically for every L.
    std::optional<std::int64_t> lookahead;
    bool check_invariants = true;
};

template <class N>
struct Candidate {
    SymbolId symbol = 0;
    N slack{}; // P_{k+1}(s) - N_k(s) > 0
    std::optional<std::int64_t> deadline;
};

// Emitted whenever no candidate deadline resolved within the scan limits and
// the maximal-slack fallback decided the step.
struct FallbackEvent {
    std::int64_t k = 0; // step being decided (1-based)
    SymbolId chosen = 0;
    std::size_t candidates = 0;
};

template <class N>
struct StepOutcome {
    SymbolId chosen = 0;
    std::optional<std::int64_t> deadline; // nullopt = fallback step
    bool fallback = false;
};

namespace detail {

template <class N>
std::optional<std::int64_t> ceil_steps(const N& deficit, const N& rate) {
    if constexpr (is_exact_v<N>) {
        return to_int64(ceil_big(deficit / rate));
    } else {
        const double q = std::ceil(deficit / rate);
        if (!(q >= 0) || q > 4.0e18) return std::nullopt;
        return static_cast<std::int64_t>(q);
    }
}

} // namespace detail

// The generator: keeps counts N_k(s) against the schedule's prefix masses
// P_k(s), and at each step selects, among the symbols that can still be
// chosen without oversampling (N_k(s) < P_{k+1}(s)), the one whose
// starvation deadline -- the first k' with N_k(s) - P_{k'}(s) <= -1 -- is
// earliest. In exact mode every discrepancy N_k(s) - P_k(s) then stays
// strictly inside (-1, 1).
template <class N>
class Stacker {
public:
    explicit Stacker(Schedule<N> sched, StackerOptions opt = {},
                     std::function<void(const FallbackEvent&)> on_fallback = {})
        : sched_(std::move(sched)), opt_(opt), on_fallback_(std::move(on_fallback)) {}

    std::int64_t position() const { return k_; }

    std::int64_t count(SymbolId s) const {
        return s < counts_.size() ? counts_[s] : 0;
    }

    // D_k(s) = N_k(s) - P_k(s). Exact mode recomputes from counts and prefix;
    // float mode returns the incrementally accumulated value.
    N discrepancy(SymbolId s) const {
        if constexpr (is_exact_v<N>) {
            return N(count(s)) - sched_.prefix(s);
        } else {
            return s < disc_.size() ? disc_[s] : N(0);
        }
    }

    Schedule<N>& schedule() { return sched_; }
    const Schedule<N>& schedule() const { return sched_; }
    SymbolTable& symbols() { return sched_.symbols(); }

    // Symbols eligible as the (k+1)st term: N_k(s) < P_{k+1}(s). Never empty
    // for a well-formed schedule. Deadlines are left unresolved here.
    std::vector<Candidate<N>> candidates() {
        auto cands = gather();
        std::sort(cands.begin(), cands.end(),
                  [](const auto& a, const auto& b) { return a.symbol < b.symbol; });
        return cands;
    }

    // Deadline of candidate s: smallest k' >= k+1 with P_{k'}(s) >= N_k(s)+1,
    // or nullopt when unresolved within the scan limits.
    std::optional<std::int64_t> deadline(SymbolId s) {
        auto cands = gather();
        for (auto& c : cands) {
            if (c.symbol != s) continue;
            std::vector<Candidate<N>> one{c};
            resolve_deadlines(one);
            return one.front().deadline;
        }
        throw error("deadline queried for a non-candidate symbol '" + symbols().label(s) + "'");
    }

    // The selection rule without committing the step.
    SymbolId select() { return choose().chosen; }

    StepOutcome<N> step() { return step(nullptr); }

    // Runs `steps` iterations, returning the chosen symbols in order.
    std::vector<SymbolId> run(std::int64_t steps, const TraceOptions<N>& trace = {}) {
        std::vector<SymbolId> seq;
        seq.reserve(static_cast<std::size_t>(std::max<std::int64_t>(steps, 0)));
        for (std::int64_t i = 0; i < steps; ++i) seq.push_back(step(&trace).chosen);
        return seq;
    }

private:
    StepOutcome<N> step(const TraceOptions<N>* trace) {
        const auto choice = choose();
        commit(choice, trace);
        return choice;
    }

    std::vector<Candidate<N>> gather() {
        const StepDist<N>& next = sched_.pull(k_ + 1);
        grow();
        std::vector<Candidate<N>> cands;
        for (SymbolId s : eligible_) {
            N pnext = sched_.prefix(s);
            if (const N* m = next.find(s)) pnext += *m;
            if (N(counts_[s]) < pnext) cands.push_back({s, pnext - N(counts_[s]), std::nullopt});
        }
        for (const auto& [s, m] : next.masses) {
            if (s < eligible_flag_.size() && eligible_flag_[s]) continue;
            // prefix is 0 here, so P_{k+1}(s) = pi_{k+1}(s) and N_k(s) = 0
            if (N(0) < m) cands.push_back({s, m, std::nullopt});
        }
        if (cands.empty()) throw error("no candidate symbol; schedule masses are inconsistent");
        return cands;
    }

    struct Choice {
        SymbolId chosen;
        std::optional<std::int64_t> deadline;
        bool fallback;
        operator StepOutcome<N>() const { return {chosen, deadline, fallback}; }
    };

    Choice choose() {
        auto cands = gather();

        // A symbol with slack >= 1 must be chosen now to avoid undersampling
        // by step k+1; there can be at most one, and its deadline k+1 is the
        // minimum possible, so it wins outright. Uniqueness is a theorem of
        // the full-knowledge rule only, so the online variant skips the fast
        // path and resolves such symbols through ordinary tie-breaking.
        if (!opt_.lookahead) {
            const Candidate<N>* critical = nullptr;
            for (const auto& c : cands) {
                if (c.slack >= N(1)) {
                    if (opt_.check_invariants) {
                        if (critical) throw error("two critical symbols in one step");
                        if (c.slack >= N(2)) throw error("slack >= 2; discrepancy bound already broken");
                    }
                    critical = &c;
                    if (!opt_.check_invariants) break;
                }
            }
            if (critical) return {critical->symbol, k_ + 1, false};
        }

        resolve_deadlines(cands);

        std::optional<std::int64_t> best;
        for (const auto& c : cands)
            if (c.deadline && (!best || *c.deadline < *best)) best = c.deadline;

        std::vector<const Candidate<N>*> pool;
        if (best) {
            for (const auto& c : cands)
                if (c.deadline == best) pool.push_back(&c);
            return {tiebreak_pick(pool), best, false};
        }

        // All deadlines unresolved within the scan limits: fall back to the
        // candidate with maximal slack. Any candidate keeps D < 1 for this
        // step; the event is reported so the deviation is never silent.
        const N* best_slack = nullptr;
        for (const auto& c : cands)
            if (!best_slack || *best_slack < c.slack) best_slack = &c.slack;
        for (const auto& c : cands)
            if (c.slack == *best_slack) pool.push_back(&c);
        const SymbolId chosen = tiebreak_pick(pool);
        if (on_fallback_) on_fallback_({k_ + 1, chosen, cands.size()});
        return {chosen, std::nullopt, true};
    }

    // Fills in deadlines, exactly for sources with a constant tail (closed
    // form), otherwise by one shared incremental scan over future steps. The
    // scan stops at the first step where any candidate's condition fires;
    // the conditions are monotone in k', so that step is the true minimum
    // and no smaller deadline can be missed.
    void resolve_deadlines(std::vector<Candidate<N>>& cands) {
        const bool online = opt_.lookahead.has_value();
        const bool closed_ok =
            sched_.constant_tail().has_value() && (!online || sched_.stationary_source());

        if (closed_ok) {
            const auto [tail_from, tail] = *sched_.constant_tail();
            for (auto& c : cands) {
                const N target = N(counts_[c.symbol] + 1);
                N acc = N(counts_[c.symbol]) + c.slack; // = P_{k+1}(s)
                if (acc >= target) {
                    c.deadline = k_ + 1;
                    continue;
                }
                std::int64_t i = k_ + 1;
                while (i + 1 < tail_from) { // next step still in the varying region
                    ++i;
                    if (const N* m = sched_.pull(i).find(c.symbol)) acc += *m;
                    if (acc >= target) {
                        c.deadline = i;
                        break;
                    }
                }
                if (c.deadline) continue;
                const N* rate = tail->find(c.symbol);
                if (!rate || *rate == N(0)) continue; // never reaches the target
                if (auto steps = detail::ceil_steps<N>(target - acc, *rate))
                    c.deadline = i + *steps;
            }
            return;
        }

        std::optional<std::int64_t> limit;
        const auto tighten = [&](std::int64_t v) { limit = limit ? std::min(*limit, v) : v; };
        if (opt_.horizon_cap) tighten(k_ + *opt_.horizon_cap);
        if (online) tighten(k_ + *opt_.lookahead);
        if (const auto e = sched_.end()) tighten(*e);

        if (cand_index_.size() < counts_.size()) cand_index_.resize(counts_.size(), -1);
        std::vector<N> running;
        std::vector<N> target;
        running.reserve(cands.size());
        target.reserve(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            const auto& c = cands[i];
            cand_index_[c.symbol] = static_cast<std::int32_t>(i);
            running.push_back(N(counts_[c.symbol]) + c.slack); // = P_{k+1}(s)
            target.push_back(N(counts_[c.symbol] + 1));
            if (running.back() >= target.back()) cands[i].deadline = k_ + 1;
        }

        bool done = false;
        for (const auto& c : cands)
            if (c.deadline) done = true; // k+1 already fires (critical path)

        std::vector<std::size_t> fired_now;
        for (std::int64_t kp = k_ + 2; !done && (!limit || kp <= *limit); ++kp) {
            const StepDist<N>& d = sched_.pull(kp);
            if (cand_index_.size() < sched_.symbols().size())
                cand_index_.resize(sched_.symbols().size(), -1);
            fired_now.clear();
            for (const auto& [s, m] : d.masses) {
                const auto ci = cand_index_[s];
                if (ci < 0) continue;
                auto idx = static_cast<std::size_t>(ci);
                running[idx] += m;
                if (!cands[idx].deadline && running[idx] >= target[idx]) fired_now.push_back(idx);
            }
            if (!fired_now.empty()) {
                for (auto idx : fired_now) cands[idx].deadline = kp;
                done = true;
            }
        }
        for (const auto& c : cands) cand_index_[c.symbol] = -1;
    }

    SymbolId tiebreak_pick(const std::vector<const Candidate<N>*>& pool) {
        SymbolId best = pool.front()->symbol;
        if (opt_.tiebreak == Tiebreak::first_seen) {
            for (const auto* c : pool) best = std::min(best, c->symbol);
            return best;
        }
        N best_disc = discrepancy(best);
        for (const auto* c : pool) {
            const N d = discrepancy(c->symbol);
            if (d < best_disc || (d == best_disc && c->symbol < best)) {
                best = c->symbol;
                best_disc = d;
            }
        }
        return best;
    }

    void commit(const Choice& choice, const TraceOptions<N>* trace) {
        const StepDist<N>& dist = sched_.pull(k_ + 1);
        step_support_.clear();
        for (const auto& [s, m] : dist.masses) step_support_.push_back(s);
        if constexpr (!is_exact_v<N>) {
            if (disc_.size() < sched_.symbols().size()) disc_.resize(sched_.symbols().size(), N(0));
            for (const auto& [s, m] : dist.masses) disc_[s] -= m;
        }
        sched_.advance(); // may invalidate `dist`
        grow();
        if constexpr (!is_exact_v<N>) disc_[choice.chosen] += N(1);
        counts_[choice.chosen] += 1;
        ++k_;
        for (SymbolId s : step_support_) {
            if (!eligible_flag_[s]) {
                eligible_flag_[s] = 1;
                eligible_.push_back(s);
            }
        }

        const bool want_row = trace && trace->on_row;
        if (!want_row && !opt_.check_invariants) return;

        TraceRow<N> row;
        row.k = k_;
        row.chosen = choice.chosen;
        const bool snap = want_row && trace->snapshot_every > 0 && (k_ - 1) % trace->snapshot_every == 0;
        if (snap) row.snapshot.reserve(counts_.size());
        N residual(0);
        bool have_max = false;
        std::int64_t count_sum = 0;
        for (SymbolId s = 0; s < counts_.size(); ++s) {
            const N d = discrepancy(s);
            const N a = abs_val(d);
            if (!have_max || row.max_abs_disc < a) {
                row.max_abs_disc = a;
                row.argmax = s;
                have_max = true;
            }
            residual += d;
            count_sum += counts_[s];
            if (snap) row.snapshot.push_back(d);
            // The strict bound is guaranteed (and enforced) only with full
            // knowledge of the future; lookahead-limited runs may break it.
            if (opt_.check_invariants && is_exact_v<N> && !opt_.lookahead && a >= N(1))
                throw error("discrepancy bound violated at k=" + std::to_string(k_) +
                            " symbol '" + symbols().label(s) + "'");
        }
        row.zero_sum_residual = residual;
        if (opt_.check_invariants) {
            if (count_sum != k_) throw error("count bookkeeping out of sync");
            if (is_exact_v<N> && residual != N(0)) throw error("zero-sum residual nonzero");
        }
        if (want_row) trace->on_row(std::move(row));
    }

    void grow() {
        const auto n = sched_.symbols().size();
        if (counts_.size() < n) counts_.resize(n, 0);
        if (eligible_flag_.size() < n) eligible_flag_.resize(n, 0);
    }

    Schedule<N> sched_;
    StackerOptions opt_;
    std::function<void(const FallbackEvent&)> on_fallback_;
    std::int64_t k_ = 0;
    std::vector<std::int64_t> counts_;     // dense by id
    std::vector<N> disc_;                  // float mode only
    std::vector<SymbolId> eligible_;       // ids with P_k(s) > 0
    std::vector<char> eligible_flag_;
    std::vector<std::int32_t> cand_index_; // scan scratch, -1 outside a scan
    std::vector<SymbolId> step_support_;   // commit scratch
};

// Convenience wrapper for one-shot generation.
template <class N>
std::vector<SymbolId> generate(Schedule<N> sched, std::int64_t steps, StackerOptions opt = {},
                               const TraceOptions<N>& trace = {},
                               std::function<void(const FallbackEvent&)> on_fallback = {}) {
    Stacker<N> st(std::move(sched), opt, std::move(on_fallback));
    return st.run(steps, trace);
}

} // namespace ldseq
