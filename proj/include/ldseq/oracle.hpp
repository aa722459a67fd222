#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <ldseq/auditor.hpp>
#include <ldseq/schedule.hpp>
#include <ldseq/stacker.hpp>

namespace ldseq {

struct OracleLimits {
    std::size_t max_support = 6;
    std::int64_t max_horizon = 20;
};

struct OracleResult {
    Rational opt_value;             // horizon-T optimum of max_{k<=T,s} |D_k(s)|
    std::vector<SymbolId> witness;  // lexicographically first optimal sequence
    std::uint64_t nodes_explored = 0;
    Rational greedy_value;          // earliest-deadline generator on the same instance
    std::int64_t horizon = 0;
};

namespace detail {

// Exhaustive minimizer of the running worst discrepancy over all length-T
// sequences. States are (depth, counts): the discrepancy vector is a pure
// function of both, so branches meeting at equal counts share one memoized
// continuation value (dominance pruning); within a node, a child whose
// immediate discrepancy already reaches the local best is skipped.
class MinimaxSearch {
public:
    MinimaxSearch(std::vector<std::vector<Rational>> prefix, std::size_t n, std::int64_t horizon)
        : prefix_(std::move(prefix)), n_(n), horizon_(horizon) {}

    Rational continuation(std::int64_t depth, std::vector<int>& counts) {
        if (depth == horizon_) return Rational(0);
        const std::uint64_t key = pack(depth, counts);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        ++nodes_;
        Rational best;
        bool have = false;
        for (std::size_t i = 0; i < n_; ++i) {
            counts[i] += 1;
            const Rational imm = immediate(depth + 1, counts);
            if (!have || imm < best) {
                const Rational val = std::max(imm, continuation(depth + 1, counts));
                if (!have || val < best) {
                    best = val;
                    have = true;
                }
            }
            counts[i] -= 1;
        }
        memo_.emplace(key, best);
        return best;
    }

    // Worst single-step discrepancy right after step `depth` with these counts.
    Rational immediate(std::int64_t depth, const std::vector<int>& counts) const {
        const auto& p = prefix_[static_cast<std::size_t>(depth)];
        Rational worst(0);
        for (std::size_t i = 0; i < n_; ++i) {
            const Rational a = abs_val(Rational(counts[i]) - p[i]);
            if (worst < a) worst = a;
        }
        return worst;
    }

    std::vector<std::size_t> witness(const Rational& opt) {
        std::vector<std::size_t> seq;
        std::vector<int> counts(n_, 0);
        for (std::int64_t depth = 0; depth < horizon_; ++depth) {
            bool found = false;
            for (std::size_t i = 0; i < n_ && !found; ++i) {
                counts[i] += 1;
                const Rational imm = immediate(depth + 1, counts);
                if (imm <= opt && continuation(depth + 1, counts) <= opt) {
                    seq.push_back(i);
                    found = true;
                } else {
                    counts[i] -= 1;
                }
            }
            if (!found) throw error("witness reconstruction failed"); // unreachable
        }
        return seq;
    }

    std::uint64_t nodes() const { return nodes_; }

private:
    std::uint64_t pack(std::int64_t depth, const std::vector<int>& counts) const {
        std::uint64_t key = static_cast<std::uint64_t>(depth);
        for (std::size_t i = 0; i < n_; ++i)
            key = (key << 5) | static_cast<std::uint64_t>(counts[i]);
        return key;
    }

    std::vector<std::vector<Rational>> prefix_; // prefix_[t][i] = P_t(universe_i)
    std::size_t n_;
    std::int64_t horizon_;
    std::unordered_map<std::uint64_t, Rational> memo_;
    std::uint64_t nodes_ = 0;
};

struct Instance {
    std::vector<SymbolId> universe;              // ids with mass in steps 1..T, ascending
    std::vector<StepDist<Rational>> steps;       // materialized pi_1..pi_T
    std::vector<std::vector<Rational>> prefix;   // P_0..P_T over the universe
};

inline Instance materialize(Schedule<Rational>& sched, std::int64_t horizon, const OracleLimits& lim) {
    if (horizon < 0) throw limit_error("negative horizon");
    if (horizon > lim.max_horizon)
        throw limit_error("horizon " + std::to_string(horizon) + " exceeds oracle limit " +
                          std::to_string(lim.max_horizon));
    Instance inst;
    std::vector<char> seen;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const auto& dist = sched.pull(t);
        inst.steps.push_back(dist);
        for (const auto& [s, m] : dist.masses) {
            if (s >= seen.size()) seen.resize(s + 1, 0);
            if (!seen[s]) {
                seen[s] = 1;
                inst.universe.push_back(s);
            }
        }
    }
    std::sort(inst.universe.begin(), inst.universe.end());
    if (inst.universe.size() > lim.max_support)
        throw limit_error("support of size " + std::to_string(inst.universe.size()) +
                          " exceeds oracle limit " + std::to_string(lim.max_support));
    const std::size_t n = inst.universe.size();
    inst.prefix.assign(static_cast<std::size_t>(horizon) + 1, std::vector<Rational>(n, Rational(0)));
    for (std::int64_t t = 1; t <= horizon; ++t) {
        auto& row = inst.prefix[static_cast<std::size_t>(t)];
        row = inst.prefix[static_cast<std::size_t>(t - 1)];
        for (std::size_t i = 0; i < n; ++i)
            if (const Rational* m = inst.steps[static_cast<std::size_t>(t - 1)].find(inst.universe[i]))
                row[i] += *m;
    }
    return inst;
}

} // namespace detail

// Exact horizon-T optimum of the worst running discrepancy, over all
// length-T sequences drawn from the schedule's support, with one optimal
// witness and the earliest-deadline generator's value for comparison.
inline OracleResult minimax_search(Schedule<Rational> sched, std::int64_t horizon,
                                   const OracleLimits& lim = {}) {
    auto inst = detail::materialize(sched, horizon, lim);
    const std::size_t n = inst.universe.size();

    OracleResult result;
    result.horizon = horizon;

    detail::MinimaxSearch search(inst.prefix, n, horizon);
    std::vector<int> counts(n, 0);
    result.opt_value = horizon > 0 ? search.continuation(0, counts) : Rational(0);
    for (auto ui : search.witness(result.opt_value))
        result.witness.push_back(inst.universe[ui]);
    result.nodes_explored = search.nodes();

    // Greedy comparison run on an independent instance of the same steps.
    if (horizon > 0) {
        auto greedy_sched =
            Schedule<Rational>::table(sched.symbols(), inst.steps, TailPolicy::halt);
        Stacker<Rational> greedy(std::move(greedy_sched));
        const auto seq = greedy.run(horizon);
        auto audit_sched =
            Schedule<Rational>::table(sched.symbols(), inst.steps, TailPolicy::halt);
        result.greedy_value = audit_bound(seq, std::move(audit_sched)).max_abs;
    }
    return result;
}

// Reference implementation: plain depth-first enumeration of every length-T
// sequence with no memoization and no pruning. Small instances only.
inline Rational exhaustive_minimax(Schedule<Rational> sched, std::int64_t horizon,
                                   const OracleLimits& lim = {}) {
    auto inst = detail::materialize(sched, horizon, lim);
    const std::size_t n = inst.universe.size();
    detail::MinimaxSearch eval(inst.prefix, n, horizon); // for immediate() only
    std::vector<int> counts(n, 0);
    Rational best;
    bool have = false;
    const auto dfs = [&](auto&& self, std::int64_t depth, const Rational& running) -> void {
        if (depth == horizon) {
            if (!have || running < best) {
                best = running;
                have = true;
            }
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            counts[i] += 1;
            const Rational imm = eval.immediate(depth + 1, counts);
            self(self, depth + 1, std::max(running, imm));
            counts[i] -= 1;
        }
    };
    dfs(dfs, 0, Rational(0));
    return have ? best : Rational(0);
}

struct TightnessResult {
    int n = 0;
    Rational bound;      // 1 - 1/n
    OracleResult certificate;
};

// On the uniform-n instance at horizon n-1 every sequence leaves some symbol
// unseen with discrepancy exactly 1 - 1/n, so the optimum cannot beat it.
inline TightnessResult tightness_probe(int n, const OracleLimits& lim = {}) {
    if (n < 2) throw limit_error("tightness probe needs n >= 2");
    if (static_cast<std::size_t>(n) > lim.max_support)
        throw limit_error("n too large for oracle limits");
    SymbolTable syms;
    std::vector<std::pair<SymbolId, Rational>> masses;
    for (int i = 1; i <= n; ++i)
        masses.emplace_back(syms.intern("u" + std::to_string(i)), Rational(1, n));
    auto sched = Schedule<Rational>::stationary(std::move(syms), make_step_dist(std::move(masses)));
    TightnessResult result;
    result.n = n;
    result.bound = Rational(n - 1, n);
    result.certificate = minimax_search(std::move(sched), n - 1, lim);
    return result;
}

struct LookaheadProbeResult {
    int prefixes_checked = 0;
    bool every_prefix_two_low = false;  // exactly two symbols at -3/5 after step 3
    bool every_prefix_forced = false;   // best achievable max|D_4| is 11/10 for all of them
    Rational forced_value;              // 11/10
    Rational online_worst_disc;         // most negative D_4 of the online (L=1) run
    Rational full_knowledge_opt;        // minimax over the 4-step instance, < 1
    std::vector<SymbolId> online_sequence;
    SymbolTable symbols;
};

// The planning-horizon demonstration: three uniform steps on five symbols
// leave two symbols equally starved no matter what was chosen; a fourth step
// splitting its mass between those two forces a discrepancy of -11/10 on any
// choice made without seeing that step, while full knowledge of all four
// steps keeps every discrepancy below 1.
inline LookaheadProbeResult lookahead_probe() {
    LookaheadProbeResult out;
    constexpr int kSymbols = 5;
    SymbolTable syms;
    std::vector<std::pair<SymbolId, Rational>> uniform;
    for (int i = 1; i <= kSymbols; ++i)
        uniform.emplace_back(syms.intern("u" + std::to_string(i)), Rational(1, kSymbols));
    const auto uniform5 = make_step_dist(uniform);

    const Rational low(-3, 5);
    const Rational forced(11, 10);
    out.forced_value = forced;
    out.every_prefix_two_low = true;
    out.every_prefix_forced = true;

    // Every greedy-consistent 3-prefix is an ordered triple of distinct
    // symbols (a chosen symbol stops being a candidate under uniform masses).
    for (int a = 0; a < kSymbols; ++a) {
        for (int b = 0; b < kSymbols; ++b) {
            for (int c = 0; c < kSymbols; ++c) {
                if (a == b || b == c || a == c) continue;
                ++out.prefixes_checked;
                std::vector<int> counts(kSymbols, 0);
                counts[a]++, counts[b]++, counts[c]++;
                std::vector<SymbolId> starved;
                for (int s = 0; s < kSymbols; ++s)
                    if (Rational(counts[s]) - Rational(3, 5) == low)
                        starved.push_back(static_cast<SymbolId>(s));
                if (starved.size() != 2) out.every_prefix_two_low = false;

                // Adversarial fourth step: uniform on the two starved symbols.
                Rational best_choice;
                bool have = false;
                for (int s4 = 0; s4 < kSymbols; ++s4) {
                    Rational worst(0);
                    for (int s = 0; s < kSymbols; ++s) {
                        const auto sid = static_cast<SymbolId>(s);
                        Rational p4(3, 5);
                        if (sid == starved[0] || sid == starved[1]) p4 += Rational(1, 2);
                        const Rational d =
                            Rational(counts[s] + (s == s4 ? 1 : 0)) - p4;
                        worst = std::max(worst, abs_val(d));
                    }
                    if (!have || worst < best_choice) {
                        best_choice = worst;
                        have = true;
                    }
                }
                if (best_choice != forced) out.every_prefix_forced = false;
            }
        }
    }

    // Canonical run of the online generator itself, lookahead 1.
    std::vector<StepDist<Rational>> steps3(3, uniform5);
    StackerOptions online;
    online.lookahead = 1;
    Stacker<Rational> first_pass(Schedule<Rational>::table(syms, steps3, TailPolicy::halt), online);
    const auto prefix = first_pass.run(3);

    std::vector<char> seen(kSymbols, 0);
    for (SymbolId s : prefix) seen[s] = 1;
    std::vector<std::pair<SymbolId, Rational>> pi4;
    for (int s = 0; s < kSymbols; ++s)
        if (!seen[s]) pi4.emplace_back(static_cast<SymbolId>(s), Rational(1, 2));
    auto steps4 = steps3;
    steps4.push_back(make_step_dist(pi4));

    Stacker<Rational> online_run(Schedule<Rational>::table(syms, steps4, TailPolicy::halt), online);
    out.online_sequence = online_run.run(4);
    Rational worst(0);
    for (SymbolId s = 0; s < kSymbols; ++s) {
        const Rational d = online_run.discrepancy(s);
        if (d < worst) worst = d;
    }
    out.online_worst_disc = worst;

    auto full = minimax_search(Schedule<Rational>::table(syms, steps4, TailPolicy::halt), 4);
    out.full_knowledge_opt = full.opt_value;
    out.symbols = syms;
    return out;
}

} // namespace ldseq
