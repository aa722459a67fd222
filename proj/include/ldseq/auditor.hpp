#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include <ldseq/schedule.hpp>
#include <ldseq/trace.hpp>

namespace ldseq {

template <class N>
struct AuditViolation {
    std::int64_t k;
    SymbolId symbol;
    N disc;
};

template <class N>
struct BoundReport {
    N max_abs{};
    std::int64_t argmax_k = 0;
    SymbolId argmax_symbol = 0;
    std::vector<AuditViolation<N>> violations; // |D| >= 1, exactly-1 included
    N max_zero_sum_residual{};
    bool recurrence_ok = true; // folded D agrees with N - P at every step
    std::int64_t steps = 0;
    bool advisory = false; // float mode: report only, no hard guarantee
};

struct AuditOptions {
    std::size_t max_violations = 1000;
    // Snapshot cadence: 0 = auto (1 for runs up to 10^4 steps, else 64).
    std::int64_t snapshot_every = 0;
};

template <class N>
struct AuditCallbacks {
    // Recomputed per-step row (max |D|, argmax, zero-sum residual), for
    // cross-checking an emitted trace against the independent fold.
    std::function<void(const TraceRow<N>&)> on_row;
};

inline std::int64_t snapshot_cadence(std::int64_t steps, std::int64_t requested) {
    if (requested > 0) return requested;
    return steps <= 10000 ? 1 : 64;
}

// Recomputes the discrepancy history from the raw sequence and a fresh
// schedule via the transition D_{k+1} = D_k - pi_{k+1} + e_{chosen}, without
// trusting the generator's bookkeeping, and cross-checks it against the
// definition N_k - P_k. Optionally captures snapshots for the window/orbit
// audits.
template <class N>
BoundReport<N> audit_bound(const std::vector<SymbolId>& seq, Schedule<N> sched,
                           const AuditOptions& opt = {},
                           std::vector<std::vector<N>>* snapshots = nullptr,
                           std::int64_t* snapshot_cadence_out = nullptr,
                           const AuditCallbacks<N>& callbacks = {}) {
    BoundReport<N> report;
    report.advisory = !is_exact_v<N>;
    report.steps = static_cast<std::int64_t>(seq.size());
    const std::int64_t cadence = snapshot_cadence(report.steps, opt.snapshot_every);
    if (snapshot_cadence_out) *snapshot_cadence_out = cadence;

    std::vector<N> d;      // folded discrepancies
    std::vector<std::int64_t> counts;
    const auto grow = [&](std::size_t n) {
        if (d.size() < n) d.resize(n, N(0));
        if (counts.size() < n) counts.resize(n, 0);
    };
    if (snapshots) {
        grow(sched.symbols().size());
        snapshots->push_back(d); // D_0 = 0
    }
    // With a coarse cadence, keep a rolling window of recent vectors so the
    // neighborhood of a new extreme can be snapshotted in full.
    std::vector<std::vector<N>> recent;
    std::int64_t force_snapshots = 0;
    bool have_max = false;
    for (std::int64_t k = 1; k <= report.steps; ++k) {
        const SymbolId chosen = seq[static_cast<std::size_t>(k - 1)];
        {
            const StepDist<N>& dist = sched.pull(k);
            grow(sched.symbols().size());
            if (chosen >= d.size()) grow(chosen + 1);
            for (const auto& [s, m] : dist.masses) d[s] -= m;
        }
        d[chosen] += N(1);
        counts[chosen] += 1;
        sched.advance();

        N residual(0);
        N step_max{};
        SymbolId step_arg = 0;
        bool step_have = false;
        for (SymbolId s = 0; s < d.size(); ++s) {
            const N a = abs_val(d[s]);
            if (!step_have || step_max < a) {
                step_max = a;
                step_arg = s;
                step_have = true;
            }
            if (a >= N(1) && report.violations.size() < opt.max_violations)
                report.violations.push_back({k, s, d[s]});
            residual += d[s];
            if (d[s] != N(counts[s]) - sched.prefix(s)) report.recurrence_ok = false;
        }
        if (!have_max || report.max_abs < step_max) {
            report.max_abs = step_max;
            report.argmax_k = k;
            report.argmax_symbol = step_arg;
            have_max = true;
            if (snapshots && cadence > 1) {
                for (auto& snap : recent) snapshots->push_back(std::move(snap));
                recent.clear();
                force_snapshots = cadence;
            }
        }
        if (abs_val(residual) > abs_val(report.max_zero_sum_residual))
            report.max_zero_sum_residual = residual;
        if (callbacks.on_row) {
            TraceRow<N> row;
            row.k = k;
            row.chosen = chosen;
            row.max_abs_disc = step_max;
            row.argmax = step_arg;
            row.zero_sum_residual = residual;
            callbacks.on_row(row);
        }
        if (snapshots) {
            if (k % cadence == 0 || k == report.steps || force_snapshots > 0) {
                snapshots->push_back(d);
                if (force_snapshots > 0) --force_snapshots;
            } else if (cadence > 1) {
                recent.push_back(d);
                if (recent.size() >= static_cast<std::size_t>(cadence)) recent.erase(recent.begin());
            }
        }
    }
    return report;
}

template <class N>
struct WindowReport {
    N value{};            // max over symbols of (max_k D_k(s) - min_j D_j(s))
    SymbolId argmax = 0;
    bool within_two = true;
};

// Largest segment discrepancy |D_k(s) - D_j(s)| over the snapshot series.
// The absolute value is symmetric in (j, k), so the pairwise maximum equals
// the per-symbol spread.
template <class N>
WindowReport<N> audit_window(const std::vector<std::vector<N>>& snapshots) {
    WindowReport<N> report;
    if (snapshots.empty()) return report;
    std::size_t width = 0;
    for (const auto& snap : snapshots) width = std::max(width, snap.size());
    bool have = false;
    for (SymbolId s = 0; s < width; ++s) {
        N lo(0), hi(0);
        bool first = true;
        for (const auto& snap : snapshots) {
            const N v = s < snap.size() ? snap[s] : N(0);
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                if (v < lo) lo = v;
                if (hi < v) hi = v;
            }
        }
        const N spread = hi - lo;
        if (!have || report.value < spread) {
            report.value = spread;
            report.argmax = s;
            have = true;
        }
    }
    report.within_two = report.value < N(2);
    return report;
}

template <class N>
struct OrbitReport {
    bool recurrence_ok = true; // claimed snapshots satisfy the transition exactly
    N max_recurrence_residual{};
    bool in_box = true;       // every coordinate within [-1, 1]
    std::size_t distinct_points = 0;
    std::vector<std::vector<N>> points; // the orbit itself, lexicographically sorted
    std::optional<std::int64_t> period; // first return to D_0
    bool contains_origin = false;
};

// Verifies a claimed consecutive snapshot series (D_0, D_1, ..., D_T) of a
// stationary run against the transition D_{k+1} = D_k - pi + e_{chosen}, and
// reports the orbit structure. For rational stationary schedules the orbit
// is a finite revisited set inside [-1, 1]^n.
template <class N>
OrbitReport<N> audit_orbit(const std::vector<std::vector<N>>& snapshots,
                           const StepDist<N>& pi, const std::vector<SymbolId>& seq) {
    if (snapshots.size() != seq.size() + 1)
        throw error("orbit audit needs consecutive snapshots from D_0 through D_T");
    OrbitReport<N> report;
    std::size_t width = 0;
    for (const auto& snap : snapshots) width = std::max(width, snap.size());
    const auto coord = [&](const std::vector<N>& v, SymbolId s) {
        return s < v.size() ? v[s] : N(0);
    };
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        for (SymbolId s = 0; s < width; ++s) {
            const N v = coord(snapshots[k], s);
            if (v < N(-1) || N(1) < v) report.in_box = false;
            if (k == 0) continue;
            N expect = coord(snapshots[k - 1], s);
            if (const N* m = pi.find(s)) expect -= *m;
            if (s == seq[k - 1]) expect += N(1);
            const N resid = abs_val(v - expect);
            if (resid != N(0)) {
                report.recurrence_ok = false;
                if (report.max_recurrence_residual < resid) report.max_recurrence_residual = resid;
            }
        }
    }
    std::set<std::vector<N>> orbit;
    const auto pad = [&](const std::vector<N>& v) {
        std::vector<N> full(width, N(0));
        std::copy(v.begin(), v.end(), full.begin());
        return full;
    };
    const auto origin = std::vector<N>(width, N(0));
    for (const auto& snap : snapshots) orbit.insert(pad(snap));
    report.distinct_points = orbit.size();
    report.contains_origin = orbit.count(origin) > 0;
    report.points.assign(orbit.begin(), orbit.end());
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
        if (pad(snapshots[k]) == pad(snapshots[0])) {
            report.period = static_cast<std::int64_t>(k);
            break;
        }
    }
    return report;
}

template <class N>
struct FDiscrepancyReport {
    N max_sum{}; // max over k of sum_{i<k} f(s_i), empty prefix included
    N min_sum{};
};

// Running-sum extremes of a zero-mean weight function over the sequence.
template <class N>
FDiscrepancyReport<N> f_discrepancy(const std::vector<SymbolId>& seq,
                                    const std::vector<N>& weights, const StepDist<N>& pi) {
    N residual(0);
    for (const auto& [s, m] : pi.masses) {
        const N w = s < weights.size() ? weights[s] : N(0);
        residual += w * m;
    }
    if (residual != N(0))
        throw error("weight function has nonzero mean " + NumIO<N>::format(residual) +
                    " under the stationary distribution");
    FDiscrepancyReport<N> report;
    N sum(0);
    for (SymbolId s : seq) {
        sum += s < weights.size() ? weights[s] : N(0);
        if (report.max_sum < sum) report.max_sum = sum;
        if (sum < report.min_sum) report.min_sum = sum;
    }
    return report;
}

struct GapReport {
    std::int64_t occurrences = 0;
    Rational max_deviation;  // max over pairs |(pos_n - pos_m) - (n - m)/pi(s)|
    bool weak_ok = true;     // <= 1
    bool strict_ok = true;   // < 1
};

// Occurrence-gap statistics for one symbol of a rational stationary run:
// how far the spacing of its occurrences drifts from the ideal 1/pi(s) grid.
inline GapReport gap_stats(const std::vector<SymbolId>& seq, const StepDist<Rational>& pi,
                           SymbolId symbol) {
    const Rational* mass = pi.find(symbol);
    if (!mass || *mass == Rational(0)) throw error("gap statistics need a positive stationary mass");
    GapReport report;
    // deviation between occurrences m < n is g_n - g_m with
    // g_m = pos_m - m/pi(s); the pairwise max of |g_n - g_m| is the spread.
    Rational lo, hi;
    std::int64_t m = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] != symbol) continue;
        ++m;
        const Rational g = Rational(static_cast<std::int64_t>(i) + 1) - Rational(m) / *mass;
        if (m == 1) {
            lo = hi = g;
        } else {
            if (g < lo) lo = g;
            if (hi < g) hi = g;
        }
    }
    report.occurrences = m;
    if (m < 2) throw error("gap statistics need at least 2 occurrences");
    report.max_deviation = hi - lo;
    report.weak_ok = report.max_deviation <= Rational(1);
    report.strict_ok = report.max_deviation < Rational(1);
    return report;
}

} // namespace ldseq
