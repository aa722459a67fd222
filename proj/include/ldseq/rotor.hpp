#pragma once

#include <cstdint>
#include <vector>

#include <ldseq/schedule.hpp>
#include <ldseq/stacker.hpp>

namespace ldseq {

// Periodic output of the generator on a rational stationary distribution:
// with any deterministic state-dependent tie rule, both counts and expected
// counts are integers after m = lcm(denominators) steps, so the discrepancy
// vector returns to the origin and the sequence loops with period m.
struct Rotor {
    std::int64_t period = 0;
    std::vector<SymbolId> pattern;
    std::vector<std::pair<SymbolId, Rational>> pi;
};

struct RotorVerification {
    bool pass = false;
    bool composition_ok = false;   // each s occurs exactly m*pi(s) times
    bool zero_return_ok = false;   // D_m(s) = 0 for all s
    bool bound_ok = false;         // max in-period |D_k| < 1
    bool minimal_ok = false;       // no proper divisor d of m loops with D_d = 0
    Rational max_abs_disc;
    std::vector<std::int64_t> failing_divisors;
};

struct RotorOptions {
    Tiebreak tiebreak = Tiebreak::first_seen;
    std::int64_t max_period = 1000000;
};

namespace detail {

inline std::int64_t rational_lcm_of_denominators(const std::vector<std::pair<SymbolId, Rational>>& pi,
                                                 std::int64_t max_period) {
    BigInt m(1);
    for (const auto& [s, q] : pi) {
        if (q == Rational(0)) continue;
        const BigInt d = denominator(q);
        m = lcm(m, d);
        if (m > BigInt(max_period))
            throw limit_error("rotor period exceeds limit " + std::to_string(max_period));
    }
    return to_int64(m);
}

} // namespace detail

// Runs the generator for two full periods and extracts the repeating
// pattern, checking the zero return and the repeat along the way.
inline Rotor extract_rotor(std::vector<std::pair<SymbolId, Rational>> pi, const SymbolTable& syms,
                           const RotorOptions& opt = {}) {
    std::vector<std::pair<SymbolId, Rational>> support;
    for (auto& [s, q] : pi) {
        if (q < Rational(0)) throw parse_error("negative stationary mass");
        if (q != Rational(0)) support.emplace_back(s, q);
    }
    Rotor rotor;
    rotor.period = detail::rational_lcm_of_denominators(support, opt.max_period);
    rotor.pi = support;

    StackerOptions sopt;
    sopt.tiebreak = opt.tiebreak;
    sopt.horizon_cap = std::nullopt; // stationary: closed-form deadlines
    Stacker<Rational> st(
        Schedule<Rational>::stationary(syms, make_step_dist(std::move(support), "stationary distribution")),
        sopt);
    const auto seq = st.run(2 * rotor.period);
    for (const auto& [s, q] : rotor.pi)
        if (st.discrepancy(s) != Rational(0) ||
            Rational(st.count(s)) != Rational(2 * rotor.period) * q)
            throw error("rotor extraction: discrepancy did not return to zero");
    for (std::int64_t k = 0; k < rotor.period; ++k)
        if (seq[static_cast<std::size_t>(k)] != seq[static_cast<std::size_t>(k + rotor.period)])
            throw error("rotor extraction: sequence failed to repeat at the period");
    rotor.pattern.assign(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(rotor.period));
    return rotor;
}

// Independent check of a claimed rotor: composition, zero return, in-period
// bound, and minimality over proper divisors of the period.
inline RotorVerification verify_rotor(const Rotor& rotor) {
    RotorVerification v;
    const std::int64_t m = rotor.period;
    if (m <= 0 || static_cast<std::int64_t>(rotor.pattern.size()) != m) return v;

    std::size_t width = 0;
    for (SymbolId s : rotor.pattern) width = std::max(width, static_cast<std::size_t>(s) + 1);
    for (const auto& [s, q] : rotor.pi) width = std::max(width, static_cast<std::size_t>(s) + 1);

    std::vector<std::int64_t> counts(width, 0);
    for (SymbolId s : rotor.pattern) counts[s] += 1;
    v.composition_ok = true;
    std::vector<Rational> pi_dense(width, Rational(0));
    Rational total(0);
    for (const auto& [s, q] : rotor.pi) {
        pi_dense[s] = q;
        total += q;
        if (Rational(counts[s]) != Rational(m) * q) v.composition_ok = false;
    }
    if (total != Rational(1)) v.composition_ok = false;
    for (SymbolId s = 0; s < width; ++s)
        if (pi_dense[s] == Rational(0) && counts[s] != 0) v.composition_ok = false;

    // Replay the pattern.
    std::vector<Rational> disc(width, Rational(0));
    std::vector<std::vector<Rational>> history;
    history.reserve(static_cast<std::size_t>(m));
    v.bound_ok = true;
    for (std::int64_t k = 0; k < m; ++k) {
        for (SymbolId s = 0; s < width; ++s) disc[s] -= pi_dense[s];
        disc[rotor.pattern[static_cast<std::size_t>(k)]] += Rational(1);
        for (SymbolId s = 0; s < width; ++s) {
            const Rational a = abs_val(disc[s]);
            if (v.max_abs_disc < a) v.max_abs_disc = a;
            if (a >= Rational(1)) v.bound_ok = false;
        }
        history.push_back(disc);
    }
    v.zero_return_ok = true;
    for (SymbolId s = 0; s < width; ++s)
        if (disc[s] != Rational(0)) v.zero_return_ok = false;

    // Minimality: a proper divisor d would need the pattern to be d-periodic
    // with a zero discrepancy vector after d steps.
    v.minimal_ok = true;
    for (std::int64_t d = 1; d < m; ++d) {
        if (m % d != 0) continue;
        bool repeats = true;
        for (std::int64_t k = 0; repeats && k + d < m; ++k)
            if (rotor.pattern[static_cast<std::size_t>(k)] !=
                rotor.pattern[static_cast<std::size_t>(k + d)])
                repeats = false;
        bool zero_at_d = true;
        for (const Rational& x : history[static_cast<std::size_t>(d - 1)])
            if (x != Rational(0)) zero_at_d = false;
        if (repeats && zero_at_d) {
            v.minimal_ok = false;
            v.failing_divisors.push_back(d);
        }
    }

    v.pass = v.composition_ok && v.zero_return_ok && v.bound_ok && v.minimal_ok;
    return v;
}

} // namespace ldseq
