#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <ldseq/schedule.hpp>

namespace ldseq {

// Small deterministic generator (splitmix64). Self-contained so that seeded
// instances are reproducible byte-for-byte across platforms and standard
// library versions.
class Bits {
public:
    explicit Bits(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform value in [0, n), bias-free by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

private:
    std::uint64_t state_;
};

inline std::vector<std::string> symbol_pool(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
    return labels;
}

// Random exact distribution over (a subset of) the pool: d units of mass
// 1/d thrown into the pool's slots, zero slots dropped. Every mass has a
// lowest-terms denominator dividing d, so sums are exactly 1.
inline std::vector<std::pair<std::string, Rational>>
random_masses(Bits& bits, const std::vector<std::string>& pool, int max_denominator) {
    const auto d = static_cast<std::int64_t>(1 + bits.below(static_cast<std::uint64_t>(max_denominator)));
    std::vector<std::int64_t> units(pool.size(), 0);
    for (std::int64_t i = 0; i < d; ++i) units[bits.below(pool.size())] += 1;
    std::vector<std::pair<std::string, Rational>> masses;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (units[i] > 0) masses.emplace_back(pool[i], Rational(units[i], d));
    return masses;
}

inline StepDist<Rational> intern_masses(SymbolTable& syms,
                                        const std::vector<std::pair<std::string, Rational>>& masses) {
    std::vector<std::pair<SymbolId, Rational>> raw;
    raw.reserve(masses.size());
    for (const auto& [label, q] : masses) raw.emplace_back(syms.intern(label), q);
    return make_step_dist(std::move(raw));
}

struct RandomScheduleParams {
    std::size_t max_support = 8;
    int max_denominator = 30;
    std::int64_t max_table_len = 40;
};

enum class ScheduleKind { stationary, table, generator };

// Deterministic schedule instance for seed. Generator sources derive each
// step from (seed, step index) alone, so independent Schedule objects built
// from the same seed pull identical distributions.
inline Schedule<Rational> random_schedule(std::uint64_t seed, ScheduleKind kind,
                                          const RandomScheduleParams& p = {}) {
    Bits bits(seed);
    const auto support = 1 + bits.below(p.max_support);
    const auto pool = symbol_pool(support);
    SymbolTable syms;
    switch (kind) {
    case ScheduleKind::stationary: {
        auto dist = intern_masses(syms, random_masses(bits, pool, p.max_denominator));
        return Schedule<Rational>::stationary(std::move(syms), std::move(dist));
    }
    case ScheduleKind::table: {
        const auto len = 1 + bits.below(static_cast<std::uint64_t>(p.max_table_len));
        std::vector<StepDist<Rational>> steps;
        steps.reserve(len);
        for (std::uint64_t i = 0; i < len; ++i)
            steps.push_back(intern_masses(syms, random_masses(bits, pool, p.max_denominator)));
        return Schedule<Rational>::table(std::move(syms), std::move(steps), TailPolicy::repeat_last);
    }
    case ScheduleKind::generator: {
        const int max_den = p.max_denominator;
        auto fn = [seed, pool, max_den](std::int64_t step) {
            Bits step_bits(seed ^ (0x51ed2701a3c4f9d5ULL * static_cast<std::uint64_t>(step)));
            return random_masses(step_bits, pool, max_den);
        };
        return Schedule<Rational>::generator(std::move(syms), std::move(fn));
    }
    }
    throw error("unreachable");
}

inline ScheduleKind mixed_kind(std::uint64_t index) {
    switch (index % 10) {
    case 8:
    case 9:
        return ScheduleKind::generator;
    case 4:
    case 5:
    case 6:
    case 7:
        return ScheduleKind::table;
    default:
        return ScheduleKind::stationary;
    }
}

// The two-fresh-symbols-per-step schedule: every step puts mass 1/2 on two
// symbols never seen before, so no deadline ever resolves and every step
// goes through the maximal-slack fallback.
inline Schedule<Rational> fresh_pair_schedule() {
    SymbolTable syms;
    auto fn = [](std::int64_t step) {
        std::vector<std::pair<std::string, Rational>> masses;
        masses.emplace_back("a" + std::to_string(step), Rational(1, 2));
        masses.emplace_back("b" + std::to_string(step), Rational(1, 2));
        return masses;
    };
    return Schedule<Rational>::generator(std::move(syms), std::move(fn));
}

} // namespace ldseq
