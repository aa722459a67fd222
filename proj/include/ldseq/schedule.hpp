#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <ldseq/rational.hpp>
#include <ldseq/symbol.hpp>

namespace ldseq {

enum class TailPolicy { halt, repeat_last };

// One step's distribution as a sparse list of positive masses in
// document/first-seen order. Absent symbol means mass 0 at this step.
template <class N>
struct StepDist {
    std::vector<std::pair<SymbolId, N>> masses;

    const N* find(SymbolId s) const {
        for (const auto& [id, m] : masses)
            if (id == s) return &m;
        return nullptr;
    }
};

// Float-mode step masses may miss 1 by accumulated representation error of
// at most 2^-40; anything worse is an ingest error, not a rounding artifact.
inline constexpr double kFloatSumTolerance = 9.094947017729282e-13; // 2^-40

// Validates masses (nonnegative, summing to one), drops zero entries, and
// renormalizes float-mode sums within tolerance.
template <class N>
StepDist<N> make_step_dist(std::vector<std::pair<SymbolId, N>> raw, const char* what = "distribution") {
    N sum(0);
    for (const auto& [id, m] : raw) {
        if constexpr (!is_exact_v<N>) {
            if (!std::isfinite(m)) throw parse_error(std::string(what) + ": non-finite mass");
        }
        if (m < N(0)) throw parse_error(std::string(what) + ": negative mass");
        sum += m;
    }
    if constexpr (is_exact_v<N>) {
        if (sum != N(1)) throw parse_error(std::string(what) + ": masses sum to " + NumIO<N>::format(sum) + ", expected 1");
    } else {
        if (std::abs(sum - 1.0) > kFloatSumTolerance)
            throw parse_error(std::string(what) + ": masses sum to " + NumIO<N>::format(sum) + ", outside renormalization tolerance");
    }
    StepDist<N> dist;
    dist.masses.reserve(raw.size());
    for (auto& [id, m] : raw) {
        if (m == N(0)) continue;
        if constexpr (is_exact_v<N>) {
            dist.masses.emplace_back(id, std::move(m));
        } else {
            dist.masses.emplace_back(id, m / sum);
        }
    }
    return dist;
}

// Pull-based stream of per-step distributions pi_1, pi_2, ... with the
// running prefix masses P_k(s) maintained at a committed frontier k.
// Lookahead pulls beyond the frontier are cached so that repeated pulls of
// the same step index always return the identical distribution.
template <class N>
class Schedule {
public:
    // Callback contract: must be a pure function of the step index; it is
    // invoked at most once per index, and its result is cached.
    using StepFn = std::function<std::vector<std::pair<std::string, N>>(std::int64_t)>;

    static Schedule stationary(SymbolTable syms, StepDist<N> dist) {
        Schedule s(std::move(syms));
        s.src_ = Stationary{std::move(dist)};
        return s;
    }

    static Schedule table(SymbolTable syms, std::vector<StepDist<N>> steps, TailPolicy tail) {
        if (steps.empty()) throw parse_error("table schedule has no steps");
        Schedule s(std::move(syms));
        s.src_ = Table{std::move(steps), tail};
        return s;
    }

    static Schedule generator(SymbolTable syms, StepFn fn, std::size_t cache_cap = 0) {
        Schedule s(std::move(syms));
        s.src_ = Generator{std::move(fn), cache_cap};
        return s;
    }

    // Distribution of step i (1-based). Deterministic: same i, same result.
    const StepDist<N>& pull(std::int64_t i) {
        if (i < 1) throw schedule_error("step index must be >= 1");
        if (const auto* st = std::get_if<Stationary>(&src_)) return st->dist;
        if (const auto* tb = std::get_if<Table>(&src_)) {
            const auto len = static_cast<std::int64_t>(tb->steps.size());
            if (i <= len) return tb->steps[static_cast<std::size_t>(i - 1)];
            if (tb->tail == TailPolicy::repeat_last) return tb->steps.back();
            throw schedule_error("table schedule exhausted at step " + std::to_string(i));
        }
        auto& gen = std::get<Generator>(src_);
        if (i <= frontier_)
            throw schedule_error("generator step " + std::to_string(i) + " already consumed");
        auto it = cache_.find(i);
        if (it != cache_.end()) return it->second;
        if (gen.cache_cap != 0 && cache_.size() >= gen.cache_cap)
            throw schedule_error("lookahead cache cap (" + std::to_string(gen.cache_cap) + ") exceeded at step " + std::to_string(i));
        std::vector<std::pair<SymbolId, N>> raw;
        for (auto& [label, m] : gen.fn(i)) raw.emplace_back(syms_.intern(label), m);
        auto [pos, inserted] = cache_.emplace(i, make_step_dist<N>(std::move(raw), "generator step"));
        (void)inserted;
        return pos->second;
    }

    // Commits step frontier+1: prefix[s] += pi_{k+1}(s).
    void advance() {
        const auto& dist = pull(frontier_ + 1);
        grow();
        for (const auto& [s, m] : dist.masses) prefix_[s] += m;
        ++frontier_;
        if (std::holds_alternative<Generator>(src_)) cache_.erase(frontier_);
    }

    std::int64_t frontier() const { return frontier_; }

    // P_k(s) at the committed frontier k.
    N prefix(SymbolId s) const {
        return s < prefix_.size() ? prefix_[s] : N(0);
    }

    // P_k(s) for any k at or beyond the frontier; does not move the frontier.
    N peek_prefix(SymbolId s, std::int64_t k) {
        if (k < frontier_) throw schedule_error("peek before the committed frontier");
        N acc = prefix(s);
        if (const auto* st = std::get_if<Stationary>(&src_)) {
            if (const N* m = st->dist.find(s)) acc += N(k - frontier_) * *m;
            return acc;
        }
        if (const auto* tb = std::get_if<Table>(&src_)) {
            const auto len = static_cast<std::int64_t>(tb->steps.size());
            const auto mid = std::min(k, len);
            for (std::int64_t i = frontier_ + 1; i <= mid; ++i)
                if (const N* m = tb->steps[static_cast<std::size_t>(i - 1)].find(s)) acc += *m;
            if (k > len) {
                if (tb->tail == TailPolicy::halt)
                    throw schedule_error("peek beyond halting table (step " + std::to_string(k) + ")");
                if (const N* m = tb->steps.back().find(s)) acc += N(k - std::max(len, frontier_)) * *m;
            }
            return acc;
        }
        for (std::int64_t i = frontier_ + 1; i <= k; ++i)
            if (const N* m = pull(i).find(s)) acc += *m;
        return acc;
    }

    // Last pullable step, when the source ends (halting table).
    std::optional<std::int64_t> end() const {
        if (const auto* tb = std::get_if<Table>(&src_))
            if (tb->tail == TailPolicy::halt) return static_cast<std::int64_t>(tb->steps.size());
        return std::nullopt;
    }

    // If every step from some index onward has the same distribution, returns
    // {from, dist}: pi_i == *dist for all i >= from. Structural knowledge, so
    // deadlines over this region have closed forms and need no lookahead.
    std::optional<std::pair<std::int64_t, const StepDist<N>*>> constant_tail() const {
        if (const auto* st = std::get_if<Stationary>(&src_)) return {{1, &st->dist}};
        if (const auto* tb = std::get_if<Table>(&src_))
            if (tb->tail == TailPolicy::repeat_last)
                return {{static_cast<std::int64_t>(tb->steps.size()), &tb->steps.back()}};
        return std::nullopt;
    }

    bool stationary_source() const { return std::holds_alternative<Stationary>(src_); }

    // Stationary distribution when the source is stationary.
    const StepDist<N>* stationary_dist() const {
        const auto* st = std::get_if<Stationary>(&src_);
        return st ? &st->dist : nullptr;
    }

    SymbolTable& symbols() { return syms_; }
    const SymbolTable& symbols() const { return syms_; }

private:
    struct Stationary {
        StepDist<N> dist;
    };
    struct Table {
        std::vector<StepDist<N>> steps;
        TailPolicy tail;
    };
    struct Generator {
        StepFn fn;
        std::size_t cache_cap; // 0 = unbounded
    };

    explicit Schedule(SymbolTable syms) : syms_(std::move(syms)) {}

    void grow() {
        if (prefix_.size() < syms_.size()) prefix_.resize(syms_.size(), N(0));
    }

    SymbolTable syms_;
    std::variant<Stationary, Table, Generator> src_;
    std::int64_t frontier_ = 0;
    std::vector<N> prefix_;                 // dense by symbol id
    std::map<std::int64_t, StepDist<N>> cache_; // generator steps > frontier
};

} // namespace ldseq
