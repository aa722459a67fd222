// ldseq: deterministic low-discrepancy sequence generation over schedules of
// discrete distributions, with auditing, an exact minimax oracle, and
// periodic-rotor extraction. See README.md for the file formats.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <ldseq/ldseq.hpp>

namespace {

using nlohmann::ordered_json;
using namespace ldseq;

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailed = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::string schedule_path;
    std::string mode; // "", "exact", "float"
    std::string tiebreak = "first-seen";
    std::string horizon_cap = "1000000";
    std::optional<std::int64_t> lookahead;
};

std::optional<NumericMode> mode_override(const CommonFlags& f) {
    if (f.mode.empty()) return std::nullopt;
    if (f.mode == "exact") return NumericMode::exact;
    if (f.mode == "float") return NumericMode::floating;
    throw parse_error("unknown mode '" + f.mode + "'");
}

AnySchedule load_schedule(const CommonFlags& f) {
    std::ifstream in(f.schedule_path);
    if (!in) throw parse_error("cannot open schedule file '" + f.schedule_path + "'");
    return parse_schedule(in, mode_override(f));
}

Schedule<Rational> load_exact_schedule(const CommonFlags& f, const char* command) {
    auto any = load_schedule(f);
    if (auto* ex = std::get_if<Schedule<Rational>>(&any)) return std::move(*ex);
    throw parse_error(std::string(command) + " requires an exact-mode schedule");
}

StackerOptions stacker_options(const CommonFlags& f) {
    StackerOptions opt;
    if (f.tiebreak == "first-seen")
        opt.tiebreak = Tiebreak::first_seen;
    else if (f.tiebreak == "most-negative")
        opt.tiebreak = Tiebreak::most_negative;
    else
        throw parse_error("unknown tiebreak '" + f.tiebreak + "'");
    if (f.horizon_cap == "unbounded")
        opt.horizon_cap = std::nullopt;
    else
        try {
            opt.horizon_cap = std::stoll(f.horizon_cap);
        } catch (const std::exception&) {
            throw parse_error("bad --horizon-cap '" + f.horizon_cap + "'");
        }
    opt.lookahead = f.lookahead;
    return opt;
}

void log_fallback(const SymbolTable& syms, const FallbackEvent& ev) {
    ordered_json j;
    j["k"] = ev.k;
    j["event"] = "unresolved-fallback";
    j["chosen"] = syms.label(ev.chosen);
    j["candidates"] = ev.candidates;
    std::cerr << j.dump() << '\n';
}

// --- generate ---------------------------------------------------------

template <class N>
int generate_with(Schedule<N> sched, const StackerOptions& opt, std::int64_t steps, bool as_json,
                  const std::string& out_path, const std::string& trace_path) {
    std::ofstream trace_file;
    TraceOptions<N> trace;
    if (!trace_path.empty()) {
        trace_file.open(trace_path);
        if (!trace_file) throw parse_error("cannot open trace file '" + trace_path + "'");
        trace_file << kTraceCsvHeader << '\n';
    }
    SymbolTable* syms = &sched.symbols();
    Stacker<N> st(std::move(sched), opt,
                  [&](const FallbackEvent& ev) { log_fallback(*syms, ev); });
    syms = &st.symbols();
    if (!trace_path.empty())
        trace.on_row = [&](TraceRow<N>&& row) { write_trace_csv_row(trace_file, row, *syms); };
    const auto seq = st.run(steps, trace);

    std::ofstream out_file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        out_file.open(out_path);
        if (!out_file) throw parse_error("cannot open output file '" + out_path + "'");
        out = &out_file;
    }
    if (as_json) {
        ordered_json arr = ordered_json::array();
        for (SymbolId s : seq) arr.push_back(st.symbols().label(s));
        *out << arr.dump() << '\n';
    } else {
        write_sequence(*out, seq, st.symbols());
    }
    return kExitOk;
}

// --- audit ------------------------------------------------------------

template <class N>
ordered_json violations_json(const BoundReport<N>& report, const SymbolTable& syms) {
    ordered_json arr = ordered_json::array();
    for (const auto& v : report.violations) {
        ordered_json j;
        j["k"] = v.k;
        j["symbol"] = syms.label(v.symbol);
        j["D"] = NumIO<N>::format(v.disc);
        arr.push_back(j);
    }
    return arr;
}

template <class N>
int audit_with(Schedule<N> sched, const std::string& sequence_path, const std::string& trace_path) {
    std::ifstream seq_file(sequence_path);
    if (!seq_file) throw parse_error("cannot open sequence file '" + sequence_path + "'");
    const auto seq = read_sequence(seq_file, sched.symbols());

    std::vector<TraceCsvRow> claimed;
    if (!trace_path.empty()) {
        std::ifstream trace_file(trace_path);
        if (!trace_file) throw parse_error("cannot open trace file '" + trace_path + "'");
        claimed = read_trace_csv(trace_file);
    }

    const bool stationary = sched.stationary_source();
    StepDist<N> pi;
    if (stationary) pi = *sched.stationary_dist();
    const SymbolTable syms = sched.symbols(); // labels fixed before the fold

    std::size_t claim_idx = 0;
    std::int64_t trace_mismatches = 0;
    AuditCallbacks<N> callbacks;
    if (!claimed.empty()) {
        callbacks.on_row = [&](const TraceRow<N>& row) {
            if (claim_idx >= claimed.size()) return;
            const auto& c = claimed[claim_idx];
            if (c.k != row.k) return; // traces may be row-sampled
            ++claim_idx;
            bool ok = true;
            try {
                ok = syms.find(c.chosen) == std::optional<SymbolId>(row.chosen) &&
                     NumIO<N>::parse(c.max_abs_disc) == row.max_abs_disc &&
                     syms.find(c.argmax) == std::optional<SymbolId>(row.argmax) &&
                     NumIO<N>::parse(c.zero_sum_residual) == row.zero_sum_residual;
            } catch (const parse_error&) {
                ok = false;
            }
            if (!ok) ++trace_mismatches;
        };
    }

    std::vector<std::vector<N>> snapshots;
    std::int64_t cadence = 0;
    const auto report = audit_bound<N>(seq, sched, {}, &snapshots, &cadence, callbacks);
    const auto window = audit_window(snapshots);

    ordered_json j;
    j["mode"] = NumIO<N>::mode_name;
    j["steps"] = report.steps;
    j["advisory"] = report.advisory;
    {
        ordered_json b;
        b["max_abs_D"] = NumIO<N>::format(report.max_abs);
        b["argmax_k"] = report.argmax_k;
        b["argmax_symbol"] = report.steps > 0 ? syms.label(report.argmax_symbol) : "";
        b["violations"] = violations_json(report, syms);
        j["bound"] = b;
    }
    j["zero_sum"] = {{"max_abs_residual", NumIO<N>::format(report.max_zero_sum_residual)},
                     {"ok", report.max_zero_sum_residual == N(0)}};
    j["recurrence"] = {{"ok", report.recurrence_ok}};
    j["window"] = {{"value", NumIO<N>::format(window.value)},
                   {"symbol", window.value == N(0) ? "" : syms.label(window.argmax)},
                   {"snapshot_cadence", cadence},
                   {"within_two", window.within_two}};

    bool pass = report.violations.empty() && report.recurrence_ok &&
                window.within_two && trace_mismatches == 0;
    if constexpr (is_exact_v<N>) pass = pass && report.max_zero_sum_residual == N(0);

    if (stationary && cadence == 1) {
        const auto orbit = audit_orbit(snapshots, pi, seq);
        j["orbit"] = {{"recurrence_ok", orbit.recurrence_ok},
                      {"in_box", orbit.in_box},
                      {"distinct_points", orbit.distinct_points},
                      {"contains_origin", orbit.contains_origin}};
        if (orbit.period) j["orbit"]["period"] = *orbit.period;
        if (orbit.points.size() <= 64) {
            ordered_json pts = ordered_json::array();
            for (const auto& point : orbit.points) {
                ordered_json coords = ordered_json::array();
                for (const auto& v : point) coords.push_back(NumIO<N>::format(v));
                pts.push_back(coords);
            }
            j["orbit"]["points"] = pts;
        }
        pass = pass && orbit.recurrence_ok && orbit.in_box;
    }
    if constexpr (is_exact_v<N>) {
        if (stationary) {
            ordered_json gaps;
            bool weak_all = true, strict_all = true;
            for (const auto& [s, m] : pi.masses) {
                std::int64_t occurrences = 0;
                for (SymbolId x : seq)
                    if (x == s) ++occurrences;
                if (occurrences < 2) continue;
                const auto g = gap_stats(seq, pi, s);
                gaps[syms.label(s)] = {{"occurrences", g.occurrences},
                                       {"max_deviation", format_rational(g.max_deviation)},
                                       {"weak_ok", g.weak_ok},
                                       {"strict_ok", g.strict_ok}};
                weak_all = weak_all && g.weak_ok;
                strict_all = strict_all && g.strict_ok;
            }
            j["gaps"] = {{"per_symbol", gaps}, {"weak_ok", weak_all}, {"strict_ok", strict_all}};
        }
    }
    if (!claimed.empty())
        j["trace_check"] = {{"rows", claimed.size()},
                            {"rows_matched", claim_idx},
                            {"mismatches", trace_mismatches}};
    j["pass"] = pass;
    std::cout << j.dump(2) << '\n';
    return pass ? kExitOk : kExitVerificationFailed;
}

// --- oracle -----------------------------------------------------------

ordered_json oracle_json(const OracleResult& r, const SymbolTable& syms) {
    ordered_json j;
    j["opt_value"] = format_rational(r.opt_value);
    j["greedy_value"] = format_rational(r.greedy_value);
    ordered_json w = ordered_json::array();
    for (SymbolId s : r.witness) w.push_back(syms.label(s));
    j["witness"] = w;
    j["nodes_explored"] = r.nodes_explored;
    j["horizon"] = r.horizon;
    return j;
}

int run_oracle_fuzz(std::int64_t count, std::uint64_t seed, int threads) {
    struct Row {
        Rational opt, greedy;
        bool ok;
    };
    std::vector<Row> rows(static_cast<std::size_t>(count));
    const auto work = [&](std::int64_t begin, std::int64_t stride) {
        for (std::int64_t i = begin; i < count; i += stride) {
            Bits bits(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i));
            RandomScheduleParams params;
            params.max_support = 4;
            params.max_denominator = 12;
            params.max_table_len = 10;
            const auto kind = (i % 2 == 0) ? ScheduleKind::stationary : ScheduleKind::table;
            auto sched = random_schedule(bits.next(), kind, params);
            const auto horizon = static_cast<std::int64_t>(1 + bits.below(10));
            auto result = minimax_search(std::move(sched), horizon);
            rows[static_cast<std::size_t>(i)] = {
                result.opt_value, result.greedy_value,
                result.greedy_value < Rational(1) && result.opt_value <= result.greedy_value};
        }
    };
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    std::int64_t failures = 0;
    for (const auto& r : rows)
        if (!r.ok) ++failures;
    ordered_json j;
    j["instances"] = count;
    j["seed"] = seed;
    j["failures"] = failures;
    j["property"] = "greedy_value < 1 and opt_value <= greedy_value";
    std::cout << j.dump(2) << '\n';
    return failures == 0 ? kExitOk : kExitVerificationFailed;
}

// --- rotor ------------------------------------------------------------

int run_rotor(const CommonFlags& flags) {
    auto sched = load_exact_schedule(flags, "rotor");
    if (!sched.stationary_source())
        throw parse_error("rotor extraction requires a stationary schedule");
    const auto opt = stacker_options(flags);
    RotorOptions ropt;
    ropt.tiebreak = opt.tiebreak;
    const auto rotor = extract_rotor(sched.stationary_dist()->masses, sched.symbols(), ropt);
    const auto verdict = verify_rotor(rotor);
    ordered_json j;
    j["m"] = rotor.period;
    ordered_json pattern = ordered_json::array();
    for (SymbolId s : rotor.pattern) pattern.push_back(sched.symbols().label(s));
    j["pattern"] = pattern;
    ordered_json pi;
    for (const auto& [s, q] : rotor.pi) pi[sched.symbols().label(s)] = format_rational(q);
    j["pi"] = pi;
    j["verify"] = {{"pass", verdict.pass},
                   {"composition_ok", verdict.composition_ok},
                   {"zero_return_ok", verdict.zero_return_ok},
                   {"bound_ok", verdict.bound_ok},
                   {"minimal_ok", verdict.minimal_ok},
                   {"max_abs_D", format_rational(verdict.max_abs_disc)}};
    std::cout << j.dump(2) << '\n';
    return verdict.pass ? kExitOk : kExitVerificationFailed;
}

// --- demos ------------------------------------------------------------

int run_demo_tightness(int n) {
    const auto probe = tightness_probe(n);
    ordered_json j;
    j["n"] = probe.n;
    j["bound"] = format_rational(probe.bound);
    j["horizon"] = probe.certificate.horizon;
    j["opt_value"] = format_rational(probe.certificate.opt_value);
    ordered_json w = ordered_json::array();
    SymbolTable syms;
    for (int i = 1; i <= n; ++i) syms.intern("u" + std::to_string(i));
    for (SymbolId s : probe.certificate.witness) w.push_back(syms.label(s));
    j["witness"] = w;
    const bool ok = probe.certificate.opt_value == probe.bound;
    j["confirmed"] = ok;
    std::cout << "1 - 1/n = " << format_rational(probe.bound) << '\n';
    std::cout << j.dump(2) << '\n';
    return ok ? kExitOk : kExitVerificationFailed;
}

int run_demo_lookahead() {
    const auto probe = lookahead_probe();
    ordered_json j;
    j["prefixes_checked"] = probe.prefixes_checked;
    j["every_prefix_two_at_minus_3_5"] = probe.every_prefix_two_low;
    j["forced_value"] = format_rational(probe.forced_value);
    j["every_prefix_forced"] = probe.every_prefix_forced;
    j["online_worst_D4"] = format_rational(probe.online_worst_disc);
    ordered_json seq = ordered_json::array();
    for (SymbolId s : probe.online_sequence) seq.push_back(probe.symbols.label(s));
    j["online_sequence"] = seq;
    j["full_knowledge_opt"] = format_rational(probe.full_knowledge_opt);
    const bool ok = probe.every_prefix_two_low && probe.every_prefix_forced &&
                    probe.online_worst_disc == Rational(-11, 10) &&
                    probe.full_knowledge_opt < Rational(1);
    j["confirmed"] = ok;
    std::cout << "worst discrepancy after step 4 under lookahead 1: "
              << format_rational(probe.online_worst_disc) << '\n';
    std::cout << "optimum with full knowledge of all four steps: "
              << format_rational(probe.full_knowledge_opt) << '\n';
    std::cout << j.dump(2) << '\n';
    return ok ? kExitOk : kExitVerificationFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic low-discrepancy sequence engine"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::int64_t steps = 0;
    bool as_json = false;
    std::string out_path, trace_path, sequence_path;
    std::int64_t fuzz_count = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    int tightness_n = 5;

    const auto add_common = [&](CLI::App* cmd, bool need_schedule) {
        auto* s = cmd->add_option("--schedule", flags.schedule_path, "schedule JSONL file");
        if (need_schedule) s->required();
        cmd->add_option("--mode", flags.mode, "numeric mode override (exact|float)")
            ->check(CLI::IsMember({"exact", "float"}));
    };
    const auto add_stacker = [&](CLI::App* cmd) {
        cmd->add_option("--tiebreak", flags.tiebreak, "tie policy (first-seen|most-negative)")
            ->check(CLI::IsMember({"first-seen", "most-negative"}));
        cmd->add_option("--horizon-cap", flags.horizon_cap, "deadline scan budget (steps or 'unbounded')");
        cmd->add_option("--lookahead", flags.lookahead,
                        "online mode: only steps up to k+L may be examined (no bound guarantee)");
    };

    auto* generate = app.add_subcommand("generate", "emit a low-discrepancy sequence");
    add_common(generate, true);
    add_stacker(generate);
    generate->add_option("--steps", steps, "number of steps to generate")->required();
    generate->add_flag("--json", as_json, "write the sequence as a JSON array");
    generate->add_option("--out", out_path, "sequence output file (default stdout)");
    generate->add_option("--trace", trace_path, "trace CSV output file");

    auto* audit = app.add_subcommand("audit", "re-verify a (sequence, schedule) pair");
    add_common(audit, true);
    audit->add_option("--sequence", sequence_path, "sequence file, one label per line")->required();
    audit->add_option("--trace", trace_path, "trace CSV to cross-check");

    auto* oracle = app.add_subcommand("oracle", "exact minimax optimum on a small instance");
    add_common(oracle, false);
    oracle->add_option("--steps", steps, "horizon T");
    oracle->add_option("--fuzz", fuzz_count, "run N randomized small instances instead");
    oracle->add_option("--seed", seed, "seed for --fuzz instance generation");
    oracle->add_option("--threads", threads, "worker threads for --fuzz")->check(CLI::PositiveNumber);

    auto* rotor = app.add_subcommand("rotor", "extract and verify the periodic pattern");
    add_common(rotor, true);
    add_stacker(rotor);

    auto* demo = app.add_subcommand("demo", "built-in demonstrations");
    demo->require_subcommand(1);
    auto* tightness = demo->add_subcommand("tightness", "the 1 - 1/n lower bound on uniform-n");
    tightness->add_option("--n", tightness_n, "support size")->required();
    auto* lookahead = demo->add_subcommand("lookahead", "why bounded lookahead cannot keep |D| < 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (generate->parsed()) {
            auto any = load_schedule(flags);
            const auto opt = stacker_options(flags);
            return std::visit(
                [&](auto sched) {
                    return generate_with(std::move(sched), opt, steps, as_json, out_path, trace_path);
                },
                std::move(any));
        }
        if (audit->parsed()) {
            auto any = load_schedule(flags);
            return std::visit(
                [&](auto sched) { return audit_with(std::move(sched), sequence_path, trace_path); },
                std::move(any));
        }
        if (oracle->parsed()) {
            if (fuzz_count > 0) return run_oracle_fuzz(fuzz_count, seed, threads);
            if (flags.schedule_path.empty())
                throw parse_error("oracle needs --schedule (or --fuzz N)");
            if (steps <= 0) throw parse_error("oracle needs --steps");
            auto sched = load_exact_schedule(flags, "oracle");
            const SymbolTable syms = sched.symbols();
            const auto result = minimax_search(std::move(sched), steps);
            std::cout << oracle_json(result, syms).dump(2) << '\n';
            return kExitOk;
        }
        if (rotor->parsed()) return run_rotor(flags);
        if (tightness->parsed()) return run_demo_tightness(tightness_n);
        if (lookahead->parsed()) return run_demo_lookahead();
        return kExitUsage;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
