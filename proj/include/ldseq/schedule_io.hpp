#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include <ldseq/schedule.hpp>

namespace ldseq {

enum class NumericMode { exact, floating };

inline const char* mode_name(NumericMode m) {
    return m == NumericMode::exact ? "exact" : "float";
}

// Either of the two numeric instantiations, as declared by the document
// header. A schedule never mixes modes.
using AnySchedule = std::variant<Schedule<Rational>, Schedule<double>>;

namespace detail {

using Json = nlohmann::ordered_json;

// JSON objects silently collapse duplicate keys, so duplicates (a duplicate
// symbol within a step, say) are caught during parsing.
inline Json parse_json_checked(const std::string& text, int lineno) {
    std::vector<std::set<std::string>> keys;
    Json::parser_callback_t cb = [&](int, Json::parse_event_t event, Json& parsed) {
        if (event == Json::parse_event_t::object_start) {
            keys.emplace_back();
        } else if (event == Json::parse_event_t::object_end) {
            keys.pop_back();
        } else if (event == Json::parse_event_t::key) {
            if (!keys.back().insert(parsed.get<std::string>()).second)
                throw parse_error("line " + std::to_string(lineno) + ": duplicate key '" +
                                  parsed.get<std::string>() + "'");
        }
        return true;
    };
    try {
        return Json::parse(text, cb);
    } catch (const Json::parse_error& e) {
        throw parse_error("line " + std::to_string(lineno) + ": " + e.what());
    }
}

template <class N>
N mass_from_json(const Json& v, int lineno) {
    if (v.is_string()) {
        const auto text = v.get<std::string>();
        try {
            if constexpr (is_exact_v<N>) {
                return parse_rational(text);
            } else {
                // exact documents widened to float mode carry "a/b" strings
                if (text.find('/') != std::string::npos)
                    return parse_rational(text).convert_to<double>();
                return parse_double(text);
            }
        } catch (const parse_error& e) {
            throw parse_error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if constexpr (is_exact_v<N>) {
        if (v.is_number_integer()) return N(v.get<std::int64_t>());
        throw parse_error("line " + std::to_string(lineno) +
                          ": exact-mode masses must be rational strings like \"1/3\"");
    } else {
        if (v.is_number()) return v.get<double>();
        throw parse_error("line " + std::to_string(lineno) + ": float-mode masses must be numbers");
    }
}

template <class N>
StepDist<N> dist_from_json(const Json& probs, SymbolTable& syms, int lineno, const char* what) {
    if (!probs.is_object() || probs.empty())
        throw parse_error("line " + std::to_string(lineno) + ": " + what +
                          " needs a non-empty object of symbol masses");
    std::vector<std::pair<SymbolId, N>> raw;
    raw.reserve(probs.size());
    for (const auto& [label, value] : probs.items())
        raw.emplace_back(syms.intern(label), mass_from_json<N>(value, lineno));
    try {
        return make_step_dist<N>(std::move(raw), what);
    } catch (const parse_error& e) {
        throw parse_error("line " + std::to_string(lineno) + ": " + e.what());
    }
}

struct RawDocument {
    NumericMode mode;
    std::optional<Json> stationary;
    std::map<std::int64_t, std::pair<Json, int>> steps; // index -> (probs, lineno)
    std::optional<TailPolicy> tail;
};

inline RawDocument read_document(std::istream& is) {
    RawDocument doc{};
    std::string line;
    int lineno = 0;
    bool have_mode = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const Json j = parse_json_checked(line, lineno);
        if (!j.is_object())
            throw parse_error("line " + std::to_string(lineno) + ": expected a JSON object");
        if (!have_mode) {
            if (!(j.size() == 1 && j.contains("mode") && j["mode"].is_string()))
                throw parse_error("line " + std::to_string(lineno) +
                                  R"(: first line must be the header {"mode":"exact"|"float"})");
            const auto m = j["mode"].get<std::string>();
            if (m == "exact")
                doc.mode = NumericMode::exact;
            else if (m == "float")
                doc.mode = NumericMode::floating;
            else
                throw parse_error("line " + std::to_string(lineno) + ": unknown mode '" + m + "'");
            have_mode = true;
            continue;
        }
        if (j.contains("stationary")) {
            if (j.size() != 1)
                throw parse_error("line " + std::to_string(lineno) + ": unexpected keys beside 'stationary'");
            if (doc.stationary)
                throw parse_error("line " + std::to_string(lineno) + ": repeated stationary line");
            doc.stationary = j["stationary"];
        } else if (j.contains("step") || j.contains("probs")) {
            if (!(j.size() == 2 && j.contains("step") && j.contains("probs")))
                throw parse_error("line " + std::to_string(lineno) +
                                  R"(: step lines must be exactly {"step":i,"probs":{...}})");
            if (!j["step"].is_number_integer() || j["step"].get<std::int64_t>() < 1)
                throw parse_error("line " + std::to_string(lineno) + ": step index must be a positive integer");
            const auto idx = j["step"].get<std::int64_t>();
            if (!doc.steps.emplace(idx, std::make_pair(j["probs"], lineno)).second)
                throw parse_error("line " + std::to_string(lineno) + ": duplicate step index " +
                                  std::to_string(idx));
        } else if (j.contains("tail")) {
            if (j.size() != 1 || !j["tail"].is_string())
                throw parse_error("line " + std::to_string(lineno) + ": bad tail line");
            if (doc.tail)
                throw parse_error("line " + std::to_string(lineno) + ": repeated tail line");
            const auto t = j["tail"].get<std::string>();
            if (t == "halt")
                doc.tail = TailPolicy::halt;
            else if (t == "repeat-last")
                doc.tail = TailPolicy::repeat_last;
            else
                throw parse_error("line " + std::to_string(lineno) + ": unknown tail policy '" + t + "'");
        } else {
            throw parse_error("line " + std::to_string(lineno) + ": unrecognized line");
        }
    }
    if (!have_mode) throw parse_error("empty schedule document");
    if (doc.stationary && (!doc.steps.empty() || doc.tail))
        throw parse_error("stationary shorthand cannot be combined with step or tail lines");
    if (!doc.stationary && doc.steps.empty())
        throw parse_error("schedule document declares no distributions");
    return doc;
}

template <class N>
Schedule<N> build_schedule(const RawDocument& doc) {
    SymbolTable syms;
    if (doc.stationary) {
        auto dist = dist_from_json<N>(*doc.stationary, syms, 0, "stationary distribution");
        return Schedule<N>::stationary(std::move(syms), std::move(dist));
    }
    std::vector<StepDist<N>> steps;
    steps.reserve(doc.steps.size());
    std::int64_t expect = 1;
    for (const auto& [idx, entry] : doc.steps) {
        if (idx != expect)
            throw parse_error("missing step " + std::to_string(expect) + " (document skips to " +
                              std::to_string(idx) + ")");
        steps.push_back(dist_from_json<N>(entry.first, syms, entry.second, "step distribution"));
        ++expect;
    }
    return Schedule<N>::table(std::move(syms), std::move(steps),
                              doc.tail.value_or(TailPolicy::halt));
}

} // namespace detail

// Parses the JSON-lines schedule document. An explicit mode, when given,
// must match the header or be a widening from exact to float; narrowing
// float inputs to exact is refused.
inline AnySchedule parse_schedule(std::istream& is, std::optional<NumericMode> mode = std::nullopt) {
    const auto doc = detail::read_document(is);
    auto effective = doc.mode;
    if (mode && *mode != doc.mode) {
        if (doc.mode == NumericMode::floating)
            throw parse_error("float document cannot be reinterpreted in exact mode");
        effective = *mode;
    }
    if (effective == NumericMode::exact) return detail::build_schedule<Rational>(doc);
    return detail::build_schedule<double>(doc);
}

// One symbol label per line.
inline std::vector<SymbolId> read_sequence(std::istream& is, SymbolTable& syms) {
    std::vector<SymbolId> seq;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        seq.push_back(syms.intern(line));
    }
    return seq;
}

inline void write_sequence(std::ostream& os, const std::vector<SymbolId>& seq, const SymbolTable& syms) {
    for (SymbolId s : seq) os << syms.label(s) << '\n';
}

} // namespace ldseq
