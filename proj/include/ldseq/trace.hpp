#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <ldseq/rational.hpp>
#include <ldseq/symbol.hpp>

namespace ldseq {

// Per-step audit record. snapshot, when sampled, holds the full discrepancy
// vector D_k indexed densely by symbol id.
template <class N>
struct TraceRow {
    std::int64_t k = 0;
    SymbolId chosen = 0;
    N max_abs_disc{};
    SymbolId argmax = 0; // first symbol attaining max_abs_disc, in id order
    N zero_sum_residual{};
    std::vector<N> snapshot;
};

template <class N>
struct TraceOptions {
    std::function<void(TraceRow<N>&&)> on_row;
    std::int64_t snapshot_every = 0; // 0 = never, J = rows with k % J == 0 (and k = 1)
};

namespace detail {

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

} // namespace detail

inline constexpr const char* kTraceCsvHeader = "k,chosen,max_abs_D,argmax,zero_sum_residual";

template <class N>
void write_trace_csv_row(std::ostream& os, const TraceRow<N>& row, const SymbolTable& syms) {
    os << row.k << ',' << detail::csv_quote(syms.label(row.chosen)) << ','
       << NumIO<N>::format(row.max_abs_disc) << ',' << detail::csv_quote(syms.label(row.argmax))
       << ',' << NumIO<N>::format(row.zero_sum_residual) << '\n';
}

template <class N>
void write_trace_csv(std::ostream& os, const std::vector<TraceRow<N>>& rows, const SymbolTable& syms) {
    os << kTraceCsvHeader << '\n';
    for (const auto& row : rows) write_trace_csv_row(os, row, syms);
}

// Textual trace row; numeric fields stay unparsed so the caller can pick the
// numeric mode.
struct TraceCsvRow {
    std::int64_t k;
    std::string chosen;
    std::string max_abs_disc;
    std::string argmax;
    std::string zero_sum_residual;
};

inline std::vector<TraceCsvRow> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw parse_error("empty trace CSV");
    if (line == std::string(kTraceCsvHeader) + "\r") line.pop_back();
    if (line != kTraceCsvHeader)
        throw parse_error("bad trace CSV header: '" + line + "'");
    std::vector<TraceCsvRow> rows;
    std::int64_t prev_k = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::csv_split(line);
        if (fields.size() != 5) throw parse_error("trace CSV row with " + std::to_string(fields.size()) + " fields");
        TraceCsvRow row;
        try {
            row.k = std::stoll(fields[0]);
        } catch (const std::exception&) {
            throw parse_error("bad step index in trace CSV: '" + fields[0] + "'");
        }
        if (row.k <= prev_k) throw parse_error("trace CSV rows not strictly increasing in k");
        prev_k = row.k;
        row.chosen = std::move(fields[1]);
        row.max_abs_disc = std::move(fields[2]);
        row.argmax = std::move(fields[3]);
        row.zero_sum_residual = std::move(fields[4]);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace ldseq
