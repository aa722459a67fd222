#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <ldseq/errors.hpp>

namespace ldseq {

// Exact arbitrary-precision rational. GMP keeps values canonical (lowest
// terms, positive denominator) after every operation, so equality and
// ordering are the true rational ones.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

enum class Ordering { lt, eq, gt };

inline Ordering compare(const Rational& a, const Rational& b) {
    const int c = a.compare(b);
    return c < 0 ? Ordering::lt : (c > 0 ? Ordering::gt : Ordering::eq);
}

// Raw IEEE comparison, no epsilon. NaN is refused rather than silently
// ordered; every strict inequality in the selection rule goes through here.
inline Ordering compare(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) throw numeric_error("cannot order NaN");
    return a < b ? Ordering::lt : (a > b ? Ordering::gt : Ordering::eq);
}

template <class N>
inline constexpr bool is_exact_v = false;
template <>
inline constexpr bool is_exact_v<Rational> = true;

template <class N>
N abs_val(const N& x) {
    return x < N(0) ? N(-x) : x;
}

inline BigInt floor_big(const Rational& q) {
    BigInt n = numerator(q), d = denominator(q); // d > 0, canonical
    BigInt quo = n / d;
    if (n % d != 0 && n < 0) --quo;
    return quo;
}

inline BigInt ceil_big(const Rational& q) {
    BigInt n = numerator(q), d = denominator(q);
    BigInt quo = n / d;
    if (n % d != 0 && n > 0) ++quo;
    return quo;
}

inline std::int64_t to_int64(const BigInt& z) {
    if (z > BigInt(INT64_MAX) || z < BigInt(INT64_MIN))
        throw limit_error("value out of int64 range: " + z.str());
    return z.convert_to<std::int64_t>();
}

namespace detail {
inline bool is_decimal_integer(std::string_view s) {
    if (!s.empty() && s.front() == '-') s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}
} // namespace detail

// Text form "a/b", with "a" shorthand for a/1. No whitespace, base 10 only.
inline Rational parse_rational(std::string_view text) {
    const auto fail = [&]() -> Rational {
        throw parse_error("bad rational literal: '" + std::string(text) + "'");
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        if (!detail::is_decimal_integer(text)) return fail();
        return Rational(BigInt(std::string(text)));
    }
    const auto num = text.substr(0, slash);
    const auto den = text.substr(slash + 1);
    if (!detail::is_decimal_integer(num) || !detail::is_decimal_integer(den)) return fail();
    BigInt d{std::string(den)};
    if (d <= 0) return fail();
    return Rational(BigInt(std::string(num)), d);
}

inline std::string format_rational(const Rational& q) {
    return q.str(); // canonical "a/b", or "a" when the denominator is 1
}

inline double parse_double(std::string_view text) {
    double v = 0;
    const auto* first = text.data();
    const auto* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw parse_error("bad float literal: '" + std::string(text) + "'");
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v); // shortest round-trip
    return std::string(buf, ptr);
}

// Uniform parse/format over the two numeric modes.
template <class N>
struct NumIO;

template <>
struct NumIO<Rational> {
    static constexpr const char* mode_name = "exact";
    static Rational parse(std::string_view s) { return parse_rational(s); }
    static std::string format(const Rational& q) { return format_rational(q); }
};

template <>
struct NumIO<double> {
    static constexpr const char* mode_name = "float";
    static double parse(std::string_view s) { return parse_double(s); }
    static std::string format(double v) { return format_double(v); }
};

} // namespace ldseq
