#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include <string>
#include <string_view>

#include "dispersive/errors.hpp"

namespace dispersive {

/// Arbitrary precision rational, always normalized (lowest terms, positive
/// denominator) by the underlying backend.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational rat(long long num, long long den = 1) {
    if (den == 0) throw ArgumentError("rational with zero denominator");
    return Rational(BigInt(num), BigInt(den));
}

inline std::string numerator_string(const Rational& r) {
    return boost::multiprecision::numerator(r).str();
}

inline std::string denominator_string(const Rational& r) {
    return boost::multiprecision::denominator(r).str();
}

/// "p/q", or just "p" for integers.
inline std::string to_string(const Rational& r) {
    auto d = boost::multiprecision::denominator(r);
    if (d == 1) return numerator_string(r);
    return numerator_string(r) + "/" + d.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parses "p", "-p" or "p/q".
inline Rational parse_rational(std::string_view text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string_view::npos) return Rational(BigInt(std::string(text)));
        BigInt num(std::string(text.substr(0, slash)));
        BigInt den(std::string(text.substr(slash + 1)));
        if (den == 0) throw ArgumentError("rational with zero denominator: " + std::string(text));
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw ArgumentError("not a rational literal: " + std::string(text));
    }
}

inline nlohmann::json rational_to_json(const Rational& r) {
    return {{"num", numerator_string(r)}, {"den", denominator_string(r)}};
}

inline Rational rational_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("num") || !j.contains("den"))
        throw ArgumentError("rational JSON needs \"num\" and \"den\"");
    return parse_rational(j.at("num").get<std::string>() + "/" + j.at("den").get<std::string>());
}

}  // namespace dispersive
