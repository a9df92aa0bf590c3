#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace loopsum {

/// Exact rational number, always kept in lowest terms with a positive
/// denominator.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

/// Base class for all analysis errors. `stage` names the pipeline step
/// that raised it so drivers can print stage-labelled diagnostics.
class Error : public std::runtime_error {
public:
    Error(std::string stage, const std::string &what)
        : std::runtime_error(what), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

private:
    std::string stage_;
};

inline Integer numerator(const Rational &q) { return boost::multiprecision::numerator(q); }
inline Integer denominator(const Rational &q) { return boost::multiprecision::denominator(q); }

/// n/d with any sign on d (the boost constructor rejects negative denominators).
inline Rational make_rational(const Integer &n, const Integer &d) {
    if (d == 0) throw Error("arith", "zero denominator");
    return d < 0 ? Rational(Integer(-n), Integer(-d)) : Rational(n, d);
}

inline bool is_integer(const Rational &q) { return denominator(q) == 1; }

inline Integer floor_int(const Rational &q) {
    Integer n = numerator(q), d = denominator(q);
    Integer r = n / d;
    if (n < 0 && r * d != n) --r;
    return r;
}

inline Integer ceil_int(const Rational &q) { return -floor_int(-q); }

/// "num/den" or "num" when the denominator is one.
inline std::string to_string(const Rational &q) {
    if (is_integer(q)) return numerator(q).str();
    return numerator(q).str() + "/" + denominator(q).str();
}

/// Parses "num", "-num" or "num/den".
inline Rational parse_rational(const std::string &s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(Integer(s));
        Integer n(s.substr(0, slash)), d(s.substr(slash + 1));
        return make_rational(n, d);
    } catch (const std::exception &) {
        throw Error("parse", "malformed rational '" + s + "'");
    }
}

} // namespace loopsum
