#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <stdexcept>
#include <string>

namespace kyle {

/// Exact rational scalar used for all probabilities, values and prices.
/// Floating point appears only inside iterative solver loops.
using Rational = boost::multiprecision::mpq_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Converts spec-side exact data into the evaluation scalar.
template <class S>
S scalar_cast(const Rational& r);
template <>
inline Rational scalar_cast<Rational>(const Rational& r) {
  return r;
}
template <>
inline double scalar_cast<double>(const Rational& r) {
  return to_double(r);
}

/// Exact conversion; every finite double is a dyadic rational.
Rational rational_from_double(double x);

/// Parses "p/q" or "p" (q > 0 after normalisation). Throws ParseError.
Rational parse_rational(const std::string& s);

/// Canonical lowest-terms string: "p" when the denominator is 1, else "p/q".
std::string format_rational(const Rational& r);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnreachedFlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompletePricingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResourceCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kyle
