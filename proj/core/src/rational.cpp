#include "kyle/rational.hpp"

#include <cmath>
#include <sstream>

namespace kyle {

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw DomainError("cannot convert non-finite double to rational");
  return Rational(x);
}

Rational parse_rational(const std::string& s) {
  std::string t;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
  }
  if (t.empty()) throw ParseError("empty rational literal");
  auto slash = t.find('/');
  try {
    if (slash == std::string::npos) {
      return Rational(boost::multiprecision::mpz_int(t));
    }
    std::string num = t.substr(0, slash);
    std::string den = t.substr(slash + 1);
    if (num.empty() || den.empty()) throw ParseError("malformed rational '" + s + "'");
    boost::multiprecision::mpz_int p(num), q(den);
    if (q == 0) throw ParseError("zero denominator in rational '" + s + "'");
    return Rational(p, q);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("malformed rational '" + s + "'");
  }
}

std::string format_rational(const Rational& r) {
  std::ostringstream os;
  if (denominator(r) == 1) {
    os << numerator(r);
  } else {
    os << numerator(r) << '/' << denominator(r);
  }
  return os.str();
}

}  // namespace kyle
