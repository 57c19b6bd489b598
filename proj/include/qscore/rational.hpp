#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace qscore {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses "a/b", "a", or a finite decimal such as "0.20" into an exact
// rational. Throws ParseError on malformed input or a zero denominator.
Rational parse_rational(const std::string& text);

// Renders as "p/q" (or just "p" when q == 1).
std::string format_fraction(const Rational& r);

// Fixed-point decimal approximation with `digits` places, round half away
// from zero. Used for human-facing output next to the exact fraction.
std::string format_decimal(const Rational& r, int digits = 6);

// |a - b| <= tol, with tol given as a rational (e.g. 5e-5 == 1/20000).
bool within(const Rational& a, const Rational& b, const Rational& tol);

BigInt factorial(unsigned n);
BigInt pow2(unsigned n);

}  // namespace qscore
