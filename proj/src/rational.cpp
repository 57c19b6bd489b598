#include "qscore/rational.hpp"

#include <cctype>

#include "qscore/error.hpp"

namespace qscore {

namespace {

bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const auto bad = [&] {
    throw ParseError("not a rational number: '" + text + "'");
  };
  if (text.empty()) bad();

  if (auto slash = text.find('/'); slash != std::string::npos) {
    std::string num = text.substr(0, slash), den = text.substr(slash + 1);
    if (!is_integer_token(num) || !is_integer_token(den)) bad();
    BigInt d(den);
    if (d == 0) throw ParseError("zero denominator: '" + text + "'");
    return Rational(BigInt(num), d);
  }
  if (auto dot = text.find('.'); dot != std::string::npos) {
    std::string ip = text.substr(0, dot), fp = text.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (neg || (!ip.empty() && ip[0] == '+')) ip = ip.substr(1);
    if (ip.empty() && fp.empty()) bad();
    for (char c : ip + fp)
      if (!std::isdigit(static_cast<unsigned char>(c))) bad();
    BigInt num = ip.empty() ? BigInt(0) : BigInt(ip);
    BigInt den = 1;
    for (char c : fp) {
      num = num * 10 + (c - '0');
      den *= 10;
    }
    Rational r(num, den);
    return neg ? Rational(-r) : r;
  }
  if (!is_integer_token(text)) bad();
  return Rational(BigInt(text));
}

std::string format_fraction(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

std::string format_decimal(const Rational& r, int digits) {
  BigInt num = numerator(r), den = denominator(r);
  bool neg = num < 0;
  if (neg) num = -num;
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  // round half away from zero
  BigInt scaled = (num * scale * 2 + den) / (den * 2);
  BigInt ip = scaled / scale, fp = scaled % scale;
  std::string frac = fp.str();
  frac.insert(frac.begin(), digits - static_cast<int>(frac.size()), '0');
  std::string out = ip.str();
  if (digits > 0) out += "." + frac;
  return neg && scaled != 0 ? "-" + out : out;
}

bool within(const Rational& a, const Rational& b, const Rational& tol) {
  Rational diff = a - b;
  if (diff < 0) diff = -diff;
  return diff <= tol;
}

BigInt factorial(unsigned n) {
  BigInt f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

BigInt pow2(unsigned n) {
  return BigInt(1) << n;
}

}  // namespace qscore
