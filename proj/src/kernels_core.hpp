#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// Scalar reference kernels. Every operation here is mirrored one-to-one by
// the AVX2 lane code in kernels_avx2.cpp: identical constants, identical FMA
// chains, branches that correspond exactly to blends. Keep the two files in
// sync — the equivalence suite asserts bit equality across the full input
// range.
namespace frugal::kernels::core {

inline constexpr double kLog2E = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kSqrt1_2 = 0.70710678118654752440;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kSqrt2 = 1.41421356237309504880;

// e^x for x in [-708, 709]; returns 0 below, saturates above. Range
// reduction against ln2 split hi/lo, degree-13 Taylor core, exponent
// reassembled through the bit pattern.
inline double exp_core(double x) {
  double xc = x < -708.0 ? -708.0 : x;
  xc = xc > 709.0 ? 709.0 : xc;
  const double k = std::nearbyint(xc * kLog2E);
  double r = std::fma(k, -kLn2Hi, xc);
  r = std::fma(k, -kLn2Lo, r);
  double p = 1.6059043836821613e-10;  // 1/13!
  p = std::fma(p, r, 2.08767569878681e-09);    // 1/12!
  p = std::fma(p, r, 2.505210838544172e-08);   // 1/11!
  p = std::fma(p, r, 2.7557319223985893e-07);  // 1/10!
  p = std::fma(p, r, 2.755731922398589e-06);   // 1/9!
  p = std::fma(p, r, 2.48015873015873e-05);    // 1/8!
  p = std::fma(p, r, 1.984126984126984e-04);   // 1/7!
  p = std::fma(p, r, 1.3888888888888889e-03);  // 1/6!
  p = std::fma(p, r, 8.333333333333333e-03);   // 1/5!
  p = std::fma(p, r, 4.1666666666666664e-02);  // 1/4!
  p = std::fma(p, r, 1.6666666666666666e-01);  // 1/3!
  p = std::fma(p, r, 5.0e-01);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  const auto ik = static_cast<std::int64_t>(k);
  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ik + 1023) << 52);
  const double res = p * scale;
  return x < -708.0 ? 0.0 : res;
}

// Natural log for finite x > 0 (subnormals included).
inline double log_core(double x) {
  const bool sub = x < 2.2250738585072014e-308;
  const double xs = sub ? x * 0x1p54 : x;
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(xs);
  std::int64_t e = static_cast<std::int64_t>((bits >> 52) & 0x7FF) - 1023 - (sub ? 54 : 0);
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) | 0x3FF0000000000000ULL);
  if (m > kSqrt2) {
    m *= 0.5;
    e += 1;
  }
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double t = 2.0 / 23.0;
  t = std::fma(t, s2, 2.0 / 21.0);
  t = std::fma(t, s2, 2.0 / 19.0);
  t = std::fma(t, s2, 2.0 / 17.0);
  t = std::fma(t, s2, 2.0 / 15.0);
  t = std::fma(t, s2, 2.0 / 13.0);
  t = std::fma(t, s2, 2.0 / 11.0);
  t = std::fma(t, s2, 2.0 / 9.0);
  t = std::fma(t, s2, 2.0 / 7.0);
  t = std::fma(t, s2, 2.0 / 5.0);
  t = std::fma(t, s2, 2.0 / 3.0);
  const double logm = s * std::fma(t, s2, 2.0);
  const double ed = static_cast<double>(e);
  return std::fma(ed, kLn2Lo, std::fma(ed, kLn2Hi, logm));
}

// erf(z) for |z| <= 0.5 (rational approximation, relative error ~1e-16).
inline double erf_small(double z) {
  const double t = z * z;
  double top = 0.771058495001320e-04;
  top = std::fma(top, t, -0.133733772997339e-02);
  top = std::fma(top, t, 0.323076579225834e-01);
  top = std::fma(top, t, 0.479137145607681e-01);
  top = std::fma(top, t, 0.128379167095513e+00);
  top = top + 1.0;
  double bot = 0.301048631703895e-02;
  bot = std::fma(bot, t, 0.538971687740286e-01);
  bot = std::fma(bot, t, 0.375795757275549e+00);
  bot = std::fma(bot, t, 1.0);
  return z * (top / bot);
}

// erfc(a) for a > 0.5; underflows to 0 past 26.5.
inline double erfc_pos(double a) {
  const double ea = exp_core(-a * a);
  double res;
  if (a <= 4.0) {
    double top = -1.36864857382717e-07;
    top = std::fma(top, a, 5.64195517478974e-01);
    top = std::fma(top, a, 7.21175825088309e+00);
    top = std::fma(top, a, 4.31622272220567e+01);
    top = std::fma(top, a, 1.52989285046940e+02);
    top = std::fma(top, a, 3.39320816734344e+02);
    top = std::fma(top, a, 4.51918953711873e+02);
    top = std::fma(top, a, 3.00459261020162e+02);
    double bot = 1.0;
    bot = std::fma(bot, a, 1.27827273196294e+01);
    bot = std::fma(bot, a, 7.70001529352295e+01);
    bot = std::fma(bot, a, 2.77585444743988e+02);
    bot = std::fma(bot, a, 6.38980264465631e+02);
    bot = std::fma(bot, a, 9.31354094850610e+02);
    bot = std::fma(bot, a, 7.90950925327898e+02);
    bot = std::fma(bot, a, 3.00459260956983e+02);
    res = ea * (top / bot);
  } else {
    const double t = 1.0 / (a * a);
    double top = 2.10144126479064e+00;
    top = std::fma(top, t, 2.62370141675169e+01);
    top = std::fma(top, t, 2.13688200555087e+01);
    top = std::fma(top, t, 4.65807828718470e+00);
    top = std::fma(top, t, 2.82094791773523e-01);
    double bot = 9.41537750555460e+01;
    bot = std::fma(bot, t, 1.87114811799590e+02);
    bot = std::fma(bot, t, 9.90191814623914e+01);
    bot = std::fma(bot, t, 1.80124575948747e+01);
    bot = std::fma(bot, t, 1.0);
    res = ea * (0.564189583547756 - t * (top / bot)) / a;
  }
  return a > 26.5 ? 0.0 : res;
}

inline double phi_core(double x) {
  const double z = x * kSqrt1_2;
  const double az = z < 0.0 ? -z : z;
  if (az <= 0.5) {
    return std::fma(0.5, erf_small(z), 0.5);
  }
  const double ec = erfc_pos(az);
  return z > 0.0 ? 1.0 - 0.5 * ec : 0.5 * ec;
}

// Inverse normal CDF: rational initial guess (relative error ~1.2e-9)
// polished by one Halley step against phi_core, giving results consistent
// with phi_core to machine precision. p must lie strictly inside (0,1).
inline double phi_inv_core(double p) {
  constexpr double kPLow = 0.02425;
  double x;
  if (p >= kPLow && p <= 1.0 - kPLow) {
    const double q = p - 0.5;
    const double r = q * q;
    double num = -3.969683028665376e+01;
    num = std::fma(num, r, 2.209460984245205e+02);
    num = std::fma(num, r, -2.759285104469687e+02);
    num = std::fma(num, r, 1.383577518672690e+02);
    num = std::fma(num, r, -3.066479806614716e+01);
    num = std::fma(num, r, 2.506628277459239e+00);
    double den = -5.447609879822406e+01;
    den = std::fma(den, r, 1.615858368580409e+02);
    den = std::fma(den, r, -1.556989798598866e+02);
    den = std::fma(den, r, 6.680131188771972e+01);
    den = std::fma(den, r, -1.328068155288572e+01);
    den = std::fma(den, r, 1.0);
    x = q * num / den;
  } else {
    const double pt = p < 0.5 ? p : 1.0 - p;
    const double q = std::sqrt(-2.0 * log_core(pt));
    double num = -7.784894002430293e-03;
    num = std::fma(num, q, -3.223964580411365e-01);
    num = std::fma(num, q, -2.400758277161838e+00);
    num = std::fma(num, q, -2.549732539343734e+00);
    num = std::fma(num, q, 4.374664141464968e+00);
    num = std::fma(num, q, 2.938163982698783e+00);
    double den = 7.784695709041462e-03;
    den = std::fma(den, q, 3.224671290700398e-01);
    den = std::fma(den, q, 2.445134137142996e+00);
    den = std::fma(den, q, 3.754408661907416e+00);
    den = std::fma(den, q, 1.0);
    x = num / den;
    x = p < 0.5 ? x : -x;
  }
  if (x > -37.0 && x < 37.0) {
    const double e = phi_core(x) - p;
    const double u = e * kSqrt2Pi * exp_core(0.5 * x * x);
    x = x - u / std::fma(0.5 * x, u, 1.0);
  }
  return x;
}

}  // namespace frugal::kernels::core
