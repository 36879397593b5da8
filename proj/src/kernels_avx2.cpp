// AVX2 lanes of the kernels in kernels_core.hpp. Same constants, same FMA
// chains, branches rendered as blends; per-element results are bit-identical
// to the scalar reference, which the equivalence tests assert. Tails shorter
// than a vector fall through to the scalar core.

#include "frugal/kernels.hpp"

#if defined(FRUGAL_HAVE_AVX2)

#include <immintrin.h>

#include "kernels_core.hpp"

namespace frugal::kernels {

bool avx2_compiled() { return true; }

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

using core::kLn2Hi;
using core::kLn2Lo;
using core::kLog2E;
using core::kSqrt1_2;
using core::kSqrt2;
using core::kSqrt2Pi;

inline __m256d splat(double v) { return _mm256_set1_pd(v); }

// double(e) for signed |e| < 2^51 held in epi64 lanes: bias by 2^52 + 2^51 in
// the integer domain so the mantissa field absorbs negative values without
// borrowing from the exponent bits.
inline __m256d epi64_to_pd(__m256i e) {
  const __m256i biased = _mm256_add_epi64(e, _mm256_set1_epi64x(0x4338000000000000LL));
  return _mm256_sub_pd(_mm256_castsi256_pd(biased), splat(6755399441055744.0));
}

inline __m256d exp_core(__m256d x) {
  const __m256d lo = splat(-708.0);
  __m256d xc = _mm256_max_pd(x, lo);
  xc = _mm256_min_pd(xc, splat(709.0));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(xc, splat(kLog2E)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fmadd_pd(k, splat(-kLn2Hi), xc);
  r = _mm256_fmadd_pd(k, splat(-kLn2Lo), r);
  __m256d p = splat(1.6059043836821613e-10);
  p = _mm256_fmadd_pd(p, r, splat(2.08767569878681e-09));
  p = _mm256_fmadd_pd(p, r, splat(2.505210838544172e-08));
  p = _mm256_fmadd_pd(p, r, splat(2.7557319223985893e-07));
  p = _mm256_fmadd_pd(p, r, splat(2.755731922398589e-06));
  p = _mm256_fmadd_pd(p, r, splat(2.48015873015873e-05));
  p = _mm256_fmadd_pd(p, r, splat(1.984126984126984e-04));
  p = _mm256_fmadd_pd(p, r, splat(1.3888888888888889e-03));
  p = _mm256_fmadd_pd(p, r, splat(8.333333333333333e-03));
  p = _mm256_fmadd_pd(p, r, splat(4.1666666666666664e-02));
  p = _mm256_fmadd_pd(p, r, splat(1.6666666666666666e-01));
  p = _mm256_fmadd_pd(p, r, splat(5.0e-01));
  p = _mm256_fmadd_pd(p, r, splat(1.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0));
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  const __m256i k64 = _mm256_cvtepi32_epi64(k32);
  const __m256i ebits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  const __m256d res = _mm256_mul_pd(p, _mm256_castsi256_pd(ebits));
  const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  return _mm256_blendv_pd(res, _mm256_setzero_pd(), under);
}

inline __m256d log_core(__m256d x) {
  const __m256d tiny = splat(2.2250738585072014e-308);
  const __m256d sub = _mm256_cmp_pd(x, tiny, _CMP_LT_OQ);
  const __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, splat(0x1p54)), sub);
  const __m256i bits = _mm256_castpd_si256(xs);
  __m256i e = _mm256_sub_epi64(
      _mm256_and_si256(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(0x7FF)),
      _mm256_set1_epi64x(1023));
  e = _mm256_sub_epi64(
      e, _mm256_and_si256(_mm256_castpd_si256(sub), _mm256_set1_epi64x(54)));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FF0000000000000LL)));
  const __m256d big = _mm256_cmp_pd(m, splat(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, splat(0.5)), big);
  e = _mm256_add_epi64(e, _mm256_and_si256(_mm256_castpd_si256(big), _mm256_set1_epi64x(1)));
  const __m256d one = splat(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d t = splat(2.0 / 23.0);
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 21.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 19.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 17.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 15.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 13.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 11.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 9.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 7.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 5.0));
  t = _mm256_fmadd_pd(t, s2, splat(2.0 / 3.0));
  const __m256d logm = _mm256_mul_pd(s, _mm256_fmadd_pd(t, s2, splat(2.0)));
  const __m256d ed = epi64_to_pd(e);
  return _mm256_fmadd_pd(ed, splat(kLn2Lo), _mm256_fmadd_pd(ed, splat(kLn2Hi), logm));
}

inline __m256d erf_small(__m256d z) {
  const __m256d t = _mm256_mul_pd(z, z);
  __m256d top = splat(0.771058495001320e-04);
  top = _mm256_fmadd_pd(top, t, splat(-0.133733772997339e-02));
  top = _mm256_fmadd_pd(top, t, splat(0.323076579225834e-01));
  top = _mm256_fmadd_pd(top, t, splat(0.479137145607681e-01));
  top = _mm256_fmadd_pd(top, t, splat(0.128379167095513e+00));
  top = _mm256_add_pd(top, splat(1.0));
  __m256d bot = splat(0.301048631703895e-02);
  bot = _mm256_fmadd_pd(bot, t, splat(0.538971687740286e-01));
  bot = _mm256_fmadd_pd(bot, t, splat(0.375795757275549e+00));
  bot = _mm256_fmadd_pd(bot, t, splat(1.0));
  return _mm256_mul_pd(z, _mm256_div_pd(top, bot));
}

inline __m256d erfc_pos(__m256d a) {
  const __m256d ea = exp_core(_mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), a), a));

  // mid region: 0.5 < a <= 4
  __m256d top = splat(-1.36864857382717e-07);
  top = _mm256_fmadd_pd(top, a, splat(5.64195517478974e-01));
  top = _mm256_fmadd_pd(top, a, splat(7.21175825088309e+00));
  top = _mm256_fmadd_pd(top, a, splat(4.31622272220567e+01));
  top = _mm256_fmadd_pd(top, a, splat(1.52989285046940e+02));
  top = _mm256_fmadd_pd(top, a, splat(3.39320816734344e+02));
  top = _mm256_fmadd_pd(top, a, splat(4.51918953711873e+02));
  top = _mm256_fmadd_pd(top, a, splat(3.00459261020162e+02));
  __m256d bot = splat(1.0);
  bot = _mm256_fmadd_pd(bot, a, splat(1.27827273196294e+01));
  bot = _mm256_fmadd_pd(bot, a, splat(7.70001529352295e+01));
  bot = _mm256_fmadd_pd(bot, a, splat(2.77585444743988e+02));
  bot = _mm256_fmadd_pd(bot, a, splat(6.38980264465631e+02));
  bot = _mm256_fmadd_pd(bot, a, splat(9.31354094850610e+02));
  bot = _mm256_fmadd_pd(bot, a, splat(7.90950925327898e+02));
  bot = _mm256_fmadd_pd(bot, a, splat(3.00459260956983e+02));
  const __m256d mid = _mm256_mul_pd(ea, _mm256_div_pd(top, bot));

  // far region: a > 4
  const __m256d t = _mm256_div_pd(splat(1.0), _mm256_mul_pd(a, a));
  __m256d ftop = splat(2.10144126479064e+00);
  ftop = _mm256_fmadd_pd(ftop, t, splat(2.62370141675169e+01));
  ftop = _mm256_fmadd_pd(ftop, t, splat(2.13688200555087e+01));
  ftop = _mm256_fmadd_pd(ftop, t, splat(4.65807828718470e+00));
  ftop = _mm256_fmadd_pd(ftop, t, splat(2.82094791773523e-01));
  __m256d fbot = splat(9.41537750555460e+01);
  fbot = _mm256_fmadd_pd(fbot, t, splat(1.87114811799590e+02));
  fbot = _mm256_fmadd_pd(fbot, t, splat(9.90191814623914e+01));
  fbot = _mm256_fmadd_pd(fbot, t, splat(1.80124575948747e+01));
  fbot = _mm256_fmadd_pd(fbot, t, splat(1.0));
  const __m256d inner =
      _mm256_sub_pd(splat(0.564189583547756), _mm256_mul_pd(t, _mm256_div_pd(ftop, fbot)));
  const __m256d far = _mm256_div_pd(_mm256_mul_pd(ea, inner), a);

  const __m256d use_mid = _mm256_cmp_pd(a, splat(4.0), _CMP_LE_OQ);
  __m256d res = _mm256_blendv_pd(far, mid, use_mid);
  const __m256d huge = _mm256_cmp_pd(a, splat(26.5), _CMP_GT_OQ);
  return _mm256_blendv_pd(res, _mm256_setzero_pd(), huge);
}

inline __m256d phi_core(__m256d x) {
  const __m256d z = _mm256_mul_pd(x, splat(kSqrt1_2));
  const __m256d az = _mm256_andnot_pd(splat(-0.0), z);
  const __m256d small = _mm256_fmadd_pd(splat(0.5), erf_small(z), splat(0.5));
  const __m256d ec = erfc_pos(az);
  const __m256d upper = _mm256_sub_pd(splat(1.0), _mm256_mul_pd(splat(0.5), ec));
  const __m256d lower = _mm256_mul_pd(splat(0.5), ec);
  const __m256d pos = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d big = _mm256_blendv_pd(lower, upper, pos);
  const __m256d use_small = _mm256_cmp_pd(az, splat(0.5), _CMP_LE_OQ);
  return _mm256_blendv_pd(big, small, use_small);
}

inline __m256d phi_inv_core(__m256d p) {
  const __m256d half = splat(0.5);
  const __m256d one = splat(1.0);

  // central region
  const __m256d q = _mm256_sub_pd(p, half);
  const __m256d r = _mm256_mul_pd(q, q);
  __m256d num = splat(-3.969683028665376e+01);
  num = _mm256_fmadd_pd(num, r, splat(2.209460984245205e+02));
  num = _mm256_fmadd_pd(num, r, splat(-2.759285104469687e+02));
  num = _mm256_fmadd_pd(num, r, splat(1.383577518672690e+02));
  num = _mm256_fmadd_pd(num, r, splat(-3.066479806614716e+01));
  num = _mm256_fmadd_pd(num, r, splat(2.506628277459239e+00));
  __m256d den = splat(-5.447609879822406e+01);
  den = _mm256_fmadd_pd(den, r, splat(1.615858368580409e+02));
  den = _mm256_fmadd_pd(den, r, splat(-1.556989798598866e+02));
  den = _mm256_fmadd_pd(den, r, splat(6.680131188771972e+01));
  den = _mm256_fmadd_pd(den, r, splat(-1.328068155288572e+01));
  den = _mm256_fmadd_pd(den, r, splat(1.0));
  const __m256d central = _mm256_div_pd(_mm256_mul_pd(q, num), den);

  // tails
  const __m256d pt = _mm256_min_pd(p, _mm256_sub_pd(one, p));
  const __m256d qt =
      _mm256_sqrt_pd(_mm256_mul_pd(splat(-2.0), log_core(pt)));
  __m256d tnum = splat(-7.784894002430293e-03);
  tnum = _mm256_fmadd_pd(tnum, qt, splat(-3.223964580411365e-01));
  tnum = _mm256_fmadd_pd(tnum, qt, splat(-2.400758277161838e+00));
  tnum = _mm256_fmadd_pd(tnum, qt, splat(-2.549732539343734e+00));
  tnum = _mm256_fmadd_pd(tnum, qt, splat(4.374664141464968e+00));
  tnum = _mm256_fmadd_pd(tnum, qt, splat(2.938163982698783e+00));
  __m256d tden = splat(7.784695709041462e-03);
  tden = _mm256_fmadd_pd(tden, qt, splat(3.224671290700398e-01));
  tden = _mm256_fmadd_pd(tden, qt, splat(2.445134137142996e+00));
  tden = _mm256_fmadd_pd(tden, qt, splat(3.754408661907416e+00));
  tden = _mm256_fmadd_pd(tden, qt, splat(1.0));
  __m256d tail = _mm256_div_pd(tnum, tden);
  const __m256d lower_tail = _mm256_cmp_pd(p, half, _CMP_LT_OQ);
  tail = _mm256_blendv_pd(_mm256_sub_pd(_mm256_setzero_pd(), tail), tail, lower_tail);

  const __m256d ge_lo = _mm256_cmp_pd(p, splat(0.02425), _CMP_GE_OQ);
  const __m256d le_hi = _mm256_cmp_pd(p, splat(1.0 - 0.02425), _CMP_LE_OQ);
  const __m256d use_central = _mm256_and_pd(ge_lo, le_hi);
  __m256d x = _mm256_blendv_pd(tail, central, use_central);

  // one Halley step against phi_core
  const __m256d e = _mm256_sub_pd(phi_core(x), p);
  const __m256d u = _mm256_mul_pd(
      _mm256_mul_pd(e, splat(kSqrt2Pi)),
      exp_core(_mm256_mul_pd(splat(0.5), _mm256_mul_pd(x, x))));
  const __m256d xr = _mm256_sub_pd(
      x, _mm256_div_pd(u, _mm256_fmadd_pd(_mm256_mul_pd(half, x), u, one)));
  const __m256d ax = _mm256_andnot_pd(splat(-0.0), x);
  const __m256d refine = _mm256_cmp_pd(ax, splat(37.0), _CMP_LT_OQ);
  return _mm256_blendv_pd(x, xr, refine);
}

}  // namespace

void phi_batch_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, phi_core(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = core::phi_core(x[i]);
}

void phi_inv_batch_avx2(const double* p, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, phi_inv_core(_mm256_loadu_pd(p + i)));
  }
  for (; i < n; ++i) out[i] = core::phi_inv_core(p[i]);
}

}  // namespace frugal::kernels

#endif  // FRUGAL_HAVE_AVX2
