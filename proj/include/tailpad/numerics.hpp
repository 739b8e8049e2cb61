#pragma once

// Exact-rational and certified fixed-point numerics.
//
// Every probability that ends up in a sampling table is a dyadic rational
// `mantissa / 2^frac_bits` obtained by truncating the true (typically
// transcendental) value toward zero. One-sided truncation is load-bearing:
// the sampler's distance-to-target analysis needs every stored mass to sit
// at or below the true mass, with the deficit absorbed by a designated
// label. All computations run on GMP integers/rationals; floating point is
// never consulted, so results are identical across platforms and there is
// no rounding-mode attack surface.
//
// The evaluation strategy is interval arithmetic at escalating precision:
// compute a rigorous enclosure [lo, hi] of the target value, and accept a
// truncation only when floor(lo * 2^ell) == floor(hi * 2^ell). Enclosures
// start with 32 guard bits and double on certification failure. Termination
// is guaranteed for every value this library truncates because e^{-x} is
// irrational for rational x != 0, so the target is never exactly on a grid
// point.

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tailpad/common.hpp"

namespace tailpad {

// Exact rational parameter as parsed from user input ("a/b"). Word-sized by
// contract; derived internal quantities use mpq_class directly.
struct RationalParam {
  std::int64_t num = 0;
  std::int64_t den = 1;

  mpq_class to_mpq() const {
    require_config(den > 0, "rational parameter must have positive denominator");
    mpq_class q(static_cast<long>(num), static_cast<long>(den));
    q.canonicalize();
    return q;
  }

  // Parses "a/b" or a bare integer "a". No decimal points: float syntax is
  // rejected so configuration stays exact.
  static RationalParam parse(const std::string& text) {
    auto bad = [&] { throw ParseError("expected rational 'a/b', got '" + text + "'"); };
    if (text.empty()) bad();
    std::size_t slash = text.find('/');
    auto parse_int = [&](const std::string& s) -> std::int64_t {
      if (s.empty() || s.find_first_not_of("0123456789-") != std::string::npos) bad();
      try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(s, &used);
        if (used != s.size()) bad();
        return v;
      } catch (const std::exception&) {
        bad();
      }
      return 0;  // unreachable
    };
    RationalParam r;
    if (slash == std::string::npos) {
      r.num = parse_int(text);
      r.den = 1;
    } else {
      r.num = parse_int(text.substr(0, slash));
      r.den = parse_int(text.substr(slash + 1));
      if (r.den <= 0) bad();
    }
    return r;
  }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// Dyadic probability: value = mantissa / 2^frac_bits, 0 <= mantissa <= 2^frac_bits.
struct FixedProb {
  mpz_class mantissa;
  unsigned frac_bits = 0;

  mpq_class value() const {
    mpz_class den = 1;
    den <<= frac_bits;
    return mpq_class(mantissa) / mpq_class(den);
  }
};

namespace num {

inline mpz_class pow2(unsigned long k) {
  mpz_class v = 1;
  v <<= k;
  return v;
}

inline mpz_class shr_floor(const mpz_class& a, unsigned long k) {
  mpz_class r;
  mpz_fdiv_q_2exp(r.get_mpz_t(), a.get_mpz_t(), k);
  return r;
}

inline mpz_class shr_ceil(const mpz_class& a, unsigned long k) {
  mpz_class r;
  mpz_cdiv_q_2exp(r.get_mpz_t(), a.get_mpz_t(), k);
  return r;
}

inline mpz_class div_floor(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline mpz_class div_ceil(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

// floor(q * 2^bits) for nonnegative rational q.
inline mpz_class dyadic_floor_mantissa(const mpq_class& q, unsigned long bits) {
  mpz_class num = q.get_num();
  num <<= bits;
  return div_floor(num, q.get_den());
}

// Smallest integer e >= 0 with 2^e >= v (v > 0). Exact.
inline unsigned long ceil_log2(const mpq_class& v) {
  check_internal(sgn(v) > 0, "ceil_log2: value must be positive");
  unsigned long e = 0;
  mpz_class scaled_den = v.get_den();
  while (scaled_den < v.get_num()) {
    scaled_den <<= 1;
    ++e;
  }
  return e;
}

// Rigorous enclosure [lo, hi] / 2^prec of a nonnegative real.
struct Interval {
  mpz_class lo, hi;

  mpq_class lo_q(unsigned long prec) const { return mpq_class(lo) / mpq_class(pow2(prec)); }
  mpq_class hi_q(unsigned long prec) const { return mpq_class(hi) / mpq_class(pow2(prec)); }
};

inline Interval iv_mul(const Interval& a, const Interval& b, unsigned long prec) {
  return {shr_floor(a.lo * b.lo, prec), shr_ceil(a.hi * b.hi, prec)};
}

// a / b with b.lo > 0; all endpoints nonnegative.
inline Interval iv_div(const Interval& a, const Interval& b, unsigned long prec) {
  check_internal(sgn(b.lo) > 0, "interval division by an interval touching zero");
  mpz_class lo = div_floor(a.lo << prec, b.hi);
  mpz_class hi = div_ceil(a.hi << prec, b.lo);
  return {lo, hi};
}

// a - b where the true difference is known nonnegative; lo clamps at 0.
inline Interval iv_sub_nonneg(const Interval& a, const Interval& b) {
  mpz_class lo = a.lo - b.hi;
  if (sgn(lo) < 0) lo = 0;
  return {lo, a.hi - b.lo};
}

inline Interval iv_add(const Interval& a, const Interval& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

// Exact scale by nonnegative rational a/b with directed rounding.
inline Interval iv_scale(const Interval& v, const mpq_class& s) {
  check_internal(sgn(s) >= 0, "iv_scale: nonnegative scale expected");
  return {div_floor(v.lo * s.get_num(), s.get_den()), div_ceil(v.hi * s.get_num(), s.get_den())};
}

inline Interval iv_const(const mpq_class& c, unsigned long prec) {
  mpz_class lo = dyadic_floor_mantissa(c, prec);
  mpz_class num = c.get_num();
  num <<= prec;
  mpz_class hi = div_ceil(num, c.get_den());
  return {lo, hi};
}

// Enclosure of e^{-x} for rational x >= 0 at the given precision.
//
// Range-reduce to y = x / 2^s <= 1/2, evaluate the alternating Taylor series
// of e^{-y} with directed rounding (the truncation bracket of an alternating
// series with decreasing terms is rigorous), then square s times. Width is
// not guaranteed tight at any fixed precision — callers escalate precision
// until their certification succeeds.
inline Interval exp_neg_interval(const mpq_class& x, unsigned long prec) {
  check_internal(sgn(x) >= 0, "exp_neg_interval: exponent must be nonnegative");
  const mpz_class kOne = pow2(prec);
  if (sgn(x) == 0) return {kOne, kOne};
  // If x >= prec then e^{-x} < 2^{-prec}: the whole value is below one ulp.
  if (x >= static_cast<long>(prec)) return {mpz_class(0), mpz_class(1)};

  // Smallest s >= 0 with x / 2^s <= 1/2, i.e. 2^s >= 2x.
  unsigned long s = ceil_log2(2 * x);
  // y = a / b exactly.
  mpz_class a = x.get_num();
  mpz_class b = x.get_den();
  b <<= s;

  // Alternating series sum_j (-y)^j / j! with interval term magnitudes.
  Interval sum{kOne, kOne};
  Interval term{kOne, kOne};
  bool positive = false;  // sign of term j = 1
  for (unsigned long j = 1;; ++j) {
    mpz_class denom = b * static_cast<unsigned long>(j);
    term.lo = div_floor(term.lo * a, denom);
    term.hi = div_ceil(term.hi * a, denom);
    if (positive) {
      sum.lo += term.lo;
      sum.hi += term.hi;
    } else {
      sum.lo -= term.hi;
      sum.hi -= term.lo;
    }
    positive = !positive;
    if (term.hi <= 1) break;
    check_internal(j < 4 * prec + 64, "exp series failed to converge");
  }
  // Remainder of the alternating series is bounded by the first omitted
  // term (<= 1 ulp here); fold it into the enclosure.
  sum.lo -= 2;
  sum.hi += 2;
  if (sgn(sum.lo) < 0) sum.lo = 0;
  if (sum.hi > kOne) sum.hi = kOne;

  while (s-- > 0) {
    sum.lo = shr_floor(sum.lo * sum.lo, prec);
    sum.hi = shr_ceil(sum.hi * sum.hi, prec);
    if (sum.hi > kOne) sum.hi = kOne;
  }
  return sum;
}

constexpr unsigned long kGuardBits = 32;
constexpr unsigned long kGuardBitsLimit = 1UL << 22;

// Truncates the value enclosed by `eval` toward zero at ell fractional bits,
// escalating precision until the floor is unambiguous.
inline mpz_class certified_floor(unsigned ell,
                                 const std::function<Interval(unsigned long)>& eval) {
  for (unsigned long g = kGuardBits;; g *= 2) {
    check_internal(g <= kGuardBitsLimit, "guard-bit budget exhausted in certified_floor");
    unsigned long prec = ell + g;
    Interval v = eval(prec);
    mpz_class flo = shr_floor(v.lo, prec - ell);
    mpz_class fhi = shr_floor(v.hi, prec - ell);
    if (flo == fhi) return flo;
  }
}

// Sign of (sum_i coef_i * e^{-expo_i}) - c, for rational coefficients and
// nonnegative rational exponents. Returns -1 or +1; callers only pose
// questions whose answer cannot be exactly zero (enforced by escalation
// cap — a genuinely zero quantity would be a caller bug).
inline int cmp_exp_lincomb(const std::vector<std::pair<mpq_class, mpq_class>>& terms,
                           const mpq_class& c) {
  // Fast path: all exponents zero makes the expression rational.
  bool all_zero = true;
  mpq_class exact = -c;
  for (const auto& [coef, expo] : terms) {
    if (sgn(expo) != 0) {
      all_zero = false;
      break;
    }
    exact += coef;
  }
  if (all_zero) {
    int s = sgn(exact);
    check_internal(s != 0, "cmp_exp_lincomb: exact tie in rational fast path");
    return s;
  }
  for (unsigned long prec = 64;; prec *= 2) {
    check_internal(prec <= (kGuardBitsLimit << 6), "cmp_exp_lincomb failed to separate");
    mpq_class lo = -c, hi = -c;
    for (const auto& [coef, expo] : terms) {
      Interval e = exp_neg_interval(expo, prec);
      mpq_class el = e.lo_q(prec), eh = e.hi_q(prec);
      if (sgn(coef) >= 0) {
        lo += coef * el;
        hi += coef * eh;
      } else {
        lo += coef * eh;
        hi += coef * el;
      }
    }
    if (sgn(lo) > 0) return 1;
    if (sgn(hi) < 0) return -1;
  }
}

// Smallest integer N >= 0 with e^{-q*N} <= bound (q > 0). Galloping plus
// binary search on a monotone predicate; every probe is certified.
inline std::uint64_t smallest_n_exp_leq(const mpq_class& q, const mpq_class& bound) {
  check_internal(sgn(q) > 0, "smallest_n_exp_leq: rate must be positive");
  require_config(sgn(bound) > 0, "threshold for exponential search must be positive");
  if (bound >= 1) return 0;
  auto holds = [&](std::uint64_t n) {
    return cmp_exp_lincomb({{mpq_class(1), q * mpq_class(static_cast<unsigned long>(n))}},
                           bound) < 0;
  };
  std::uint64_t hi = 1;
  while (!holds(hi)) {
    check_internal(hi < (1ULL << 62), "exponential search overflow");
    hi *= 2;
  }
  std::uint64_t lo = hi / 2;  // predicate known false at lo (or lo == 0)
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    (holds(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace num

// ---------------------------------------------------------------------------
// Public truncation oracles. All return floor(value * 2^ell) / 2^ell with
// 0 <= value - returned < 2^-ell.
// ---------------------------------------------------------------------------

// e^{-eps * t}.
inline FixedProb exp_neg(const mpq_class& eps, std::uint64_t t, unsigned ell) {
  require_config(sgn(eps) > 0, "exp_neg: eps must be positive");
  if (t == 0) return {num::pow2(ell), ell};
  mpq_class x = eps * mpq_class(static_cast<unsigned long>(t));
  return {num::certified_floor(ell, [&](unsigned long p) { return num::exp_neg_interval(x, p); }),
          ell};
}

inline FixedProb exp_neg(RationalParam eps, std::uint64_t t, unsigned ell) {
  return exp_neg(eps.to_mpq(), t, ell);
}

namespace num {

// Enclosure of the two-sided discrete-Laplace pmf (1-p)/(1+p) * p^{|t|},
// p = e^{-eps}.
inline Interval dlap_pmf_interval(const mpq_class& eps, std::uint64_t abs_t, unsigned long prec) {
  Interval p = exp_neg_interval(eps, prec);
  Interval one = iv_const(1, prec);
  Interval coef = iv_div(iv_sub_nonneg(one, p), iv_add(one, p), prec);
  if (abs_t == 0) return coef;
  Interval pt = exp_neg_interval(eps * mpq_class(static_cast<unsigned long>(abs_t)), prec);
  return iv_mul(coef, pt, prec);
}

// Enclosure of the geometric pmf over [0, u] (u absent = infinite support):
// (1-p) p^t / (1 - p^{1+u}), p = e^{-q}.
inline Interval geo_pmf_interval(const mpq_class& q, std::optional<std::uint64_t> u,
                                 std::uint64_t t, unsigned long prec) {
  Interval p = exp_neg_interval(q, prec);
  Interval one = iv_const(1, prec);
  Interval numer = iv_sub_nonneg(one, p);
  if (t > 0) {
    numer = iv_mul(numer, exp_neg_interval(q * mpq_class(static_cast<unsigned long>(t)), prec),
                   prec);
  }
  if (!u.has_value()) return numer;
  Interval ptop =
      exp_neg_interval(q * mpq_class(static_cast<unsigned long>(*u + 1)), prec);
  return iv_div(numer, iv_sub_nonneg(one, ptop), prec);
}

// Enclosure of P[|DLap(e^{-eps})| >= t] = 2 e^{-eps t} / (1 + e^{-eps}), t >= 1.
inline Interval dlap_tail_interval(const mpq_class& eps, std::uint64_t t, unsigned long prec) {
  Interval p = exp_neg_interval(eps, prec);
  Interval one = iv_const(1, prec);
  Interval num2 = iv_scale(exp_neg_interval(eps * mpq_class(static_cast<unsigned long>(t)), prec),
                           mpq_class(2));
  return iv_div(num2, iv_add(one, p), prec);
}

}  // namespace num

inline FixedProb dlap_pmf(const mpq_class& eps, std::int64_t t, unsigned ell) {
  require_config(sgn(eps) > 0, "dlap_pmf: eps must be positive");
  std::uint64_t abs_t = t < 0 ? static_cast<std::uint64_t>(-(t + 1)) + 1
                              : static_cast<std::uint64_t>(t);
  return {num::certified_floor(
              ell, [&](unsigned long p) { return num::dlap_pmf_interval(eps, abs_t, p); }),
          ell};
}

inline FixedProb geo_pmf(const mpq_class& q, std::optional<std::uint64_t> u, std::uint64_t t,
                         unsigned ell) {
  require_config(sgn(q) > 0, "geo_pmf: exponent rate must be positive");
  if (u.has_value()) {
    require_config(t <= *u, "geo_pmf: t outside the finite support");
    if (*u == 0) return {num::pow2(ell), ell};  // single-point support
  }
  return {num::certified_floor(
              ell, [&](unsigned long p) { return num::geo_pmf_interval(q, u, t, p); }),
          ell};
}

// P[|X| >= t] for X ~ DLap(e^{-eps}); defined for t >= 1.
inline FixedProb dlap_tail(const mpq_class& eps, std::uint64_t t, unsigned ell) {
  require_config(sgn(eps) > 0, "dlap_tail: eps must be positive");
  require_config(t >= 1, "dlap_tail: defined for t >= 1");
  return {num::certified_floor(
              ell, [&](unsigned long p) { return num::dlap_tail_interval(eps, t, p); }),
          ell};
}

namespace num {

// Builds floor(pmf(t) * 2^ell) for t = 0..m-1 of Geo(e^{-q}, [0,u]) in one
// pass: one enclosure of p and of the normalizing constant, then iterated
// interval products. Entries whose floor cannot be certified from the shared
// enclosure fall back to an independent escalating evaluation. This is the
// table-build hot path; per-entry series evaluation would be quadratic-ish.
inline std::vector<mpz_class> geo_mass_mantissas(const mpq_class& q,
                                                 std::optional<std::uint64_t> u, std::uint64_t m,
                                                 unsigned ell) {
  check_internal(m >= 1, "geo_mass_mantissas: empty support");
  std::vector<mpz_class> out(m);
  if (u.has_value() && *u == 0) {
    out[0] = pow2(ell);
    return out;
  }
  unsigned long prec = ell + kGuardBits + 2 * (64 - static_cast<unsigned long>(
                                                        __builtin_clzll(m | 1)));
  Interval p = exp_neg_interval(q, prec);
  Interval one = iv_const(1, prec);
  Interval coef = iv_sub_nonneg(one, p);
  if (u.has_value()) {
    Interval ptop = exp_neg_interval(q * mpq_class(static_cast<unsigned long>(*u + 1)), prec);
    coef = iv_div(coef, iv_sub_nonneg(one, ptop), prec);
  }
  Interval cur = coef;
  for (std::uint64_t t = 0; t < m; ++t) {
    if (t > 0) cur = iv_mul(cur, p, prec);
    mpz_class flo = shr_floor(cur.lo, prec - ell);
    mpz_class fhi = shr_floor(cur.hi, prec - ell);
    if (flo == fhi) {
      out[t] = flo;
    } else {
      out[t] = certified_floor(
          ell, [&](unsigned long pp) { return geo_pmf_interval(q, u, t, pp); });
    }
  }
  return out;
}

// Same for DLap(e^{-eps}) restricted to values -L..L, emitted in label order
// 0, +1, -1, +2, -2, ...
inline std::vector<mpz_class> dlap_mass_mantissas(const mpq_class& eps, std::uint64_t L,
                                                  unsigned ell) {
  unsigned long prec = ell + kGuardBits + 2 * (64 - static_cast<unsigned long>(
                                                        __builtin_clzll(L | 1)));
  Interval p = exp_neg_interval(eps, prec);
  Interval one = iv_const(1, prec);
  Interval coef = iv_div(iv_sub_nonneg(one, p), iv_add(one, p), prec);
  std::vector<mpz_class> by_abs(L + 1);
  Interval cur = coef;
  for (std::uint64_t t = 0; t <= L; ++t) {
    if (t > 0) cur = iv_mul(cur, p, prec);
    mpz_class flo = shr_floor(cur.lo, prec - ell);
    mpz_class fhi = shr_floor(cur.hi, prec - ell);
    if (flo == fhi) {
      by_abs[t] = flo;
    } else {
      by_abs[t] = certified_floor(
          ell, [&](unsigned long pp) { return dlap_pmf_interval(eps, t, pp); });
    }
  }
  std::vector<mpz_class> out(2 * L + 1);
  out[0] = by_abs[0];
  for (std::uint64_t t = 1; t <= L; ++t) {
    out[2 * t - 1] = by_abs[t];  // label of +t
    out[2 * t] = by_abs[t];      // label of -t
  }
  return out;
}

}  // namespace num

}  // namespace tailpad
