#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gps {

// 2^k for |k| <= 1000 without ldexp's subnormal handling.
inline double pow2i(int64_t k) {
  return std::bit_cast<double>(static_cast<uint64_t>(1023 + k) << 52);
}

// Nonnegative value mantissa * 2^exponent with mantissa in [1,2), or exactly zero.
// Dynamic range far beyond double (exponent is a 64-bit integer); used wherever
// partition values or renewal masses can leave [1e-308, 1e308].
struct ScaledNonneg {
  double m = 0.0;
  int64_t e = 0;

  static ScaledNonneg zero() { return {}; }

  static ScaledNonneg one() { return {1.0, 0}; }

  static ScaledNonneg from_double(double x) {
    if (x <= 0.0 || std::isnan(x)) return {};
    int k;
    double f = std::frexp(x, &k);  // f in [0.5,1)
    return {2.0 * f, static_cast<int64_t>(k) - 1};
  }

  // Builds the value exp(l) from a natural-log argument.
  static ScaledNonneg from_log(double l) {
    if (l == -std::numeric_limits<double>::infinity()) return {};
    double le = l * 1.4426950408889634;  // log2(e)
    double fe = std::floor(le);
    double frac = le - fe;
    ScaledNonneg r{std::exp2(frac), static_cast<int64_t>(fe)};
    if (r.m >= 2.0) {
      r.m *= 0.5;
      ++r.e;
    }
    return r;
  }

  bool is_zero() const { return m == 0.0; }

  double log() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    return std::log(m) + static_cast<double>(e) * 0.6931471805599453;
  }

  double log2v() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    return std::log2(m) + static_cast<double>(e);
  }

  double to_double() const {
    if (is_zero()) return 0.0;
    if (e > 1023) return std::numeric_limits<double>::infinity();
    if (e < -1070) return 0.0;
    return std::ldexp(m, static_cast<int>(e));
  }

  friend ScaledNonneg operator*(ScaledNonneg a, ScaledNonneg b) {
    if (a.is_zero() || b.is_zero()) return {};
    ScaledNonneg r{a.m * b.m, a.e + b.e};
    if (r.m >= 2.0) {
      r.m *= 0.5;
      ++r.e;
    }
    return r;
  }

  ScaledNonneg mul_double(double c) const {
    if (is_zero() || c <= 0.0) return {};
    int k;
    double f = std::frexp(c, &k);
    ScaledNonneg r{m * f, e + static_cast<int64_t>(k)};  // m*f in [0.5,2)
    if (r.m < 1.0) {
      r.m *= 2.0;
      --r.e;
    }
    return r;
  }

  friend ScaledNonneg operator+(ScaledNonneg a, ScaledNonneg b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.e < b.e) std::swap(a, b);
    int64_t d = a.e - b.e;
    if (d > 200) return a;
    ScaledNonneg r{a.m + b.m * pow2i(-d), a.e};
    if (r.m >= 2.0) {
      r.m *= 0.5;
      ++r.e;
    }
    return r;
  }

  // a - b clamped at zero; b is expected to be <= a up to rounding.
  friend ScaledNonneg sub_clamped(ScaledNonneg a, ScaledNonneg b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return {};
    int64_t d = a.e - b.e;
    if (d < 0) return {};
    if (d > 200) return a;
    double r = a.m - b.m * pow2i(-d);
    if (r <= 0.0) return {};
    int k;
    double f = std::frexp(r, &k);
    return {2.0 * f, a.e + static_cast<int64_t>(k) - 1};
  }

  friend bool operator<(ScaledNonneg a, ScaledNonneg b) {
    if (a.is_zero()) return !b.is_zero();
    if (b.is_zero()) return false;
    if (a.e != b.e) return a.e < b.e;
    return a.m < b.m;
  }

  friend bool operator<=(ScaledNonneg a, ScaledNonneg b) { return !(b < a); }
};

// Accumulator for sums of many ScaledNonneg terms: a double mantissa against a
// movable power-of-two base. Terms 2^-200 below the running base are dropped,
// far under any tolerance used in this project.
struct ScaledAcc {
  double acc = 0.0;
  int64_t base = std::numeric_limits<int64_t>::min();

  void add(ScaledNonneg x) { add_me(x.m, x.e); }

  void add_me(double m, int64_t e) {
    if (m == 0.0) return;
    if (base == std::numeric_limits<int64_t>::min()) {
      acc = m;
      base = e;
      return;
    }
    int64_t d = base - e;
    if (d >= 0) {
      if (d <= 200) acc += m * pow2i(-d);
    } else {
      // acc < 2^500, so for d < -1000 the old content is below 2^-500 of the
      // new term and may be dropped; otherwise shift it down (may underflow
      // gradually, which is harmless).
      if (d >= -1000)
        acc = acc * pow2i(d) + m;
      else
        acc = m;
      base = e;
    }
    if (acc >= 0x1p500) {
      acc *= 0x1p-500;
      base += 500;
    }
  }

  ScaledNonneg result() const {
    if (base == std::numeric_limits<int64_t>::min() || acc <= 0.0) return {};
    int k;
    double f = std::frexp(acc, &k);
    return {2.0 * f, base + static_cast<int64_t>(k) - 1};
  }
};

}  // namespace gps
