#include "gps/disorder.hpp"

#include <cmath>

namespace gps {
namespace {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;

constexpr uint32_t kPurposeField = 1u;
constexpr uint32_t kPurposeSampler = 2u;

inline void round_once(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
  uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c[0];
  uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c[2];
  uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double uniform53(uint32_t a, uint32_t b) {
  uint64_t u = (static_cast<uint64_t>(b) << 32) | a;
  return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace

std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                      std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    round_once(ctr, key);
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

DisorderFamily parse_disorder_family(const std::string& name) {
  if (name == "gaussian") return DisorderFamily::gaussian;
  if (name == "rademacher") return DisorderFamily::rademacher;
  throw ConfigError("unknown disorder family: " + name);
}

std::string disorder_family_name(DisorderFamily f) {
  return f == DisorderFamily::gaussian ? "gaussian" : "rademacher";
}

double log_mgf(DisorderFamily f, double x) {
  if (f == DisorderFamily::gaussian) return 0.5 * x * x;
  // log cosh x, overflow-safe.
  double ax = std::fabs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - 0.6931471805599453;
}

double DisorderField::omega(int64_t n, int64_t m) const {
  uint64_t un = static_cast<uint64_t>(n + shift_n);
  uint64_t um = static_cast<uint64_t>(m + shift_m);
  std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(un), static_cast<uint32_t>(um),
                                 replica_id, kPurposeField};
  std::array<uint32_t, 2> key = {static_cast<uint32_t>(spec.master_seed),
                                 static_cast<uint32_t>(spec.master_seed >> 32)};
  std::array<uint32_t, 4> w = philox4x32_10(ctr, key);
  if (spec.family == DisorderFamily::rademacher) return (w[0] & 1u) ? 1.0 : -1.0;
  double u1 = uniform53(w[0], w[1]);
  double u2 = uniform53(w[2], w[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

void RngStream::refill() {
  std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(ctr_),
                                 static_cast<uint32_t>(ctr_ >> 32), stream_id,
                                 kPurposeSampler};
  std::array<uint32_t, 2> key = {static_cast<uint32_t>(master_seed),
                                 static_cast<uint32_t>(master_seed >> 32)};
  w_ = philox4x32_10(ctr, key);
  ++ctr_;
  have_ = 4;
}

uint64_t RngStream::next_u64() {
  if (have_ < 2) refill();
  uint32_t a = w_[4 - have_];
  uint32_t b = w_[5 - have_];
  have_ -= 2;
  return (static_cast<uint64_t>(b) << 32) | a;
}

double RngStream::next_uniform() {
  uint64_t u = next_u64();
  return static_cast<double>(u >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace gps
