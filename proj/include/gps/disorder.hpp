#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gps/kernel.hpp"

namespace gps {

enum class DisorderFamily { gaussian, rademacher };

DisorderFamily parse_disorder_family(const std::string& name);
std::string disorder_family_name(DisorderFamily f);

// log E exp(x * omega) for one site: x^2/2 for the gaussian family,
// log cosh x for rademacher.
double log_mgf(DisorderFamily f, double x);

struct DisorderSpec {
  DisorderFamily family = DisorderFamily::gaussian;
  uint64_t master_seed = 0;
};

// Raw keyed counter generator, exposed for known-answer tests.
std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                      std::array<uint32_t, 2> key);

// Site disorder addressed by lattice coordinates: one generator call per site,
// so any cell is reproducible in isolation. The translation shift is baked
// into the accessor, which makes shifted-origin checks exact rather than
// approximate.
struct DisorderField {
  DisorderSpec spec;
  uint32_t replica_id = 0;
  int64_t shift_n = 0, shift_m = 0;

  double omega(int64_t n, int64_t m) const;
};

// Deterministic uniform stream for trajectory samplers, split by stream id;
// independent of the field streams by construction (distinct purpose word).
struct RngStream {
  uint64_t master_seed = 0;
  uint32_t stream_id = 0;

  RngStream() = default;
  RngStream(uint64_t seed, uint32_t id) : master_seed(seed), stream_id(id) {}

  double next_uniform();  // strictly inside (0,1)
  uint64_t next_u64();

 private:
  uint64_t ctr_ = 0;
  int have_ = 0;
  std::array<uint32_t, 4> w_{};
  void refill();
};

}  // namespace gps
