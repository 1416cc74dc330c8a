#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace spde {

// Counter-based generator: value at (step, mode, stream) is a pure function
// of the seed, so any slice of a path can be regenerated without streaming
// through the rest, and coupling refinements to one driving path is exact.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

// Mode-wise Brownian increments: increments[j * n_modes + k] ~ N(0, dt),
// independent across steps and modes, reproducible from (seed, stream).
struct NoisePath {
  int n_modes = 0;
  long long n_steps = 0;
  double dt = 0.0;
  uint64_t seed = 0;
  uint32_t stream = 0;
  bool derived = false;  // aggregated from a finer path, not regenerable
  std::vector<double> increments;

  double at(long long step, int mode) const {
    return increments[static_cast<size_t>(step) * n_modes + mode];
  }
};

NoisePath generate_noise(int n_modes, long long n_steps, double dt, uint64_t seed,
                         uint32_t stream = 0);

// The scalar increment driving the reduced equation:
//   dbeta_j = strength^{-1/2} sum_k sqrt(alpha_k) w_k dB_{k,j},
// strength = sum_k alpha_k w_k^2. Rescaling all weights by a common factor
// leaves the sequence unchanged, so either weight convention may be passed.
struct ReducedNoise {
  std::vector<double> increments;  // one per step, N(0, dt)
  double strength = 0.0;
  bool degenerate = false;  // strength == 0; increments are flagged zeros
};

ReducedNoise reduce_increments(const NoisePath& path, const std::vector<double>& alpha,
                               const std::vector<double>& weights);

// Coarse path whose step j sums fine steps [j*factor, (j+1)*factor); requires
// factor to divide n_steps. Marked derived: it represents the same Brownian
// sample on a coarser grid.
NoisePath block_sum(const NoisePath& path, int factor);

void dump_noise(const NoisePath& path, const std::string& filename);
NoisePath load_noise(const std::string& filename);

// FNV-1a over the increment bytes in step-major order; the solver stamps the
// same digest on its trajectory, letting downstream reconstruction verify it
// was handed the path that actually drove the run.
uint64_t path_checksum(const NoisePath& path);

// Stable per-path seed from a master seed and (epsilon, path) indices.
uint64_t derive_seed(uint64_t master, uint32_t eps_index, uint32_t path_index);

}  // namespace spde
