#include "spde/noise.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace spde {

namespace {

constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;
constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;

inline void philox_round(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
  const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
  const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline double to_unit(uint64_t x) {  // strictly inside (0, 1)
  return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// two independent standard normals from one counter block
inline void gaussian_pair(uint64_t seed, uint64_t step, uint32_t pair, uint32_t stream,
                          double& z0, double& z1) {
  const std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(step),
                                       static_cast<uint32_t>(step >> 32), pair, stream};
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                       static_cast<uint32_t>(seed >> 32)};
  const std::array<uint32_t, 4> r = philox4x32(ctr, key);
  const double u1 = to_unit((static_cast<uint64_t>(r[0]) << 32) | r[1]);
  const double u2 = to_unit((static_cast<uint64_t>(r[2]) << 32) | r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  z0 = rad * std::cos(ang);
  z1 = rad * std::sin(ang);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    philox_round(counter, key);
  }
  return counter;
}

NoisePath generate_noise(int n_modes, long long n_steps, double dt, uint64_t seed,
                         uint32_t stream) {
  if (n_modes < 1) throw std::invalid_argument("generate_noise: n_modes must be >= 1");
  if (n_steps < 0) throw std::invalid_argument("generate_noise: n_steps must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("generate_noise: dt must be positive");
  NoisePath p;
  p.n_modes = n_modes;
  p.n_steps = n_steps;
  p.dt = dt;
  p.seed = seed;
  p.stream = stream;
  p.increments.resize(static_cast<size_t>(n_steps) * n_modes);
  const double scale = std::sqrt(dt);
  const int n_pairs = (n_modes + 1) / 2;
  for (long long j = 0; j < n_steps; ++j) {
    double* row = p.increments.data() + static_cast<size_t>(j) * n_modes;
    for (int q = 0; q < n_pairs; ++q) {
      double z0, z1;
      gaussian_pair(seed, static_cast<uint64_t>(j), static_cast<uint32_t>(q), stream,
                    z0, z1);
      row[2 * q] = scale * z0;
      if (2 * q + 1 < n_modes) row[2 * q + 1] = scale * z1;
    }
  }
  return p;
}

ReducedNoise reduce_increments(const NoisePath& path, const std::vector<double>& alpha,
                               const std::vector<double>& weights) {
  if (static_cast<int>(alpha.size()) != path.n_modes ||
      static_cast<int>(weights.size()) != path.n_modes)
    throw std::invalid_argument("reduce_increments: weight sizes must match modes");
  ReducedNoise r;
  for (int k = 0; k < path.n_modes; ++k) {
    if (alpha[k] < 0.0)
      throw std::invalid_argument("reduce_increments: negative covariance eigenvalue");
    r.strength += alpha[k] * weights[k] * weights[k];
  }
  r.increments.assign(static_cast<size_t>(path.n_steps), 0.0);
  if (r.strength == 0.0) {
    r.degenerate = true;  // no noise reaches the kernel; zeros by convention
    return r;
  }
  const double inv = 1.0 / std::sqrt(r.strength);
  std::vector<double> w(path.n_modes);
  for (int k = 0; k < path.n_modes; ++k) w[k] = std::sqrt(alpha[k]) * weights[k] * inv;
  for (long long j = 0; j < path.n_steps; ++j) {
    const double* row = path.increments.data() + static_cast<size_t>(j) * path.n_modes;
    double acc = 0.0;
    for (int k = 0; k < path.n_modes; ++k) acc += w[k] * row[k];
    r.increments[static_cast<size_t>(j)] = acc;
  }
  return r;
}

NoisePath block_sum(const NoisePath& path, int factor) {
  if (factor < 1) throw std::invalid_argument("block_sum: factor must be >= 1");
  if (path.n_steps % factor != 0)
    throw std::invalid_argument("block_sum: factor must divide n_steps");
  NoisePath c;
  c.n_modes = path.n_modes;
  c.n_steps = path.n_steps / factor;
  c.dt = path.dt * factor;
  c.seed = path.seed;
  c.stream = path.stream;
  c.derived = factor > 1 || path.derived;
  c.increments.assign(static_cast<size_t>(c.n_steps) * c.n_modes, 0.0);
  for (long long j = 0; j < path.n_steps; ++j) {
    const double* src = path.increments.data() + static_cast<size_t>(j) * path.n_modes;
    double* dst = c.increments.data() + static_cast<size_t>(j / factor) * c.n_modes;
    for (int k = 0; k < c.n_modes; ++k) dst[k] += src[k];
  }
  return c;
}

namespace {
constexpr char kMagic[4] = {'N', 'P', 'T', 'H'};
constexpr uint32_t kVersion = 1;
}  // namespace

void dump_noise(const NoisePath& path, const std::string& filename) {
  std::FILE* f = std::fopen(filename.c_str(), "wb");
  if (!f) throw std::runtime_error("dump_noise: cannot open " + filename);
  const int64_t modes = path.n_modes, steps = path.n_steps;
  const uint8_t derived = path.derived ? 1 : 0;
  bool ok = std::fwrite(kMagic, 1, 4, f) == 4 &&
            std::fwrite(&kVersion, sizeof kVersion, 1, f) == 1 &&
            std::fwrite(&modes, sizeof modes, 1, f) == 1 &&
            std::fwrite(&steps, sizeof steps, 1, f) == 1 &&
            std::fwrite(&path.dt, sizeof path.dt, 1, f) == 1 &&
            std::fwrite(&path.seed, sizeof path.seed, 1, f) == 1 &&
            std::fwrite(&path.stream, sizeof path.stream, 1, f) == 1 &&
            std::fwrite(&derived, sizeof derived, 1, f) == 1;
  if (ok && !path.increments.empty())
    ok = std::fwrite(path.increments.data(), sizeof(double), path.increments.size(),
                     f) == path.increments.size();
  const bool closed = std::fclose(f) == 0;
  if (!ok || !closed) throw std::runtime_error("dump_noise: short write to " + filename);
}

NoisePath load_noise(const std::string& filename) {
  std::FILE* f = std::fopen(filename.c_str(), "rb");
  if (!f) throw std::runtime_error("load_noise: cannot open " + filename);
  char magic[4];
  uint32_t version = 0;
  int64_t modes = 0, steps = 0;
  NoisePath p;
  uint8_t derived = 0;
  bool ok = std::fread(magic, 1, 4, f) == 4 &&
            std::fread(&version, sizeof version, 1, f) == 1 &&
            std::fread(&modes, sizeof modes, 1, f) == 1 &&
            std::fread(&steps, sizeof steps, 1, f) == 1 &&
            std::fread(&p.dt, sizeof p.dt, 1, f) == 1 &&
            std::fread(&p.seed, sizeof p.seed, 1, f) == 1 &&
            std::fread(&p.stream, sizeof p.stream, 1, f) == 1 &&
            std::fread(&derived, sizeof derived, 1, f) == 1;
  ok = ok && std::memcmp(magic, kMagic, 4) == 0 && version == kVersion && modes >= 1 &&
       steps >= 0 && p.dt > 0.0;
  if (ok) {
    p.n_modes = static_cast<int>(modes);
    p.n_steps = steps;
    p.derived = derived != 0;
    p.increments.resize(static_cast<size_t>(steps) * p.n_modes);
    if (!p.increments.empty())
      ok = std::fread(p.increments.data(), sizeof(double), p.increments.size(), f) ==
           p.increments.size();
    // reject trailing junk
    char probe;
    ok = ok && std::fread(&probe, 1, 1, f) == 0;
  }
  std::fclose(f);
  if (!ok) throw std::runtime_error("load_noise: bad or truncated file " + filename);
  return p;
}

uint64_t path_checksum(const NoisePath& path) {
  uint64_t h = 14695981039346656037ull;
  for (double v : path.increments) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t master, uint32_t eps_index, uint32_t path_index) {
  uint64_t z = master ^ (0x6A09E667F3BCC909ull + (static_cast<uint64_t>(eps_index) << 32) +
                         path_index);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace spde
