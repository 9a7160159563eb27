#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikedwigner/prior.hpp"
#include "spikedwigner/rng.hpp"

namespace spikedwigner {

/// One observation matrix, upper triangle only (the diagonal is discarded by
/// the model). y_upper is row-major over pairs i < j. The spike vector is
/// empty under the null model. Fully determined by (master_seed, sample_index).
struct Instance {
  int n = 0;
  double lambda = 0.0;
  std::vector<double> y_upper;
  std::vector<double> spike;
  uint64_t master_seed = 0;
  uint64_t sample_index = 0;

  bool planted() const { return !spike.empty(); }

  static size_t edge_index(int n, int i, int j) {
    // row-major over i < j: (0,1),(0,2),...,(0,n-1),(1,2),...
    return static_cast<size_t>(i) * n - static_cast<size_t>(i) * (i + 1) / 2 + (j - i - 1);
  }
  double y(int i, int j) const {
    if (i == j) throw std::logic_error("Instance: no diagonal observations");
    if (i > j) std::swap(i, j);
    return y_upper[edge_index(n, i, j)];
  }
};

struct SampleOptions {
  bool zero_noise = false;  // test hook: W = 0, leaving the pure signal
};

/// Draws one instance. Spike entries are i.i.d. from the prior (planted
/// model), noise entries are i.i.d. standard normal, and every entry comes
/// from a counter-based substream of (master_seed, sample_index), so results
/// are identical regardless of evaluation order or thread schedule.
inline Instance sample_instance(int n, double lambda, const Prior& prior, bool planted,
                                uint64_t master_seed, uint64_t sample_index,
                                const SampleOptions& opts = {}) {
  if (n < 2) throw std::invalid_argument("sample_instance: n >= 2");
  if (lambda < 0.0) throw std::invalid_argument("sample_instance: lambda >= 0");
  Instance inst;
  inst.n = n;
  inst.lambda = lambda;
  inst.master_seed = master_seed;
  inst.sample_index = sample_index;
  inst.y_upper.resize(static_cast<size_t>(n) * (n - 1) / 2);

  if (planted) {
    rng::Substream spike_stream(master_seed, rng::Stream::spike, sample_index);
    inst.spike.resize(n);
    for (int i = 0; i < n; ++i) {
      const double u = spike_stream.uniform(static_cast<uint64_t>(i));
      double cum = 0.0;
      inst.spike[i] = prior.atoms.back().value;
      for (const auto& a : prior.atoms) {
        cum += a.weight;
        if (u <= cum) {
          inst.spike[i] = a.value;
          break;
        }
      }
    }
  }

  rng::Substream noise(master_seed, rng::Stream::noise, sample_index);
  const double coupling = std::sqrt(lambda / n);
  size_t e = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++e) {
      double y = opts.zero_noise ? 0.0 : noise.normal(e);
      if (planted) y += coupling * inst.spike[i] * inst.spike[j];
      inst.y_upper[e] = y;
    }
  }
  return inst;
}

// --- serialization ---------------------------------------------------------
// CSV: header line, then one row per edge. Binary: little-endian, magic
// "SWIN", u32 version, u32 n, f64 lambda, u64 seed, u64 sample_index,
// u8 has_spike, then spike (n f64) if present, then y_upper (n(n-1)/2 f64).

static_assert(std::endian::native == std::endian::little,
              "instance binary format is defined little-endian");

inline void save_instance_csv(const Instance& inst, std::ostream& os) {
  char buf[64];
  os << "n,lambda,master_seed,sample_index,planted\n";
  std::snprintf(buf, sizeof buf, "%.17g", inst.lambda);
  os << inst.n << ',' << buf << ',' << inst.master_seed << ',' << inst.sample_index << ','
     << (inst.planted() ? 1 : 0) << '\n';
  os << "i,j,y\n";
  size_t e = 0;
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j, ++e) {
      std::snprintf(buf, sizeof buf, "%.17g", inst.y_upper[e]);
      os << i << ',' << j << ',' << buf << '\n';
    }
}

inline void save_instance_binary(const Instance& inst, std::ostream& os) {
  auto put = [&](const void* p, size_t len) { os.write(static_cast<const char*>(p), len); };
  os.write("SWIN", 4);
  const uint32_t version = 1, n = static_cast<uint32_t>(inst.n);
  put(&version, 4);
  put(&n, 4);
  put(&inst.lambda, 8);
  put(&inst.master_seed, 8);
  put(&inst.sample_index, 8);
  const uint8_t has_spike = inst.planted() ? 1 : 0;
  put(&has_spike, 1);
  if (has_spike) put(inst.spike.data(), inst.spike.size() * 8);
  put(inst.y_upper.data(), inst.y_upper.size() * 8);
}

inline Instance load_instance_binary(std::istream& is) {
  auto get = [&](void* p, size_t len) {
    if (!is.read(static_cast<char*>(p), len)) throw std::runtime_error("instance: truncated");
  };
  char magic[4];
  get(magic, 4);
  if (std::string(magic, 4) != "SWIN") throw std::runtime_error("instance: bad magic");
  uint32_t version, n;
  get(&version, 4);
  if (version != 1) throw std::runtime_error("instance: unsupported version");
  get(&n, 4);
  Instance inst;
  inst.n = static_cast<int>(n);
  get(&inst.lambda, 8);
  get(&inst.master_seed, 8);
  get(&inst.sample_index, 8);
  uint8_t has_spike;
  get(&has_spike, 1);
  if (has_spike) {
    inst.spike.resize(n);
    get(inst.spike.data(), size_t(n) * 8);
  }
  inst.y_upper.resize(size_t(n) * (n - 1) / 2);
  get(inst.y_upper.data(), inst.y_upper.size() * 8);
  return inst;
}

}  // namespace spikedwigner
