#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace platoon {

/// Multiplicative n-bit noise channel for the communicated predecessor
/// acceleration. A draw is
///
///   w = (1 - 1/rho) + (1/rho) * sum_j z_j / 2^j,   z_j ~ Bernoulli(gamma_j),
///
/// so every realization lies in [1 - 1/rho, 1 + 1/rho]. rho > 1 is the
/// minimum signal-to-amplitude-noise ratio; rho may be +infinity, in which
/// case every draw equals 1 (noiseless channel).
struct ChannelSpec {
  double rho = 5.0;
  std::vector<double> bit_mean;  // gamma_j = E[z_j], each strictly in (0,1)

  int bits() const { return static_cast<int>(bit_mean.size()); }

  void validate() const {
    if (!(rho > 1.0)) throw std::invalid_argument("channel: rho must exceed 1");
    if (bit_mean.empty()) throw std::invalid_argument("channel: need at least one bit");
    for (double g : bit_mean)
      if (!(g > 0.0) || !(g < 1.0))
        throw std::invalid_argument("channel: every bit mean must lie strictly in (0,1)");
  }

  static ChannelSpec from_snr_db(double snr_db, std::vector<double> bit_mean);
};

/// rho = 10^(snr_db/20). Rejects snr_db <= 0 since rho <= 1 voids every
/// bound downstream.
inline double snr_db_to_rho(double snr_db) {
  if (!(snr_db > 0.0)) throw std::invalid_argument("snr: dB value must be positive");
  return std::pow(10.0, snr_db / 20.0);
}

inline double rho_to_snr_db(double rho) {
  if (!(rho > 1.0)) throw std::invalid_argument("snr: rho must exceed 1");
  return 20.0 * std::log10(rho);
}

inline ChannelSpec ChannelSpec::from_snr_db(double snr_db, std::vector<double> bit_mean) {
  ChannelSpec spec;
  spec.rho = snr_db_to_rho(snr_db);
  spec.bit_mean = std::move(bit_mean);
  spec.validate();
  return spec;
}

/// One multiplicative noise factor realization.
struct NoiseFactorSample {
  double value = 1.0;
};

/// Smallest attainable noise factor (all bits zero).
inline double noise_factor_min(const ChannelSpec& spec) { return 1.0 - 1.0 / spec.rho; }

/// Largest attainable noise factor (all bits one): 1 + 1/rho - 2^(1-n)/rho.
inline double noise_factor_max(const ChannelSpec& spec) {
  return 1.0 - 1.0 / spec.rho +
         (2.0 - std::ldexp(1.0, 1 - spec.bits())) / spec.rho;
}

/// Uniform double in [0,1) from the top 53 bits of one engine word. Used
/// instead of std::bernoulli_distribution so that streams are bit-stable
/// across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Noise factor from an explicit bit pattern. Test hook for forcing the
/// boundary realizations without boundary bit means.
inline NoiseFactorSample noise_factor_from_bits(const ChannelSpec& spec,
                                                const std::vector<int>& bits) {
  if (static_cast<int>(bits.size()) != spec.bits())
    throw std::invalid_argument("noise: bit pattern length must equal the channel bit count");
  double sum = 0.0;
  for (int j = spec.bits() - 1; j >= 0; --j)
    if (bits[static_cast<std::size_t>(j)] != 0) sum += std::ldexp(1.0, -j);
  return {1.0 - 1.0 / spec.rho + sum / spec.rho};
}

/// Draw one noise factor. Consumes exactly spec.bits() engine words, most
/// significant bit first; replaying an engine from the same seed reproduces
/// the stream exactly.
inline NoiseFactorSample sample_noise_factor(const ChannelSpec& spec, std::mt19937_64& rng) {
  double sum = 0.0;
  for (int j = 0; j < spec.bits(); ++j) {
    const bool bit = uniform01(rng) < spec.bit_mean[static_cast<std::size_t>(j)];
    if (bit) sum += std::ldexp(1.0, -j);
  }
  return {1.0 - 1.0 / spec.rho + sum / spec.rho};
}

/// Expected noise factor wbar = 1 - 1/rho + (1/rho) * sum_j gamma_j / 2^j.
inline double expected_noise_factor(const ChannelSpec& spec) {
  double sum = 0.0;
  for (int j = 0; j < spec.bits(); ++j)
    sum += spec.bit_mean[static_cast<std::size_t>(j)] * std::ldexp(1.0, -j);
  return 1.0 - 1.0 / spec.rho + sum / spec.rho;
}

/// Variance of the noise factor: (1/rho^2) * sum_j gamma_j(1-gamma_j)/4^j.
inline double noise_factor_variance(const ChannelSpec& spec) {
  double sum = 0.0;
  for (int j = 0; j < spec.bits(); ++j) {
    const double g = spec.bit_mean[static_cast<std::size_t>(j)];
    sum += g * (1.0 - g) * std::ldexp(1.0, -2 * j);
  }
  return sum / (spec.rho * spec.rho);
}

/// Effective feedforward gain ktilde = ka * wbar together with its
/// worst-case interval [(1 - 1/rho) ka, (1 + 1/rho) ka] over all admissible
/// channel statistics.
struct EffectiveGain {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline EffectiveGain effective_gain(double ka, const ChannelSpec& spec) {
  if (!(ka > 0.0)) throw std::invalid_argument("effective gain: ka must be positive");
  spec.validate();
  EffectiveGain eg;
  eg.value = ka * expected_noise_factor(spec);
  eg.lo = (1.0 - 1.0 / spec.rho) * ka;
  eg.hi = (1.0 + 1.0 / spec.rho) * ka;
  return eg;
}

/// Deterministic per-(run, link) stream seed derived from the master seed,
/// so Monte-Carlo runs and links never share a stream.
inline std::uint64_t noise_stream_seed(std::uint64_t master, std::uint64_t run,
                                       std::uint64_t link) {
  std::uint64_t s = master;
  for (std::uint64_t salt : {run + 1, link + 1}) {
    s += 0x9e3779b97f4a7c15ull * salt;
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
    s = s ^ (s >> 31);
  }
  return s;
}

}  // namespace platoon
