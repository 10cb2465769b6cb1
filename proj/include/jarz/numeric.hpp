#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace jarz {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

// log P(unit = value) for a Bernoulli unit with logit z.
inline double bernoulli_log_prob(double value, double z) {
  return value != 0.0 ? log_sigmoid(z) : log_sigmoid(-z);
}

// Throws InvalidArgument on an empty list.
double log_sum_exp(std::span<const double> values);

/// log((1/N) sum_i e^{v_i}), max-subtracted.
double log_mean_exp(std::span<const double> values);

using Rng = std::mt19937_64;

/// Independent stream `stream` of the generator family identified by `seed`.
/// Walker i of an ensemble always draws from stream i, so results do not
/// depend on how walkers are distributed over threads.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace jarz
