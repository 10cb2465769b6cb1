#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jarz/kernels.hpp"
#include "jarz/numeric.hpp"
#include "jarz/types.hpp"

// Walker ensemble carrying Jarzynski log-weights A_k.
//
// With X_0 ~ rho_theta0, A_0 = 0 and X_{k+1} ~ pi_k(X_k -> .),
//
//   A_{k+1} = A_k + U_k(X_k) - U_{k+1}(X_{k+1})
//                 + log pi~_{k+1}(X_{k+1} -> X_k) - log pi_k(X_k -> X_{k+1})
//
// gives E[f(X_k) e^{A_k}] / E[e^{A_k}] = E_theta_k[f] and
// Z_theta_k = Z_theta_0 E[e^{A_k}] for any normalized pair (pi, pi~).
namespace jarz {

struct Walker {
  StatePoint x;
  double a = 0.0;
};

struct Ensemble {
  std::vector<Walker> walkers;
  // streams[i] drives whatever walker slot i holds; resampling moves states,
  // never streams.
  std::vector<Rng> streams;
  // Drives resampling and other ensemble-level draws.
  Rng control;
  double log_z_ref = 0.0;
  // Log mean weight absorbed at resampling events, and the summed delta-method
  // variance of those absorbed terms.
  double log_z_resample_offset = 0.0;
  double log_z_resample_variance = 0.0;
  std::size_t step = 0;
  std::vector<std::size_t> resample_steps;

  std::size_t size() const { return walkers.size(); }
  std::vector<double> log_weights() const;
};

struct WeightedEstimate {
  std::vector<double> value;
  std::vector<double> std_error;  // delta method on the self-normalized ratio
  double ess = 0.0;
  double n_effective_fraction = 0.0;
};

/// N exact draws from rho_theta0 with A = 0. Walker i uses stream (seed, i).
Ensemble init_ensemble(const ModelDescriptor& model, const ParameterVector& theta0,
                       std::size_t n, std::uint64_t seed);

/// Ensemble from caller-provided initial states (e.g. the drifted kernel's
/// rho_0); log_z_ref is the caller's log Z_0.
Ensemble init_ensemble(std::vector<StatePoint> states, double log_z_ref, std::uint64_t seed);

/// U_k(x) - U_{k+1}(y) + kernel.log_reverse(theta_next, y -> x) - kernel.log_forward(theta_k, x -> y)
double jarzynski_increment(const TransitionKernel& kernel, const ParameterVector& theta_k,
                           const ParameterVector& theta_next, const StatePoint& x,
                           const StatePoint& y);

struct AdvanceOptions {
  // Negative control for the oracle checks: subtracts the increment instead.
  bool flip_increment_sign = false;
};

/// One move of every walker under pi_{theta_k}, plus the weight increment.
/// OpenMP-parallel over walkers; the result does not depend on thread count.
/// Throws NumericalError naming the first walker with a non-finite increment,
/// leaving states and weights unchanged (the streams have advanced).
void advance(Ensemble& ensemble, const TransitionKernel& kernel, const ParameterVector& theta_k,
             const ParameterVector& theta_next, const AdvanceOptions& options = {});

/// Drifted-kernel move from t_k to t_next with the zeta increment.
void advance_drifted(Ensemble& ensemble, const FlowFields& fields, double t_k, double t_next,
                     double h, double eps, bool zero_noise = false);

WeightedEstimate reweighted_expectation(const Ensemble& ensemble, const ObservableFn& f);

/// log_z_ref + (log_z_resample_offset + log_mean_exp(a)).
double estimate_log_z(const Ensemble& ensemble);

/// sqrt(resample variance + 1/ESS - 1/N).
double log_z_std_error(const Ensemble& ensemble);

/// (sum e^a)^2 / sum e^{2a}, clamped to [1, N].
double ess(std::span<const double> log_weights);
double ess(const Ensemble& ensemble);

/// Systematic resampling on the normalized weights. Resets all a to 0 and
/// folds log_mean_exp(a) into the offset, so estimate_log_z is unchanged.
void systematic_resample(Ensemble& ensemble, Rng& rng);

/// Resamples (with ensemble.control) when ESS < tau * N. Throws
/// DegenerateWeights when ESS < 1 + 1e-9 N.
bool maybe_resample(Ensemble& ensemble, double tau);

namespace serial {

// Single-threaded references for `advance` and `advance_drifted`.
void advance(Ensemble& ensemble, const TransitionKernel& kernel, const ParameterVector& theta_k,
             const ParameterVector& theta_next, const AdvanceOptions& options = {});
void advance_drifted(Ensemble& ensemble, const FlowFields& fields, double t_k, double t_next,
                     double h, double eps, bool zero_noise = false);

}  // namespace serial
}  // namespace jarz
