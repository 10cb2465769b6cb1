#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jarz/kernels.hpp"
#include "jarz/smc.hpp"
#include "jarz/types.hpp"

// Cross-entropy training H(theta) = log Z_theta + E_data[U_theta] with
// dH/dtheta = E_data[dU/dtheta] - E_theta[dU/dtheta]. The model term comes from
// the weighted walker ensemble (Jarzynski) or from unweighted CD / PCD chains.
namespace jarz {

enum class DataKind { binary, continuous };

std::string_view to_string(DataKind kind);
DataKind parse_data_kind(std::string_view name);

struct Dataset {
  DataKind kind = DataKind::continuous;
  std::size_t width = 0;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
  // Nonempty, homogeneous width, finite, and 0/1 only for binary data.
  // Errors name the 1-based row and column.
  void validate() const;
};

/// CSV, one sample per row. With `header`, the first line is skipped.
Dataset load_dataset(const std::string& path, DataKind kind, bool header = false);
Dataset parse_dataset(std::string_view text, DataKind kind, bool header = false);
void save_dataset(const std::string& path, const Dataset& data);

// Dataset width must equal the model's visible dimension; binary data goes with
// the Bernoulli RBM only.
void check_compatible(const ModelDescriptor& model, const Dataset& data);

/// n exact draws from rho_theta (visible block). Analytic parameters use
/// sample_reference; a Bernoulli RBM with at most 20 visible units is sampled
/// from its enumerated visible marginal.
Dataset synthetic_dataset(const ModelDescriptor& model, const ParameterVector& theta,
                          std::size_t n, std::uint64_t seed);

enum class Estimator { jarzynski, cd, pcd };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t steps = 100;
  std::size_t walkers = 1000;
  KernelConfig kernel;
  double ess_threshold = 0.5;
  std::size_t batch_size = 0;  // 0: full dataset
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::jarzynski;
  std::size_t cd_steps = 1;

  void validate() const;
};

struct GradientEstimate {
  std::vector<double> value;
  std::vector<double> std_error;
};

struct StepMetrics {
  std::size_t k = 0;
  // log_z + mean_energy; NaN (like log_z and ess) for the CD / PCD estimators.
  double cross_entropy = 0.0;
  double log_z = 0.0;
  double log_z_se = 0.0;
  double mean_energy = 0.0;  // over the full dataset
  double ess = 0.0;
  double grad_norm = 0.0;
  bool resampled = false;
};

struct TrainMetrics {
  std::vector<StepMetrics> steps;
  ParameterVector final_theta;
};

/// Mean of dU/dtheta over the rows (marginal over hidden units for RBMs), with
/// its standard error.
GradientEstimate data_term(const ModelDescriptor& model, const ParameterVector& theta,
                           const std::vector<std::vector<double>>& batch);

/// Data term minus the ensemble's reweighted E_theta[dU/dtheta].
GradientEstimate jarzynski_gradient(const Ensemble& ensemble, const ModelDescriptor& model,
                                    const ParameterVector& theta,
                                    const std::vector<std::vector<double>>& batch);

/// CD-k: data term minus the plain mean of dU/dtheta over chains started at
/// the batch rows and moved k_steps times. Chain i uses streams[i].
GradientEstimate cd_gradient(const ModelDescriptor& model, const ParameterVector& theta,
                             const std::vector<std::vector<double>>& batch, std::size_t k_steps,
                             const TransitionKernel& kernel, std::span<Rng> streams);

struct PersistentChains {
  std::vector<StatePoint> states;
  std::vector<Rng> streams;
};

// Chain i starts at rows[i % rows.size()] with stream (seed, i).
PersistentChains init_chains(const ModelDescriptor& model,
                             const std::vector<std::vector<double>>& rows, std::size_t n,
                             std::uint64_t seed);

/// PCD: one kernel step of every persistent chain, then the CD estimator on
/// the moved chains.
GradientEstimate pcd_gradient(PersistentChains& chains, const ModelDescriptor& model,
                              const ParameterVector& theta,
                              const std::vector<std::vector<double>>& batch,
                              const TransitionKernel& kernel);

/// Per outer step: estimators on the current ensemble, theta update, move with
/// (theta_k, theta_{k+1}), resample when ESS < tau N. Throws NumericalError when
/// the gradient norm exceeds 1e6 or the cross-entropy is not finite.
TrainMetrics train(const ModelDescriptor& model, const ParameterVector& theta0,
                   const Dataset& data, const TrainConfig& config);

/// Probability mass of x < split over mass of x > split for a 1-D continuous
/// model, by trapezoid quadrature of exp(-U) on [lo, hi].
double mode_mass_ratio(const ModelDescriptor& model, const ParameterVector& theta,
                       double split = 0.0, double lo = -12.0, double hi = 12.0,
                       std::size_t points = 24001);

}  // namespace jarz
