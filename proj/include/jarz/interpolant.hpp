#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jarz/kernels.hpp"

// Analytic Gaussian density paths rho(t, .) = N(m(t), gamma(t)^2 I) on t in [0, 1]
// with their score, transport drift and normalized potential.
namespace jarz {

enum class Ramp { linear, smoothstep };

class GaussianPath final : public FlowFields {
 public:
  // m(t) = m0 + (m1 - m0) S(t), gamma(t) = g0 + (g1 - g0) S(t), with S(t) = t
  // (linear) or 3t^2 - 2t^3 (smoothstep).
  GaussianPath(std::vector<double> mean_start, std::vector<double> mean_end, double scale_start,
               double scale_end, Ramp ramp = Ramp::smoothstep);

  // m: 0 -> 2, gamma: 1 -> 0.5, smoothstep, d = 1.
  static GaussianPath benchmark();
  // m and gamma frozen.
  static GaussianPath stationary(std::vector<double> mean, double scale);

  std::size_t dim() const override { return mean_start_.size(); }
  std::vector<double> drift(double t, std::span<const double> x) const override;
  std::vector<double> score(double t, std::span<const double> x) const override;
  double potential(double t, std::span<const double> x) const override;

  std::vector<double> mean(double t) const;
  std::vector<double> mean_rate(double t) const;
  double scale(double t) const;
  double scale_rate(double t) const;

  const std::vector<double>& mean_start() const { return mean_start_; }
  const std::vector<double>& mean_end() const { return mean_end_; }
  double scale_start() const { return scale_start_; }
  double scale_end() const { return scale_end_; }
  Ramp ramp() const { return ramp_; }

 private:
  double s(double t) const;
  double s_rate(double t) const;
  void check(double t, std::span<const double> x) const;

  std::vector<double> mean_start_, mean_end_;
  double scale_start_, scale_end_;
  Ramp ramp_;
};

// -(x - m) / gamma^2
std::vector<double> score_field(const GaussianPath& path, double t, std::span<const double> x);
// mdot + (gammadot / gamma) (x - m)
std::vector<double> drift_field(const GaussianPath& path, double t, std::span<const double> x);
// |x - m|^2 / (2 gamma^2) + (d/2) log(2 pi gamma^2)
double potential_field(const GaussianPath& path, double t, std::span<const double> x);

// |d rho/dt + div(b rho)| at (t, x), with rho = exp(-potential), by central
// differences (time step 1e-6 relative to max(1, |t|)). t must sit at least
// one step inside the time domain of `fields`.
double continuity_residual(const FlowFields& fields, double t, std::span<const double> x);

struct OrderStudyConfig {
  double epsilon = 1.0;
  std::vector<double> h_list;
  std::size_t walkers = 4096;
  // 0: floor(1/h) steps, i.e. the whole of [0, 1].
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

struct OrderStudyRow {
  double h = 0.0;
  std::size_t steps = 0;
  double rms_delta_a = 0.0;     // over walkers and steps
  std::size_t n = 0;            // increments in the RMS
  double log_mean_weight = 0.0;  // log of the ensemble mean of e^{A_K}
  double log_mean_weight_se = 0.0;
  double mean_weight = 0.0;  // ensemble mean of e^{A_K}
  double mean_weight_se = 0.0;
};

struct OrderStudyReport {
  std::vector<OrderStudyRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  bool excluded_largest = false;
  std::uint64_t seed = 0;
};

// Validates an h sweep: at least 4 finite positive values, strictly
// decreasing, spanning at least two octaves. Throws InvalidArgument.
void validate_h_list(std::span<const double> h_list);

// Least-squares slope and intercept of log rms vs log h. The largest h is
// dropped (and flagged) when its RMS is more than 25% off the full fit.
void fit_order(OrderStudyReport& report);

// Drifted-kernel recursion with zeta increments from X_0 ~ rho(0, .) at each h.
// Walker i at sweep index j draws from stream (seed, j * 2^32 + i); reductions
// are serial, so the report does not depend on the thread count.
OrderStudyReport order_study(const FlowFields& fields, const OrderStudyConfig& config,
                             std::span<const double> initial_mean, double initial_scale);
OrderStudyReport order_study(const GaussianPath& path, const OrderStudyConfig& config);

}  // namespace jarz
