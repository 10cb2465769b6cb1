#include "jarz/smc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "jarz/error.hpp"
#include "jarz/models.hpp"

namespace jarz {
namespace {

constexpr std::uint64_t kControlStream = ~std::uint64_t{0};

std::vector<Rng> make_streams(std::size_t n, std::uint64_t seed) {
  std::vector<Rng> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.push_back(make_stream(seed, i));
  return streams;
}

// Normalized weights w_i = exp(a_i - max a). Throws when no walker has a
// finite weight.
std::vector<double> relative_weights(std::span<const double> a, double* max_out = nullptr) {
  if (a.empty()) throw InvalidArgument("empty ensemble");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : a) {
    if (std::isnan(v)) throw NumericalError("NaN log-weight in ensemble");
    m = std::max(m, v);
  }
  if (!std::isfinite(m)) throw DegenerateWeights("all log-weights are -inf (or +inf present)");
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = std::exp(a[i] - m);
  if (max_out) *max_out = m;
  return w;
}

// Delta-method variance of log_mean_exp(a) as an estimator of log E[e^A].
double log_mean_exp_variance(std::span<const double> a) {
  const auto w = relative_weights(a);
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return std::max(0.0, s2 / (s * s) - 1.0 / static_cast<double>(a.size()));
}

void check_parallel_inputs(const Ensemble& e, std::size_t param_count,
                           const ParameterVector& theta_k, const ParameterVector& theta_next) {
  if (e.walkers.empty()) throw InvalidArgument("advance: empty ensemble");
  if (e.streams.size() != e.walkers.size()) {
    throw InvalidArgument("advance: ensemble has " + std::to_string(e.streams.size()) +
                          " streams for " + std::to_string(e.walkers.size()) + " walkers");
  }
  if (theta_k.size() != param_count || theta_next.size() != param_count) {
    throw InvalidArgument("advance: parameter vector does not match the kernel's model");
  }
}

}  // namespace

std::vector<double> Ensemble::log_weights() const {
  std::vector<double> a(walkers.size());
  for (std::size_t i = 0; i < walkers.size(); ++i) a[i] = walkers[i].a;
  return a;
}

Ensemble init_ensemble(const ModelDescriptor& model, const ParameterVector& theta0,
                       std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("ensemble needs at least 2 walkers");
  validate_parameters(model, theta0);
  if (!is_analytic(model, theta0)) {
    throw DomainError("init_ensemble: theta0 is not exactly samplable (RBM with W != 0)");
  }
  Ensemble e;
  e.streams = make_streams(n, seed);
  e.control = make_stream(seed, kControlStream);
  e.walkers.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.walkers[i].x = sample_reference(model, theta0, e.streams[i]);
  e.log_z_ref = log_z_reference(model, theta0);
  return e;
}

Ensemble init_ensemble(std::vector<StatePoint> states, double log_z_ref, std::uint64_t seed) {
  if (states.size() < 2) throw InvalidArgument("ensemble needs at least 2 walkers");
  Ensemble e;
  e.streams = make_streams(states.size(), seed);
  e.control = make_stream(seed, kControlStream);
  e.walkers.resize(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) e.walkers[i].x = std::move(states[i]);
  e.log_z_ref = log_z_ref;
  return e;
}

double jarzynski_increment(const TransitionKernel& kernel, const ParameterVector& theta_k,
                           const ParameterVector& theta_next, const StatePoint& x,
                           const StatePoint& y) {
  const auto& m = kernel.model();
  return energy(m, theta_k, x) - energy(m, theta_next, y) +
         kernel.log_reverse(theta_next, y, x) - kernel.log_forward(theta_k, x, y);
}

void advance(Ensemble& ensemble, const TransitionKernel& kernel, const ParameterVector& theta_k,
             const ParameterVector& theta_next, const AdvanceOptions& options) {
  check_parallel_inputs(ensemble, kernel.model().parameter_count(), theta_k, theta_next);
  validate_parameters(kernel.model(), theta_k);
  validate_parameters(kernel.model(), theta_next);

  const std::size_t n = ensemble.size();
  std::vector<StatePoint> next(n);
  std::vector<double> increment(n);
  std::vector<std::exception_ptr> failure(n);
  const auto count = static_cast<long long>(n);

#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const StatePoint& x = ensemble.walkers[i].x;
      next[i] = kernel.sample(theta_k, x, ensemble.streams[i]);
      increment[i] = jarzynski_increment(kernel, theta_k, theta_next, x, next[i]);
    } catch (...) {
      failure[i] = std::current_exception();
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (failure[i]) std::rethrow_exception(failure[i]);
    if (!std::isfinite(increment[i])) {
      throw NumericalError("non-finite weight increment at walker " + std::to_string(i));
    }
  }
  const double sign = options.flip_increment_sign ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    ensemble.walkers[i].x = std::move(next[i]);
    ensemble.walkers[i].a += sign * increment[i];
  }
  ++ensemble.step;
}

void advance_drifted(Ensemble& ensemble, const FlowFields& fields, double t_k, double t_next,
                     double h, double eps, bool zero_noise) {
  if (ensemble.walkers.empty()) throw InvalidArgument("advance_drifted: empty ensemble");
  const std::size_t n = ensemble.size();
  std::vector<StatePoint> next(n);
  std::vector<double> increment(n);
  std::vector<std::exception_ptr> failure(n);
  const auto count = static_cast<long long>(n);

#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const StatePoint& x = ensemble.walkers[i].x;
      next[i] = drifted_step(fields, t_k, x, h, eps, ensemble.streams[i], zero_noise);
      increment[i] = zeta_increment(fields, t_k, t_next, x, next[i], h, eps);
    } catch (...) {
      failure[i] = std::current_exception();
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (failure[i]) std::rethrow_exception(failure[i]);
    if (!std::isfinite(increment[i])) {
      throw NumericalError("non-finite weight increment at walker " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    ensemble.walkers[i].x = std::move(next[i]);
    ensemble.walkers[i].a += increment[i];
  }
  ++ensemble.step;
}

WeightedEstimate reweighted_expectation(const Ensemble& ensemble, const ObservableFn& f) {
  const auto a = ensemble.log_weights();
  const auto w = relative_weights(a);
  const std::size_t n = w.size();
  std::vector<std::vector<double>> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = f(ensemble.walkers[i].x);
  const std::size_t dim = values[0].size();

  double total = 0.0;
  for (double v : w) total += v;
  WeightedEstimate est;
  est.value.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i].size() != dim) throw InvalidArgument("observable changed length across walkers");
    for (std::size_t j = 0; j < dim; ++j) est.value[j] += w[i] * values[i][j];
  }
  for (double& v : est.value) v /= total;

  est.std_error.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w[i] / total;
    for (std::size_t j = 0; j < dim; ++j) {
      const double r = values[i][j] - est.value[j];
      est.std_error[j] += wi * wi * r * r;
    }
  }
  for (double& s : est.std_error) s = std::sqrt(s);
  est.ess = ess(a);
  est.n_effective_fraction = est.ess / static_cast<double>(n);
  return est;
}

double estimate_log_z(const Ensemble& ensemble) {
  const auto a = ensemble.log_weights();
  relative_weights(a);  // degenerate-weight check
  return ensemble.log_z_ref + (ensemble.log_z_resample_offset + log_mean_exp(a));
}

double log_z_std_error(const Ensemble& ensemble) {
  return std::sqrt(ensemble.log_z_resample_variance +
                   log_mean_exp_variance(ensemble.log_weights()));
}

double ess(std::span<const double> log_weights) {
  const auto w = relative_weights(log_weights);
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return std::clamp(s * s / s2, 1.0, static_cast<double>(w.size()));
}

double ess(const Ensemble& ensemble) { return ess(ensemble.log_weights()); }

void systematic_resample(Ensemble& ensemble, Rng& rng) {
  const auto a = ensemble.log_weights();
  const auto w = relative_weights(a);
  const std::size_t n = w.size();

  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += w[i];
    cumulative[i] = total;
  }
  const double spacing = total / static_cast<double>(n);
  double position = uniform01(rng) * spacing;
  std::vector<Walker> offspring;
  offspring.reserve(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (j + 1 < n && cumulative[j] <= position) ++j;
    offspring.push_back(Walker{ensemble.walkers[j].x, 0.0});
    position += spacing;
  }

  ensemble.log_z_resample_variance += log_mean_exp_variance(a);
  ensemble.log_z_resample_offset = ensemble.log_z_resample_offset + log_mean_exp(a);
  ensemble.walkers = std::move(offspring);
  ensemble.resample_steps.push_back(ensemble.step);
}

bool maybe_resample(Ensemble& ensemble, double tau) {
  const double n = static_cast<double>(ensemble.size());
  const double e = ess(ensemble);
  if (e < 1.0 + 1e-9 * n) {
    throw DegenerateWeights("ESS " + std::to_string(e) + " collapsed at step " +
                            std::to_string(ensemble.step) + "; protocol too aggressive");
  }
  if (e < tau * n) {
    systematic_resample(ensemble, ensemble.control);
    return true;
  }
  return false;
}

}  // namespace jarz
