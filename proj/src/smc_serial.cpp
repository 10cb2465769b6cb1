#include <cmath>
#include <string>

#include "jarz/error.hpp"
#include "jarz/models.hpp"
#include "jarz/smc.hpp"

namespace jarz::serial {

void advance(Ensemble& ensemble, const TransitionKernel& kernel, const ParameterVector& theta_k,
             const ParameterVector& theta_next, const AdvanceOptions& options) {
  if (ensemble.walkers.empty()) throw InvalidArgument("advance: empty ensemble");
  if (ensemble.streams.size() != ensemble.walkers.size()) {
    throw InvalidArgument("advance: stream count does not match walker count");
  }
  validate_parameters(kernel.model(), theta_k);
  validate_parameters(kernel.model(), theta_next);
  // Work on a copy so a failure leaves states and weights untouched.
  std::vector<Walker> walkers = ensemble.walkers;
  auto& streams = ensemble.streams;
  const auto& m = kernel.model();
  for (std::size_t i = 0; i < walkers.size(); ++i) {
    StatePoint y = kernel.sample(theta_k, walkers[i].x, streams[i]);
    const double inc = energy(m, theta_k, walkers[i].x) - energy(m, theta_next, y) +
                       kernel.log_reverse(theta_next, y, walkers[i].x) -
                       kernel.log_forward(theta_k, walkers[i].x, y);
    if (!std::isfinite(inc)) {
      throw NumericalError("non-finite weight increment at walker " + std::to_string(i));
    }
    walkers[i].a += options.flip_increment_sign ? -inc : inc;
    walkers[i].x = std::move(y);
  }
  ensemble.walkers = std::move(walkers);
  ++ensemble.step;
}

void advance_drifted(Ensemble& ensemble, const FlowFields& fields, double t_k, double t_next,
                     double h, double eps, bool zero_noise) {
  if (ensemble.walkers.empty()) throw InvalidArgument("advance_drifted: empty ensemble");
  std::vector<Walker> walkers = ensemble.walkers;
  auto& streams = ensemble.streams;
  for (std::size_t i = 0; i < walkers.size(); ++i) {
    StatePoint y = drifted_step(fields, t_k, walkers[i].x, h, eps, streams[i], zero_noise);
    const double inc = zeta_increment(fields, t_k, t_next, walkers[i].x, y, h, eps);
    if (!std::isfinite(inc)) {
      throw NumericalError("non-finite weight increment at walker " + std::to_string(i));
    }
    walkers[i].a += inc;
    walkers[i].x = std::move(y);
  }
  ensemble.walkers = std::move(walkers);
  ++ensemble.step;
}

}  // namespace jarz::serial
