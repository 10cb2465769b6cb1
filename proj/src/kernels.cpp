#include "jarz/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "jarz/error.hpp"
#include "jarz/models.hpp"

namespace jarz {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be a finite positive number");
  }
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
  }
}

void require_same_dim(std::size_t expected, const StatePoint& x) {
  if (x.visible.size() != expected || !x.hidden.empty()) {
    throw InvalidArgument("state dimension " + std::to_string(x.visible.size()) +
                          " does not match field dimension " + std::to_string(expected));
  }
}

// log N(to; from + h v, 2 h eps I), with v = [sign * b + eps s](t, from).
double drifted_log_density(const FlowFields& fields, double t, const StatePoint& from,
                           const StatePoint& to, double h, double eps, double sign) {
  require_positive(h, "h");
  require_positive(eps, "epsilon");
  const std::size_t d = fields.dim();
  require_same_dim(d, from);
  require_same_dim(d, to);
  const auto b = fields.drift(t, from.visible);
  const auto s = fields.score(t, from.visible);
  double r2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double r = to.visible[i] - from.visible[i] - h * (sign * b[i] + eps * s[i]);
    r2 += r * r;
  }
  const double var2 = 4.0 * h * eps;
  return -0.5 * static_cast<double>(d) * std::log(std::numbers::pi * var2) - r2 / var2;
}

// alpha (sign = +1) or lambda (sign = -1) of the drifted recursion at (t, x, y):
//   U(t, x) - (y - x).[sign b + eps s](t, x) / (2 eps) + h |sign b + eps s|^2 / (4 eps)
double alpha_or_lambda(const FlowFields& fields, double t, std::span<const double> x,
                       std::span<const double> y, double h, double eps, double sign) {
  const auto b = fields.drift(t, x);
  const auto s = fields.score(t, x);
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = sign * b[i] + eps * s[i];
    lin += (y[i] - x[i]) * v;
    quad += v * v;
  }
  return fields.potential(t, x) - lin / (2.0 * eps) + h * quad / (4.0 * eps);
}

void require_family(const ModelDescriptor& model, Family family, const char* op) {
  if (model.family != family) {
    throw InvalidArgument(std::string(op) + " is not defined for the " +
                          std::string(to_string(model.family)) + " family");
  }
}

void sample_bernoulli(std::span<const double> logits, std::vector<double>& out, Rng& rng) {
  out.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = uniform01(rng) < sigmoid(logits[i]) ? 1.0 : 0.0;
  }
}

double bernoulli_log_density(std::span<const double> logits, std::span<const double> units) {
  double lp = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) lp += bernoulli_log_prob(units[i], logits[i]);
  return lp;
}

// log P(v | h) for the Gaussian-Bernoulli machine.
double gaussian_visible_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                                    std::span<const double> hidden, std::span<const double> v) {
  const auto cond = conditional_visible(model, theta, hidden);
  double lp = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double r = v[j] - cond.mean[j];
    lp -= r * r / (2.0 * cond.variance[j]) + 0.5 * (kLog2Pi + std::log(cond.variance[j]));
  }
  return lp;
}

}  // namespace

std::string_view to_string(ScanOrder order) {
  return order == ScanOrder::forward ? "forward" : "reversed";
}

ScanOrder parse_scan_order(std::string_view name) {
  if (name == "forward") return ScanOrder::forward;
  if (name == "reversed") return ScanOrder::reversed;
  throw InvalidArgument("unknown scan order '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::ula: return "ula";
    case KernelKind::gibbs: return "gibbs";
    case KernelKind::drifted: return "drifted";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "ula") return KernelKind::ula;
  if (name == "gibbs") return KernelKind::gibbs;
  if (name == "drifted") return KernelKind::drifted;
  throw InvalidArgument("unknown kernel kind '" + std::string(name) + "'");
}

void KernelConfig::validate() const {
  if (kind != KernelKind::gibbs) require_positive(h, "kernel.h");
  require_positive(epsilon, "kernel.epsilon");
}

// ---------------------------------------------------------------------------

StatePoint ula_step(const ModelDescriptor& model, const ParameterVector& theta,
                    const StatePoint& x, double h, Rng& rng, bool zero_noise) {
  require_positive(h, "h");
  const auto g = grad_x_energy(model, theta, x);
  require_finite(g, "energy gradient in ula_step");
  StatePoint y = x;
  const double noise = std::sqrt(2.0 * h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = zero_noise ? 0.0 : standard_normal(rng);
    y.visible[i] = x.visible[i] - h * g[i] + noise * xi;
  }
  return y;
}

double ula_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                       const StatePoint& from, const StatePoint& to, double h) {
  require_positive(h, "h");
  validate_state(model, to);
  const auto g = grad_x_energy(model, theta, from);
  double r2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = to.visible[i] - from.visible[i] + h * g[i];
    r2 += r * r;
  }
  return -0.5 * static_cast<double>(g.size()) * std::log(4.0 * std::numbers::pi * h) - r2 / (4.0 * h);
}

double ula_alpha(const ModelDescriptor& model, const ParameterVector& theta,
                 const StatePoint& x, const StatePoint& y, double h) {
  require_positive(h, "h");
  validate_state(model, y);
  const auto g = grad_x_energy(model, theta, x);
  double lin = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) lin += (y.visible[i] - x.visible[i]) * g[i];
  return energy(model, theta, x) + 0.5 * lin + 0.25 * h * dot(g, g);
}

// ---------------------------------------------------------------------------

StatePoint drifted_step(const FlowFields& fields, double t, const StatePoint& x, double h,
                        double eps, Rng& rng, bool zero_noise) {
  require_positive(h, "h");
  require_positive(eps, "epsilon");
  require_same_dim(fields.dim(), x);
  const auto b = fields.drift(t, x.visible);
  const auto s = fields.score(t, x.visible);
  require_finite(b, "drift");
  require_finite(s, "score");
  StatePoint y = x;
  const double noise = std::sqrt(2.0 * h * eps);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double xi = zero_noise ? 0.0 : standard_normal(rng);
    y.visible[i] = x.visible[i] + h * (b[i] + eps * s[i]) + noise * xi;
  }
  return y;
}

double drifted_log_forward(const FlowFields& fields, double t, const StatePoint& from,
                           const StatePoint& to, double h, double eps) {
  return drifted_log_density(fields, t, from, to, h, eps, +1.0);
}

double drifted_log_backward(const FlowFields& fields, double t, const StatePoint& from,
                            const StatePoint& to, double h, double eps) {
  return drifted_log_density(fields, t, from, to, h, eps, -1.0);
}

double zeta_increment(const FlowFields& fields, double t_k, double t_next, const StatePoint& x,
                      const StatePoint& y, double h, double eps) {
  require_positive(h, "h");
  require_positive(eps, "epsilon");
  const std::size_t d = fields.dim();
  require_same_dim(d, x);
  require_same_dim(d, y);
  const auto bx = fields.drift(t_k, x.visible);
  const auto sx = fields.score(t_k, x.visible);
  const auto by = fields.drift(t_next, y.visible);
  const auto sy = fields.score(t_next, y.visible);
  require_finite(bx, "drift");
  require_finite(sx, "score");
  require_finite(by, "drift");
  require_finite(sy, "score");

  double mixed = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    mixed += (x.visible[i] - y.visible[i]) * ((bx[i] - by[i]) / eps + sx[i] + sy[i]);
  }
  const double quadratic = (dot(bx, bx) - dot(by, by)) / eps + eps * (dot(sx, sx) - dot(sy, sy));
  const double cross = dot(bx, sx) + dot(by, sy);
  return fields.potential(t_k, x.visible) - fields.potential(t_next, y.visible) + 0.5 * mixed +
         0.25 * h * quadratic + 0.5 * h * cross;
}

double alpha_lambda_increment(const FlowFields& fields, double t_k, double t_next,
                              const StatePoint& x, const StatePoint& y, double h, double eps) {
  require_positive(h, "h");
  require_positive(eps, "epsilon");
  require_same_dim(fields.dim(), x);
  require_same_dim(fields.dim(), y);
  return alpha_or_lambda(fields, t_k, x.visible, y.visible, h, eps, +1.0) -
         alpha_or_lambda(fields, t_next, y.visible, x.visible, h, eps, -1.0);
}

// ---------------------------------------------------------------------------

double gibbs_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                         const StatePoint& from, const StatePoint& to) {
  require_family(model, Family::bernoulli_rbm, "gibbs_log_density");
  validate_state(model, from);
  validate_state(model, to);
  const auto zh = hidden_logits(model, theta, from.visible);
  const auto zv = visible_logits(model, theta, to.hidden);
  return bernoulli_log_density(zh, to.hidden) + bernoulli_log_density(zv, to.visible);
}

double gibbs_reversed_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                                  const StatePoint& from, const StatePoint& to) {
  require_family(model, Family::bernoulli_rbm, "gibbs_reversed_log_density");
  validate_state(model, from);
  validate_state(model, to);
  const auto zv = visible_logits(model, theta, from.hidden);
  const auto zh = hidden_logits(model, theta, to.visible);
  return bernoulli_log_density(zv, to.visible) + bernoulli_log_density(zh, to.hidden);
}

std::pair<StatePoint, MoveRecord> gibbs_step(const ModelDescriptor& model,
                                             const ParameterVector& theta, const StatePoint& x,
                                             Rng& rng, ScanOrder reverse) {
  require_family(model, Family::bernoulli_rbm, "gibbs_step");
  validate_state(model, x);
  StatePoint y;
  sample_bernoulli(hidden_logits(model, theta, x.visible), y.hidden, rng);
  sample_bernoulli(visible_logits(model, theta, y.hidden), y.visible, rng);
  MoveRecord rec{x, y, 0, gibbs_log_density(model, theta, x, y),
                 reverse == ScanOrder::reversed ? gibbs_reversed_log_density(model, theta, y, x)
                                                : gibbs_log_density(model, theta, y, x)};
  return {std::move(y), std::move(rec)};
}

double gibbs_gauss_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                               const StatePoint& from, const StatePoint& to) {
  require_family(model, Family::gaussian_rbm, "gibbs_gauss_log_density");
  validate_state(model, from);
  validate_state(model, to);
  const auto zh = hidden_logits(model, theta, from.visible);
  return bernoulli_log_density(zh, to.hidden) +
         gaussian_visible_log_density(model, theta, to.hidden, to.visible);
}

double gibbs_gauss_reversed_log_density(const ModelDescriptor& model,
                                        const ParameterVector& theta, const StatePoint& from,
                                        const StatePoint& to) {
  require_family(model, Family::gaussian_rbm, "gibbs_gauss_reversed_log_density");
  validate_state(model, from);
  validate_state(model, to);
  const auto zh = hidden_logits(model, theta, to.visible);
  return gaussian_visible_log_density(model, theta, from.hidden, to.visible) +
         bernoulli_log_density(zh, to.hidden);
}

std::pair<StatePoint, MoveRecord> gibbs_gauss_step(const ModelDescriptor& model,
                                                   const ParameterVector& theta,
                                                   const StatePoint& x, Rng& rng,
                                                   ScanOrder reverse) {
  require_family(model, Family::gaussian_rbm, "gibbs_gauss_step");
  validate_state(model, x);
  StatePoint y;
  sample_bernoulli(hidden_logits(model, theta, x.visible), y.hidden, rng);
  const auto cond = conditional_visible(model, theta, y.hidden);
  y.visible.resize(model.visible);
  for (std::size_t j = 0; j < model.visible; ++j) {
    y.visible[j] = cond.mean[j] + std::sqrt(cond.variance[j]) * standard_normal(rng);
  }
  MoveRecord rec{x, y, 0, gibbs_gauss_log_density(model, theta, x, y),
                 reverse == ScanOrder::reversed
                     ? gibbs_gauss_reversed_log_density(model, theta, y, x)
                     : gibbs_gauss_log_density(model, theta, y, x)};
  return {std::move(y), std::move(rec)};
}

// ---------------------------------------------------------------------------

UlaKernel::UlaKernel(ModelDescriptor model, double h, bool zero_noise)
    : TransitionKernel(model), h_(h), zero_noise_(zero_noise) {
  require_positive(h, "h");
  if (model.family == Family::bernoulli_rbm || model.family == Family::gaussian_rbm) {
    throw InvalidArgument("the ULA kernel needs a continuous family (gaussian, gaussian-mixture)");
  }
}

StatePoint UlaKernel::sample(const ParameterVector& theta, const StatePoint& from,
                             Rng& rng) const {
  return ula_step(model(), theta, from, h_, rng, zero_noise_);
}

double UlaKernel::log_forward(const ParameterVector& theta, const StatePoint& from,
                              const StatePoint& to) const {
  return ula_log_density(model(), theta, from, to, h_);
}

double UlaKernel::log_reverse(const ParameterVector& theta, const StatePoint& from,
                              const StatePoint& to) const {
  return ula_log_density(model(), theta, from, to, h_);
}

GibbsKernel::GibbsKernel(ModelDescriptor model, ScanOrder reverse)
    : TransitionKernel(model), reverse_(reverse) {
  if (!model.is_rbm()) throw InvalidArgument("the Gibbs kernel needs an RBM family");
}

StatePoint GibbsKernel::sample(const ParameterVector& theta, const StatePoint& from,
                               Rng& rng) const {
  if (model().family == Family::bernoulli_rbm) {
    return gibbs_step(model(), theta, from, rng, reverse_).first;
  }
  return gibbs_gauss_step(model(), theta, from, rng, reverse_).first;
}

double GibbsKernel::log_forward(const ParameterVector& theta, const StatePoint& from,
                                const StatePoint& to) const {
  if (model().family == Family::bernoulli_rbm) return gibbs_log_density(model(), theta, from, to);
  return gibbs_gauss_log_density(model(), theta, from, to);
}

double GibbsKernel::log_reverse(const ParameterVector& theta, const StatePoint& from,
                                const StatePoint& to) const {
  if (reverse_ == ScanOrder::forward) return log_forward(theta, from, to);
  if (model().family == Family::bernoulli_rbm) {
    return gibbs_reversed_log_density(model(), theta, from, to);
  }
  return gibbs_gauss_reversed_log_density(model(), theta, from, to);
}

std::unique_ptr<TransitionKernel> make_kernel(const ModelDescriptor& model,
                                              const KernelConfig& config) {
  config.validate();
  switch (config.kind) {
    case KernelKind::ula:
      return std::make_unique<UlaKernel>(model, config.h, config.zero_noise);
    case KernelKind::gibbs:
      return std::make_unique<GibbsKernel>(model, config.scan_order);
    case KernelKind::drifted:
      break;
  }
  throw InvalidArgument("the drifted kernel is driven by flow fields, not model parameters");
}

}  // namespace jarz
