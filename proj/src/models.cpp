#include "jarz/models.hpp"

#include <cmath>
#include <string>

#include "jarz/error.hpp"

namespace jarz {
namespace {

void require_visible(const ModelDescriptor& model, std::size_t n) {
  if (n != model.visible) {
    throw InvalidArgument("visible dimension " + std::to_string(n) + " does not match model (" +
                          std::to_string(model.visible) + ")");
  }
}

void require_hidden(const ModelDescriptor& model, std::size_t n) {
  if (n != model.hidden) {
    throw InvalidArgument("hidden dimension " + std::to_string(n) + " does not match model (" +
                          std::to_string(model.hidden) + ")");
  }
}

void require_binary(std::span<const double> units, const char* block) {
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] != 0.0 && units[i] != 1.0) {
      throw InvalidArgument(std::string("non-binary ") + block + " unit at index " +
                            std::to_string(i));
    }
  }
}

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidArgument(std::string("non-finite ") + what + " at index " + std::to_string(i));
    }
  }
}

// Read-only view of RBM parameters; W is row-major visible x hidden.
struct Rbm {
  std::size_t nv, nh;
  std::span<const double> w, b, c, log_var;

  Rbm(const ModelDescriptor& m, const ParameterVector& theta) : nv(m.visible), nh(m.hidden) {
    const auto l = layout_of(m);
    w = theta.segment(l.weights);
    b = theta.segment(l.visible_bias);
    c = theta.segment(l.hidden_bias);
    log_var = theta.segment(l.log_variance);
  }
  double weight(std::size_t j, std::size_t k) const { return w[j * nh + k]; }
  double sigma(std::size_t j) const { return std::exp(0.5 * log_var[j]); }
};

// Per-component log joint terms of the mixture and their log-sum-exp.
struct MixtureTerms {
  std::vector<double> log_terms;  // log w_c + log N(x; mu_c, s_c^2)
  std::vector<double> weights;    // softmax(logits)
  double total = 0.0;

  MixtureTerms(const ModelDescriptor& m, const ParameterVector& theta, std::span<const double> x) {
    const auto l = layout_of(m);
    const auto mean = theta.segment(l.mean);
    const auto log_scale = theta.segment(l.log_scale);
    const auto logits = theta.segment(l.logits);
    const double log_norm = log_sum_exp(logits);
    const std::size_t d = m.visible;
    log_terms.resize(m.components);
    weights.resize(m.components);
    for (std::size_t c = 0; c < m.components; ++c) {
      weights[c] = std::exp(logits[c] - log_norm);
      double t = logits[c] - log_norm;
      for (std::size_t j = 0; j < d; ++j) {
        const double s = std::exp(log_scale[c * d + j]);
        const double z = (x[j] - mean[c * d + j]) / s;
        t += -0.5 * z * z - log_scale[c * d + j] - 0.5 * kLog2Pi;
      }
      log_terms[c] = t;
    }
    total = log_sum_exp(log_terms);
  }
  double responsibility(std::size_t c) const { return std::exp(log_terms[c] - total); }
};

// Pre-activation of the hidden layer: c_k + sum_j u_j W_jk, with u = v for the
// Bernoulli machine and u = v / sigma for the Gaussian one.
std::vector<double> hidden_field(const ModelDescriptor& m, const Rbm& r,
                                 std::span<const double> v) {
  std::vector<double> z(r.c.begin(), r.c.end());
  for (std::size_t j = 0; j < r.nv; ++j) {
    const double u = m.family == Family::gaussian_rbm ? v[j] / r.sigma(j) : v[j];
    if (u == 0.0) continue;
    for (std::size_t k = 0; k < r.nh; ++k) z[k] += u * r.weight(j, k);
  }
  return z;
}

// (W h)_j
std::vector<double> weighted_hidden(const Rbm& r, std::span<const double> h) {
  std::vector<double> a(r.nv, 0.0);
  for (std::size_t j = 0; j < r.nv; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < r.nh; ++k) s += r.weight(j, k) * h[k];
    a[j] = s;
  }
  return a;
}

}  // namespace

void validate_parameters(const ModelDescriptor& model, const ParameterVector& theta) {
  model.validate();
  if (theta.size() != model.parameter_count()) {
    throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) +
                          " entries, model expects " + std::to_string(model.parameter_count()));
  }
  require_finite(theta.values, "parameter");
}

void validate_state(const ModelDescriptor& model, const StatePoint& x) {
  require_visible(model, x.visible.size());
  if (model.is_rbm()) {
    require_hidden(model, x.hidden.size());
    require_binary(x.hidden, "hidden");
  } else if (!x.hidden.empty()) {
    throw InvalidArgument("continuous family state must not carry hidden units");
  }
  if (model.family == Family::bernoulli_rbm) {
    require_binary(x.visible, "visible");
  } else {
    require_finite(x.visible, "state coordinate");
  }
}

double energy(const ModelDescriptor& model, const ParameterVector& theta, const StatePoint& x) {
  validate_parameters(model, theta);
  validate_state(model, x);
  const auto l = layout_of(model);
  switch (model.family) {
    case Family::gaussian: {
      const auto mean = theta.segment(l.mean);
      const auto log_scale = theta.segment(l.log_scale);
      double u = 0.0;
      for (std::size_t j = 0; j < model.visible; ++j) {
        const double z = (x.visible[j] - mean[j]) * std::exp(-log_scale[j]);
        u += 0.5 * z * z;
      }
      return u;
    }
    case Family::gaussian_mixture:
      return -MixtureTerms(model, theta, x.visible).total;
    case Family::bernoulli_rbm: {
      const Rbm r(model, theta);
      double u = 0.0;
      for (std::size_t j = 0; j < r.nv; ++j) u -= r.b[j] * x.visible[j];
      for (std::size_t k = 0; k < r.nh; ++k) u -= r.c[k] * x.hidden[k];
      for (std::size_t j = 0; j < r.nv; ++j) {
        if (x.visible[j] == 0.0) continue;
        for (std::size_t k = 0; k < r.nh; ++k) u -= r.weight(j, k) * x.hidden[k];
      }
      return u;
    }
    case Family::gaussian_rbm: {
      const Rbm r(model, theta);
      const auto a = weighted_hidden(r, x.hidden);
      double u = 0.0;
      for (std::size_t j = 0; j < r.nv; ++j) {
        const double s = r.sigma(j);
        const double dv = x.visible[j] - r.b[j];
        u += dv * dv / (2.0 * s * s) - x.visible[j] / s * a[j];
      }
      for (std::size_t k = 0; k < r.nh; ++k) u -= r.c[k] * x.hidden[k];
      return u;
    }
  }
  return 0.0;
}

std::vector<double> grad_x_energy(const ModelDescriptor& model, const ParameterVector& theta,
                                  const StatePoint& x) {
  if (model.family == Family::bernoulli_rbm) {
    throw DomainError("grad_x_energy: the Bernoulli RBM has no continuous coordinates");
  }
  validate_parameters(model, theta);
  validate_state(model, x);
  const auto l = layout_of(model);
  const std::size_t d = model.visible;
  std::vector<double> g(d, 0.0);
  switch (model.family) {
    case Family::gaussian: {
      const auto mean = theta.segment(l.mean);
      const auto log_scale = theta.segment(l.log_scale);
      for (std::size_t j = 0; j < d; ++j) {
        g[j] = (x.visible[j] - mean[j]) * std::exp(-2.0 * log_scale[j]);
      }
      break;
    }
    case Family::gaussian_mixture: {
      const MixtureTerms terms(model, theta, x.visible);
      const auto mean = theta.segment(l.mean);
      const auto log_scale = theta.segment(l.log_scale);
      for (std::size_t c = 0; c < model.components; ++c) {
        const double r = terms.responsibility(c);
        for (std::size_t j = 0; j < d; ++j) {
          g[j] += r * (x.visible[j] - mean[c * d + j]) * std::exp(-2.0 * log_scale[c * d + j]);
        }
      }
      break;
    }
    case Family::gaussian_rbm: {
      const Rbm r(model, theta);
      const auto a = weighted_hidden(r, x.hidden);
      for (std::size_t j = 0; j < d; ++j) {
        const double s = r.sigma(j);
        g[j] = (x.visible[j] - r.b[j]) / (s * s) - a[j] / s;
      }
      break;
    }
    case Family::bernoulli_rbm:
      break;
  }
  return g;
}

std::vector<double> grad_theta_energy(const ModelDescriptor& model,
                                      const ParameterVector& theta, const StatePoint& x) {
  validate_parameters(model, theta);
  validate_state(model, x);
  const auto l = layout_of(model);
  std::vector<double> g(l.total, 0.0);
  const std::size_t d = model.visible;
  switch (model.family) {
    case Family::gaussian: {
      const auto mean = theta.segment(l.mean);
      const auto log_scale = theta.segment(l.log_scale);
      for (std::size_t j = 0; j < d; ++j) {
        const double inv_var = std::exp(-2.0 * log_scale[j]);
        const double dx = x.visible[j] - mean[j];
        g[l.mean.offset + j] = -dx * inv_var;
        g[l.log_scale.offset + j] = -dx * dx * inv_var;
      }
      break;
    }
    case Family::gaussian_mixture: {
      const MixtureTerms terms(model, theta, x.visible);
      const auto mean = theta.segment(l.mean);
      const auto log_scale = theta.segment(l.log_scale);
      for (std::size_t c = 0; c < model.components; ++c) {
        const double r = terms.responsibility(c);
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t i = c * d + j;
          const double inv_var = std::exp(-2.0 * log_scale[i]);
          const double dx = x.visible[j] - mean[i];
          g[l.mean.offset + i] = -r * dx * inv_var;
          g[l.log_scale.offset + i] = -r * (dx * dx * inv_var - 1.0);
        }
        g[l.logits.offset + c] = -(r - terms.weights[c]);
      }
      break;
    }
    case Family::bernoulli_rbm: {
      const Rbm r(model, theta);
      for (std::size_t j = 0; j < r.nv; ++j) {
        for (std::size_t k = 0; k < r.nh; ++k) {
          g[l.weights.offset + j * r.nh + k] = -x.visible[j] * x.hidden[k];
        }
        g[l.visible_bias.offset + j] = -x.visible[j];
      }
      for (std::size_t k = 0; k < r.nh; ++k) g[l.hidden_bias.offset + k] = -x.hidden[k];
      break;
    }
    case Family::gaussian_rbm: {
      const Rbm r(model, theta);
      const auto a = weighted_hidden(r, x.hidden);
      for (std::size_t j = 0; j < r.nv; ++j) {
        const double s = r.sigma(j);
        const double v = x.visible[j];
        const double dv = v - r.b[j];
        for (std::size_t k = 0; k < r.nh; ++k) {
          g[l.weights.offset + j * r.nh + k] = -v * x.hidden[k] / s;
        }
        g[l.visible_bias.offset + j] = -dv / (s * s);
        g[l.log_variance.offset + j] = -dv * dv / (2.0 * s * s) + v * a[j] / (2.0 * s);
      }
      for (std::size_t k = 0; k < r.nh; ++k) g[l.hidden_bias.offset + k] = -x.hidden[k];
      break;
    }
  }
  return g;
}

bool is_analytic(const ModelDescriptor& model, const ParameterVector& theta) {
  if (!model.is_rbm()) return true;
  for (double w : theta.segment(layout_of(model).weights)) {
    if (w != 0.0) return false;
  }
  return true;
}

StatePoint sample_reference(const ModelDescriptor& model, const ParameterVector& theta0,
                            Rng& rng) {
  validate_parameters(model, theta0);
  if (!is_analytic(model, theta0)) {
    throw DomainError("sample_reference: RBM with W != 0 cannot be sampled exactly");
  }
  const auto l = layout_of(model);
  const std::size_t d = model.visible;
  StatePoint x;
  x.visible.resize(d);
  switch (model.family) {
    case Family::gaussian: {
      const auto mean = theta0.segment(l.mean);
      const auto log_scale = theta0.segment(l.log_scale);
      for (std::size_t j = 0; j < d; ++j) {
        x.visible[j] = mean[j] + std::exp(log_scale[j]) * standard_normal(rng);
      }
      break;
    }
    case Family::gaussian_mixture: {
      const auto logits = theta0.segment(l.logits);
      const double log_norm = log_sum_exp(logits);
      const double u = uniform01(rng);
      std::size_t c = 0;
      double cumulative = 0.0;
      for (; c + 1 < model.components; ++c) {
        cumulative += std::exp(logits[c] - log_norm);
        if (u < cumulative) break;
      }
      const auto mean = theta0.segment(l.mean);
      const auto log_scale = theta0.segment(l.log_scale);
      for (std::size_t j = 0; j < d; ++j) {
        x.visible[j] = mean[c * d + j] + std::exp(log_scale[c * d + j]) * standard_normal(rng);
      }
      break;
    }
    case Family::bernoulli_rbm:
    case Family::gaussian_rbm: {
      const Rbm r(model, theta0);
      for (std::size_t j = 0; j < d; ++j) {
        if (model.family == Family::bernoulli_rbm) {
          x.visible[j] = uniform01(rng) < sigmoid(r.b[j]) ? 1.0 : 0.0;
        } else {
          x.visible[j] = r.b[j] + r.sigma(j) * standard_normal(rng);
        }
      }
      x.hidden.resize(model.hidden);
      for (std::size_t k = 0; k < model.hidden; ++k) {
        x.hidden[k] = uniform01(rng) < sigmoid(r.c[k]) ? 1.0 : 0.0;
      }
      break;
    }
  }
  return x;
}

double log_z_reference(const ModelDescriptor& model, const ParameterVector& theta0) {
  validate_parameters(model, theta0);
  if (!is_analytic(model, theta0)) {
    throw DomainError("log_z_reference: RBM with W != 0 has no closed-form partition function");
  }
  const auto l = layout_of(model);
  switch (model.family) {
    case Family::gaussian: {
      double z = 0.5 * static_cast<double>(model.visible) * kLog2Pi;
      for (double s : theta0.segment(l.log_scale)) z += s;
      return z;
    }
    case Family::gaussian_mixture:
      return 0.0;
    case Family::bernoulli_rbm: {
      double z = 0.0;
      for (double b : theta0.segment(l.visible_bias)) z += softplus(b);
      for (double c : theta0.segment(l.hidden_bias)) z += softplus(c);
      return z;
    }
    case Family::gaussian_rbm: {
      double z = 0.0;
      for (double lv : theta0.segment(l.log_variance)) z += 0.5 * (kLog2Pi + lv);
      for (double c : theta0.segment(l.hidden_bias)) z += softplus(c);
      return z;
    }
  }
  return 0.0;
}

std::vector<double> hidden_logits(const ModelDescriptor& model, const ParameterVector& theta,
                                  std::span<const double> visible) {
  if (!model.is_rbm()) throw DomainError("hidden_logits requires an RBM family");
  validate_parameters(model, theta);
  require_visible(model, visible.size());
  if (model.family == Family::bernoulli_rbm) {
    require_binary(visible, "visible");
  } else {
    require_finite(visible, "visible unit");
  }
  return hidden_field(model, Rbm(model, theta), visible);
}

std::vector<double> visible_logits(const ModelDescriptor& model, const ParameterVector& theta,
                                   std::span<const double> hidden) {
  if (model.family != Family::bernoulli_rbm) {
    throw DomainError("visible_logits requires the Bernoulli RBM");
  }
  validate_parameters(model, theta);
  require_hidden(model, hidden.size());
  require_binary(hidden, "hidden");
  const Rbm r(model, theta);
  auto z = weighted_hidden(r, hidden);
  for (std::size_t j = 0; j < r.nv; ++j) z[j] += r.b[j];
  return z;
}

std::vector<double> conditional_hidden(const ModelDescriptor& model,
                                       const ParameterVector& theta,
                                       std::span<const double> visible) {
  auto z = hidden_logits(model, theta, visible);
  for (double& p : z) p = sigmoid(p);
  return z;
}

VisibleConditional conditional_visible(const ModelDescriptor& model,
                                       const ParameterVector& theta,
                                       std::span<const double> hidden) {
  if (!model.is_rbm()) throw DomainError("conditional_visible requires an RBM family");
  validate_parameters(model, theta);
  require_hidden(model, hidden.size());
  require_binary(hidden, "hidden");
  const Rbm r(model, theta);
  const auto a = weighted_hidden(r, hidden);
  VisibleConditional out;
  out.mean.resize(r.nv);
  out.variance.resize(r.nv);
  for (std::size_t j = 0; j < r.nv; ++j) {
    if (model.family == Family::bernoulli_rbm) {
      const double p = sigmoid(r.b[j] + a[j]);
      out.mean[j] = p;
      out.variance[j] = p * (1.0 - p);
    } else {
      const double s = r.sigma(j);
      out.mean[j] = r.b[j] + s * a[j];
      out.variance[j] = s * s;
    }
  }
  return out;
}

double marginal_energy(const ModelDescriptor& model, const ParameterVector& theta,
                       std::span<const double> row) {
  if (!model.is_rbm()) return energy(model, theta, state_from_row(model, row));
  validate_parameters(model, theta);
  validate_state(model, state_from_row(model, row));
  const Rbm r(model, theta);
  const auto z = hidden_field(model, r, row);
  double f = 0.0;
  for (std::size_t j = 0; j < r.nv; ++j) {
    if (model.family == Family::bernoulli_rbm) {
      f -= r.b[j] * row[j];
    } else {
      const double s = r.sigma(j);
      const double dv = row[j] - r.b[j];
      f += dv * dv / (2.0 * s * s);
    }
  }
  for (double zk : z) f -= softplus(zk);
  return f;
}

std::vector<double> marginal_grad_theta_energy(const ModelDescriptor& model,
                                               const ParameterVector& theta,
                                               std::span<const double> row) {
  StatePoint x = state_from_row(model, row);
  if (!model.is_rbm()) return grad_theta_energy(model, theta, x);
  // dU/dtheta is affine in h, so E[dU/dtheta | v] is dU/dtheta at h = P(h = 1 | v).
  // grad_theta_energy validates binary h, so the expectation is formed here.
  validate_state(model, x);
  const auto p = conditional_hidden(model, theta, row);
  const auto l = layout_of(model);
  auto g = grad_theta_energy(model, theta, x);  // h = 0 part
  const Rbm r(model, theta);
  for (std::size_t k = 0; k < r.nh; ++k) g[l.hidden_bias.offset + k] = -p[k];
  for (std::size_t j = 0; j < r.nv; ++j) {
    const double u = model.family == Family::gaussian_rbm ? row[j] / r.sigma(j) : row[j];
    for (std::size_t k = 0; k < r.nh; ++k) g[l.weights.offset + j * r.nh + k] = -u * p[k];
    if (model.family == Family::gaussian_rbm) {
      double a = 0.0;
      for (std::size_t k = 0; k < r.nh; ++k) a += r.weight(j, k) * p[k];
      g[l.log_variance.offset + j] += row[j] * a / (2.0 * r.sigma(j));
    }
  }
  return g;
}

StatePoint state_from_row(const ModelDescriptor& model, std::span<const double> row) {
  StatePoint x;
  x.visible.assign(row.begin(), row.end());
  if (model.is_rbm()) x.hidden.assign(model.hidden, 0.0);
  return x;
}

ParameterVector random_parameters(const ModelDescriptor& model, double scale, Rng& rng) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("random parameter scale must be finite and non-negative");
  }
  ParameterVector theta = zero_parameters(model);
  for (double& v : theta.values) v = scale * standard_normal(rng);
  return theta;
}

}  // namespace jarz
