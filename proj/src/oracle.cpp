#include "jarz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jarz/error.hpp"
#include "jarz/models.hpp"
#include "jarz/numeric.hpp"

namespace jarz {
namespace {

constexpr std::size_t kChunk = 4096;

std::size_t state_count(const ModelDescriptor& model) {
  model.validate();
  if (model.family == Family::bernoulli_rbm) {
    const std::size_t bits = model.visible + model.hidden;
    if (bits > 24) throw DomainError("oracle too large: 2^" + std::to_string(bits) + " states");
    return std::size_t{1} << bits;
  }
  if (model.family == Family::gaussian_rbm) {
    if (model.hidden > 20) {
      throw DomainError("oracle too large: 2^" + std::to_string(model.hidden) + " hidden states");
    }
    return std::size_t{1} << model.hidden;
  }
  throw DomainError("enumerate_oracle supports the RBM families only");
}

// Partial log-domain sums over a contiguous block of states, all relative to
// the block's own maximum log-weight.
struct Partial {
  double max_log_weight = -std::numeric_limits<double>::infinity();
  double mass = 0.0;
  std::vector<std::vector<double>> moments;
};

// Per-state contribution: log-weight and the observable values.
struct Term {
  double log_weight = 0.0;
  std::vector<std::vector<double>> values;
};

template <typename TermFn>
Partial accumulate_block(std::size_t begin, std::size_t end, std::size_t n_obs, TermFn&& term_at) {
  std::vector<Term> terms;
  terms.reserve(end - begin);
  Partial p;
  for (std::size_t s = begin; s < end; ++s) {
    terms.push_back(term_at(s));
    p.max_log_weight = std::max(p.max_log_weight, terms.back().log_weight);
  }
  p.moments.resize(n_obs);
  for (const Term& t : terms) {
    const double w = std::exp(t.log_weight - p.max_log_weight);
    p.mass += w;
    for (std::size_t o = 0; o < n_obs; ++o) {
      auto& m = p.moments[o];
      if (m.empty()) m.assign(t.values[o].size(), 0.0);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += w * t.values[o][i];
    }
  }
  return p;
}

OracleResult combine(const std::vector<Partial>& parts, const std::vector<std::string>& names) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : parts) top = std::max(top, p.max_log_weight);
  if (!std::isfinite(top)) throw NumericalError("enumerate_oracle: no state has finite weight");
  double mass = 0.0;
  std::vector<std::vector<double>> moments(names.size());
  for (const auto& p : parts) {
    const double scale = std::exp(p.max_log_weight - top);
    mass += scale * p.mass;
    for (std::size_t o = 0; o < names.size(); ++o) {
      if (moments[o].empty()) moments[o].assign(p.moments[o].size(), 0.0);
      for (std::size_t i = 0; i < moments[o].size(); ++i) moments[o][i] += scale * p.moments[o][i];
    }
  }
  OracleResult out;
  out.log_z = top + std::log(mass);
  for (std::size_t o = 0; o < names.size(); ++o) {
    for (double& v : moments[o]) v /= mass;
    out.expectations[names[o]] = std::move(moments[o]);
  }
  return out;
}

template <typename TermFn>
OracleResult run_chunked(std::size_t n_states, const std::vector<std::string>& names,
                         TermFn term_at) {
  const std::size_t n_chunks = (n_states + kChunk - 1) / kChunk;
  std::vector<Partial> parts(n_chunks);
  const auto n = static_cast<long long>(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long c = 0; c < n; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n_states, begin + kChunk);
    parts[static_cast<std::size_t>(c)] = accumulate_block(begin, end, names.size(), term_at);
  }
  return combine(parts, names);
}

ObservableFn builtin_discrete(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::string& name) {
  if (name == kObservableOne) return [](const StatePoint&) { return std::vector<double>{1.0}; };
  if (name == kObservableVisible) return [](const StatePoint& x) { return x.visible; };
  if (name == kObservableHidden) return [](const StatePoint& x) { return x.hidden; };
  if (name == kObservableGradTheta) {
    return [&model, &theta](const StatePoint& x) { return grad_theta_energy(model, theta, x); };
  }
  throw InvalidArgument("unknown observable '" + name + "'");
}

OracleResult bernoulli_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<NamedObservable>& observables) {
  const std::size_t n = state_count(model);
  validate_parameters(model, theta);
  std::vector<std::string> names;
  for (const auto& o : observables) names.push_back(o.name);
  return run_chunked(n, names, [&](std::size_t s) {
    const StatePoint x = binary_state(model, s);
    Term t;
    t.log_weight = -energy(model, theta, x);
    for (const auto& o : observables) t.values.push_back(o.fn(x));
    return t;
  });
}

// Gaussian-Bernoulli machine, per hidden configuration h with a = W h:
//   integral over v of e^{-U} = e^{c.h} prod_j sqrt(2 pi) sigma_j exp(b_j a_j / sigma_j + a_j^2 / 2)
//   v | h ~ N(b + sigma a, sigma^2)
// and the conditional moments give E[dU/dtheta | h] in closed form.
OracleResult gaussian_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                             const std::vector<std::string>& names) {
  const std::size_t n = state_count(model);
  validate_parameters(model, theta);
  const auto l = layout_of(model);
  const auto w = theta.segment(l.weights);
  const auto b = theta.segment(l.visible_bias);
  const auto c = theta.segment(l.hidden_bias);
  const auto log_var = theta.segment(l.log_variance);
  const std::size_t nv = model.visible, nh = model.hidden;
  for (const auto& name : names) {
    if (name != kObservableOne && name != kObservableVisible && name != kObservableHidden &&
        name != kObservableGradTheta) {
      throw InvalidArgument("unknown observable '" + name + "'");
    }
  }
  return run_chunked(n, names, [&](std::size_t s) {
    std::vector<double> h(nh);
    for (std::size_t k = 0; k < nh; ++k) h[k] = static_cast<double>((s >> k) & 1U);
    std::vector<double> a(nv, 0.0), mean(nv), sigma(nv);
    Term t;
    double lw = 0.0;
    for (std::size_t k = 0; k < nh; ++k) lw += c[k] * h[k];
    for (std::size_t j = 0; j < nv; ++j) {
      for (std::size_t k = 0; k < nh; ++k) a[j] += w[j * nh + k] * h[k];
      sigma[j] = std::exp(0.5 * log_var[j]);
      mean[j] = b[j] + sigma[j] * a[j];
      lw += b[j] * a[j] / sigma[j] + 0.5 * a[j] * a[j] + 0.5 * (kLog2Pi + log_var[j]);
    }
    t.log_weight = lw;
    for (const auto& name : names) {
      if (name == kObservableOne) {
        t.values.push_back({1.0});
      } else if (name == kObservableVisible) {
        t.values.push_back(mean);
      } else if (name == kObservableHidden) {
        t.values.push_back(h);
      } else {
        std::vector<double> g(l.total, 0.0);
        for (std::size_t j = 0; j < nv; ++j) {
          for (std::size_t k = 0; k < nh; ++k) {
            g[l.weights.offset + j * nh + k] = -mean[j] * h[k] / sigma[j];
          }
          g[l.visible_bias.offset + j] = -a[j] / sigma[j];
          g[l.log_variance.offset + j] = -0.5 + b[j] * a[j] / (2.0 * sigma[j]);
        }
        for (std::size_t k = 0; k < nh; ++k) g[l.hidden_bias.offset + k] = -h[k];
        t.values.push_back(std::move(g));
      }
    }
    return t;
  });
}

}  // namespace

StatePoint binary_state(const ModelDescriptor& model, std::size_t index) {
  StatePoint x;
  x.visible.resize(model.visible);
  x.hidden.resize(model.hidden);
  for (std::size_t j = 0; j < model.visible; ++j) x.visible[j] = static_cast<double>((index >> j) & 1U);
  for (std::size_t k = 0; k < model.hidden; ++k) {
    x.hidden[k] = static_cast<double>((index >> (model.visible + k)) & 1U);
  }
  return x;
}

OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<std::string>& observables) {
  if (model.family == Family::gaussian_rbm) return gaussian_oracle(model, theta, observables);
  std::vector<NamedObservable> fns;
  for (const auto& name : observables) {
    fns.push_back({name, builtin_discrete(model, theta, name)});
  }
  return enumerate_oracle(model, theta, fns);
}

OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<NamedObservable>& observables) {
  if (model.family != Family::bernoulli_rbm) {
    state_count(model);  // size errors first
    throw DomainError("custom observables need a discrete state space (bernoulli-rbm)");
  }
  return bernoulli_oracle(model, theta, observables);
}

namespace serial {

OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<NamedObservable>& observables) {
  if (model.family != Family::bernoulli_rbm) {
    throw DomainError("serial oracle supports the Bernoulli RBM only");
  }
  const std::size_t n = state_count(model);
  std::vector<double> log_weights(n);
  for (std::size_t s = 0; s < n; ++s) log_weights[s] = -energy(model, theta, binary_state(model, s));
  OracleResult out;
  out.log_z = log_sum_exp(log_weights);
  for (const auto& o : observables) {
    std::vector<double> acc;
    for (std::size_t s = 0; s < n; ++s) {
      const double p = std::exp(log_weights[s] - out.log_z);
      const auto v = o.fn(binary_state(model, s));
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += p * v[i];
    }
    out.expectations[o.name] = std::move(acc);
  }
  return out;
}

}  // namespace serial
}  // namespace jarz
