#include "jarz/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include "jarz/error.hpp"
#include "jarz/io.hpp"
#include "jarz/models.hpp"
#include "jarz/numeric.hpp"

namespace jarz {
namespace {

constexpr std::uint64_t kBatchStream = ~std::uint64_t{0} - 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string where(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

// Mean over samples and its standard error sd / sqrt(n).
GradientEstimate mean_and_se(const std::vector<std::vector<double>>& samples) {
  GradientEstimate g;
  const std::size_t n = samples.size();
  const std::size_t p = samples.front().size();
  g.value.assign(p, 0.0);
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < p; ++j) g.value[j] += s[j];
  }
  for (double& v : g.value) v /= static_cast<double>(n);
  g.std_error.assign(p, 0.0);
  if (n > 1) {
    for (const auto& s : samples) {
      for (std::size_t j = 0; j < p; ++j) {
        const double r = s[j] - g.value[j];
        g.std_error[j] += r * r;
      }
    }
    for (double& v : g.std_error) {
      v = std::sqrt(v / (static_cast<double>(n) - 1.0) / static_cast<double>(n));
    }
  }
  return g;
}

GradientEstimate difference(const GradientEstimate& data, const GradientEstimate& model) {
  GradientEstimate g;
  g.value.resize(data.value.size());
  g.std_error.resize(data.value.size());
  for (std::size_t j = 0; j < g.value.size(); ++j) {
    g.value[j] = data.value[j] - model.value[j];
    g.std_error[j] = std::hypot(data.std_error[j], model.std_error[j]);
  }
  return g;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double mean_marginal_energy(const ModelDescriptor& model, const ParameterVector& theta,
                            const Dataset& data) {
  double s = 0.0;
  for (const auto& row : data.rows) s += marginal_energy(model, theta, row);
  return s / static_cast<double>(data.size());
}

void require_batch(const std::vector<std::vector<double>>& batch) {
  if (batch.empty()) throw InvalidArgument("empty data batch");
}

}  // namespace

std::string_view to_string(DataKind kind) {
  return kind == DataKind::binary ? "binary" : "continuous";
}

DataKind parse_data_kind(std::string_view name) {
  if (name == "binary") return DataKind::binary;
  if (name == "continuous") return DataKind::continuous;
  throw InvalidArgument("unknown data kind '" + std::string(name) +
                        "' (expected binary or continuous)");
}

void Dataset::validate() const {
  if (rows.empty()) throw InvalidArgument("dataset is empty");
  if (width == 0) throw InvalidArgument("dataset width is zero");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw InvalidArgument("row " + std::to_string(r + 1) + " has " +
                            std::to_string(rows[r].size()) + " columns, expected " +
                            std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const double v = rows[r][c];
      if (!std::isfinite(v)) throw InvalidArgument("non-finite value at " + where(r + 1, c + 1));
      if (kind == DataKind::binary && v != 0.0 && v != 1.0) {
        throw InvalidArgument("binary dataset has value " + format_double(v) + " at " +
                              where(r + 1, c + 1));
      }
    }
  }
}

Dataset parse_dataset(std::string_view text, DataKind kind, bool header) {
  Dataset data;
  data.kind = kind;
  bool skipped_header = !header;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const std::size_t row = data.rows.size() + 1;
    std::vector<double> values;
    std::size_t cell_start = 0;
    while (true) {
      std::size_t comma = line.find(',', cell_start);
      const bool last = comma == std::string_view::npos;
      if (last) comma = line.size();
      const std::string_view cell = trim(line.substr(cell_start, comma - cell_start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw InvalidArgument("cannot parse '" + std::string(cell) + "' as a number at " +
                              where(row, values.size() + 1));
      }
      values.push_back(v);
      if (last) break;
      cell_start = comma + 1;
    }
    if (data.rows.empty()) data.width = values.size();
    if (values.size() != data.width) {
      throw InvalidArgument("row " + std::to_string(row) + " has " +
                            std::to_string(values.size()) + " columns, expected " +
                            std::to_string(data.width));
    }
    data.rows.push_back(std::move(values));
  }
  if (data.rows.empty()) throw InvalidArgument("dataset is empty");
  data.validate();
  return data;
}

Dataset load_dataset(const std::string& path, DataKind kind, bool header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open dataset '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str(), kind, header);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void save_dataset(const std::string& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write dataset '" + path + "'");
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

void check_compatible(const ModelDescriptor& model, const Dataset& data) {
  data.validate();
  if (data.width != model.visible) {
    throw InvalidArgument("dataset width " + std::to_string(data.width) +
                          " does not match model visible dimension " +
                          std::to_string(model.visible));
  }
  const bool binary_model = model.family == Family::bernoulli_rbm;
  if (binary_model != (data.kind == DataKind::binary)) {
    throw InvalidArgument(std::string(to_string(data.kind)) + " data cannot train a " +
                          std::string(to_string(model.family)) + " model");
  }
}

Dataset synthetic_dataset(const ModelDescriptor& model, const ParameterVector& theta,
                          std::size_t n, std::uint64_t seed) {
  validate_parameters(model, theta);
  if (n == 0) throw InvalidArgument("synthetic dataset size must be positive");
  Dataset data;
  data.kind = model.family == Family::bernoulli_rbm ? DataKind::binary : DataKind::continuous;
  data.width = model.visible;
  Rng rng = make_stream(seed, 0);
  if (is_analytic(model, theta)) {
    for (std::size_t i = 0; i < n; ++i) data.rows.push_back(sample_reference(model, theta, rng).visible);
    return data;
  }
  if (model.family != Family::bernoulli_rbm || model.visible > 20) {
    throw DomainError("no exact sampler for this " + std::string(to_string(model.family)) +
                      " parameter set");
  }
  const std::size_t states = std::size_t{1} << model.visible;
  std::vector<double> log_p(states);
  std::vector<double> v(model.visible);
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t j = 0; j < model.visible; ++j) v[j] = static_cast<double>((s >> j) & 1U);
    log_p[s] = -marginal_energy(model, theta, v);
  }
  const double lz = log_sum_exp(log_p);
  std::vector<double> cumulative(states);
  double acc = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    acc += std::exp(log_p[s] - lz);
    cumulative[s] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(rng) * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto s = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                         states - 1);
    for (std::size_t j = 0; j < model.visible; ++j) v[j] = static_cast<double>((s >> j) & 1U);
    data.rows.push_back(v);
  }
  return data;
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::jarzynski: return "jarzynski";
    case Estimator::cd: return "cd";
    case Estimator::pcd: return "pcd";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "jarzynski") return Estimator::jarzynski;
  if (name == "cd") return Estimator::cd;
  if (name == "pcd") return Estimator::pcd;
  throw InvalidArgument("unknown estimator '" + std::string(name) +
                        "' (expected jarzynski, cd or pcd)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("train.learning_rate must be finite and non-negative");
  }
  if (steps == 0) throw InvalidArgument("train.steps must be positive");
  if (walkers < 2) throw InvalidArgument("train.walkers must be at least 2");
  if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) {
    throw InvalidArgument("train.ess_threshold must lie in (0, 1]");
  }
  if (estimator == Estimator::cd && cd_steps == 0) {
    throw InvalidArgument("train.cd_steps must be at least 1");
  }
  kernel.validate();
}

GradientEstimate data_term(const ModelDescriptor& model, const ParameterVector& theta,
                           const std::vector<std::vector<double>>& batch) {
  require_batch(batch);
  std::vector<std::vector<double>> grads;
  grads.reserve(batch.size());
  for (const auto& row : batch) grads.push_back(marginal_grad_theta_energy(model, theta, row));
  return mean_and_se(grads);
}

GradientEstimate jarzynski_gradient(const Ensemble& ensemble, const ModelDescriptor& model,
                                    const ParameterVector& theta,
                                    const std::vector<std::vector<double>>& batch) {
  const auto data = data_term(model, theta, batch);
  const auto est = reweighted_expectation(
      ensemble, [&](const StatePoint& x) { return grad_theta_energy(model, theta, x); });
  GradientEstimate m{est.value, est.std_error};
  return difference(data, m);
}

namespace {

GradientEstimate chain_term(const ModelDescriptor& model, const ParameterVector& theta,
                            const std::vector<StatePoint>& states) {
  std::vector<std::vector<double>> grads(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    grads[i] = grad_theta_energy(model, theta, states[i]);
  }
  return mean_and_se(grads);
}

// Moves every chain `k_steps` times; chain i uses streams[i].
void move_chains(std::vector<StatePoint>& states, std::span<Rng> streams,
                 const TransitionKernel& kernel, const ParameterVector& theta,
                 std::size_t k_steps) {
  std::vector<std::exception_ptr> failure(states.size());
  const auto count = static_cast<long long>(states.size());
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      for (std::size_t s = 0; s < k_steps; ++s) {
        states[i] = kernel.sample(theta, states[i], streams[i]);
      }
    } catch (...) {
      failure[i] = std::current_exception();
    }
  }
  for (const auto& f : failure) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace

GradientEstimate cd_gradient(const ModelDescriptor& model, const ParameterVector& theta,
                             const std::vector<std::vector<double>>& batch, std::size_t k_steps,
                             const TransitionKernel& kernel, std::span<Rng> streams) {
  require_batch(batch);
  if (k_steps == 0) throw InvalidArgument("cd_gradient needs k_steps >= 1");
  if (streams.size() < batch.size()) {
    throw InvalidArgument("cd_gradient needs one stream per batch row");
  }
  const auto data = data_term(model, theta, batch);
  std::vector<StatePoint> states;
  states.reserve(batch.size());
  for (const auto& row : batch) states.push_back(state_from_row(model, row));
  move_chains(states, streams, kernel, theta, k_steps);
  return difference(data, chain_term(model, theta, states));
}

PersistentChains init_chains(const ModelDescriptor& model,
                             const std::vector<std::vector<double>>& rows, std::size_t n,
                             std::uint64_t seed) {
  require_batch(rows);
  PersistentChains chains;
  for (std::size_t i = 0; i < n; ++i) {
    chains.states.push_back(state_from_row(model, rows[i % rows.size()]));
    chains.streams.push_back(make_stream(seed, i));
  }
  return chains;
}

GradientEstimate pcd_gradient(PersistentChains& chains, const ModelDescriptor& model,
                              const ParameterVector& theta,
                              const std::vector<std::vector<double>>& batch,
                              const TransitionKernel& kernel) {
  if (chains.states.empty() || chains.streams.size() != chains.states.size()) {
    throw InvalidArgument("pcd_gradient needs an initialized chain population");
  }
  const auto data = data_term(model, theta, batch);
  move_chains(chains.states, chains.streams, kernel, theta, 1);
  return difference(data, chain_term(model, theta, chains.states));
}

TrainMetrics train(const ModelDescriptor& model, const ParameterVector& theta0,
                   const Dataset& data, const TrainConfig& config) {
  config.validate();
  check_compatible(model, data);
  validate_parameters(model, theta0);
  const auto kernel = make_kernel(model, config.kernel);

  Rng batch_rng = make_stream(config.seed, kBatchStream);
  const bool full_batch = config.batch_size == 0 || config.batch_size >= data.size();
  std::vector<std::vector<double>> minibatch;
  auto next_batch = [&]() -> const std::vector<std::vector<double>>& {
    if (full_batch) return data.rows;
    minibatch.clear();
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto idx = std::min(
          data.size() - 1,
          static_cast<std::size_t>(uniform01(batch_rng) * static_cast<double>(data.size())));
      minibatch.push_back(data.rows[idx]);
    }
    return minibatch;
  };

  Ensemble ensemble;
  PersistentChains chains;
  std::vector<Rng> cd_streams;
  switch (config.estimator) {
    case Estimator::jarzynski:
      ensemble = init_ensemble(model, theta0, config.walkers, config.seed);
      break;
    case Estimator::pcd:
      chains = init_chains(model, data.rows, config.walkers, config.seed);
      break;
    case Estimator::cd: {
      const std::size_t n = full_batch ? data.size() : config.batch_size;
      for (std::size_t i = 0; i < n; ++i) cd_streams.push_back(make_stream(config.seed, i));
      break;
    }
  }

  TrainMetrics metrics;
  ParameterVector theta = theta0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < config.steps; ++k) {
    const auto& batch = next_batch();
    StepMetrics m;
    m.k = k;
    m.mean_energy = mean_marginal_energy(model, theta, data);
    GradientEstimate g;
    switch (config.estimator) {
      case Estimator::jarzynski:
        g = jarzynski_gradient(ensemble, model, theta, batch);
        m.log_z = estimate_log_z(ensemble);
        m.log_z_se = log_z_std_error(ensemble);
        m.ess = ess(ensemble);
        m.cross_entropy = m.log_z + m.mean_energy;
        break;
      case Estimator::cd:
        g = cd_gradient(model, theta, batch, config.cd_steps, *kernel, cd_streams);
        break;
      case Estimator::pcd:
        g = pcd_gradient(chains, model, theta, batch, *kernel);
        break;
    }
    if (config.estimator != Estimator::jarzynski) {
      m.log_z = m.log_z_se = m.ess = m.cross_entropy = nan;
    }
    m.grad_norm = norm(g.value);
    if (!(m.grad_norm <= 1e6)) {
      throw NumericalError("training diverged at step " + std::to_string(k) +
                           ": gradient norm " + format_double(m.grad_norm));
    }
    if (config.estimator == Estimator::jarzynski && !std::isfinite(m.cross_entropy)) {
      throw NumericalError("training diverged at step " + std::to_string(k) +
                           ": non-finite cross-entropy");
    }

    ParameterVector next = theta;
    for (std::size_t j = 0; j < next.size(); ++j) next[j] -= config.learning_rate * g.value[j];
    validate_parameters(model, next);
    if (config.estimator == Estimator::jarzynski) {
      advance(ensemble, *kernel, theta, next);
      m.resampled = maybe_resample(ensemble, config.ess_threshold);
    }
    theta = std::move(next);
    metrics.steps.push_back(m);
  }
  metrics.final_theta = theta;
  return metrics;
}

double mode_mass_ratio(const ModelDescriptor& model, const ParameterVector& theta, double split,
                       double lo, double hi, std::size_t points) {
  if (model.is_rbm() || model.visible != 1) {
    throw InvalidArgument("mode_mass_ratio needs a 1-D continuous model");
  }
  if (!(lo < split && split < hi) || points < 3) {
    throw InvalidArgument("mode_mass_ratio needs lo < split < hi and at least 3 points");
  }
  auto mass = [&](double a, double b) {
    const std::size_t n = std::max<std::size_t>(
        2, static_cast<std::size_t>(static_cast<double>(points) * (b - a) / (hi - lo)));
    const double dx = (b - a) / static_cast<double>(n - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a + dx * static_cast<double>(i);
      const double f = std::exp(-energy(model, theta, StatePoint{{x}, {}}));
      s += (i == 0 || i + 1 == n) ? 0.5 * f : f;
    }
    return s * dx;
  };
  return mass(lo, split) / mass(split, hi);
}

}  // namespace jarz
