#include <cmath>
#include <ostream>

#include "common.hpp"
#include "jarz/io.hpp"
#include "jarz/models.hpp"
#include "jarz/oracle.hpp"
#include "jarz/trainer.hpp"

namespace jarz::cli {
namespace {

std::set<std::string> train_keys() {
  return with(with(model_keys(), kernel_keys()),
              {"seed", "data.path", "data.kind", "data.header", "data.synthetic_theta",
               "data.size", "data.seed", "train.learning_rate", "train.steps", "train.walkers",
               "train.ess_threshold", "train.batch_size", "train.estimator", "train.cd_steps",
               "train.theta0", "train.random_scale", "train.baseline"});
}

struct BiasMetric {
  std::string name;
  std::vector<double> target;
};

// Mode-mass ratio for 1-D continuous models, E[v] for RBMs.
std::vector<double> bias_value(const ModelDescriptor& model, const ParameterVector& theta) {
  if (model.is_rbm()) {
    return enumerate_oracle(model, theta, std::vector<std::string>{kObservableVisible})
        .expectations.at(kObservableVisible);
  }
  return {mode_mass_ratio(model, theta)};
}

std::vector<double> bias_from_data(const ModelDescriptor& model, const Dataset& data) {
  if (model.is_rbm()) {
    std::vector<double> mean(data.width, 0.0);
    for (const auto& r : data.rows) {
      for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(data.size());
    return mean;
  }
  double below = 0.0, above = 0.0;
  for (const auto& r : data.rows) (r[0] < 0.0 ? below : above) += 1.0;
  return {below / above};
}

double relative_error(const std::vector<double>& value, const std::vector<double>& target) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < value.size(); ++j) {
    num += (value[j] - target[j]) * (value[j] - target[j]);
    den += target[j] * target[j];
  }
  return std::sqrt(num / den);
}

bool has_bias_metric(const ModelDescriptor& model) {
  return model.is_rbm() || model.visible == 1;
}

}  // namespace

int run_train(RunContext& ctx) {
  const Config& c = ctx.config;
  c.check_keys(train_keys());
  nlohmann::json echo;
  echo["seed"] = ctx.seed;
  const auto model = read_model(c, echo);
  TrainConfig tc;
  tc.kernel = read_kernel(c, model, echo);
  if (tc.kernel.kind == KernelKind::drifted) {
    throw ConfigError("kernel.kind = \"drifted\" cannot train a model");
  }
  tc.seed = ctx.seed;
  tc.learning_rate = c.require_double("train.learning_rate");
  tc.steps = c.require_uint("train.steps");
  tc.walkers = c.get_uint("train.walkers", 1000);
  tc.ess_threshold = c.get_double("train.ess_threshold", 0.5);
  tc.batch_size = c.get_uint("train.batch_size", 0);
  tc.cd_steps = c.get_uint("train.cd_steps", 1);
  try {
    tc.estimator = parse_estimator(c.get_string("train.estimator", "jarzynski"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("train.estimator: ") + e.what());
  }
  std::string baseline = ctx.baseline.empty() ? c.get_string("train.baseline", "none") : ctx.baseline;
  if (baseline != "none" && baseline != "cd1" && baseline != "cdk" && baseline != "pcd") {
    throw ConfigError("baseline must be none, cd1, cdk or pcd (got '" + baseline + "')");
  }
  echo_set(echo, "train.learning_rate", tc.learning_rate);
  echo_set(echo, "train.steps", tc.steps);
  echo_set(echo, "train.walkers", tc.walkers);
  echo_set(echo, "train.ess_threshold", tc.ess_threshold);
  echo_set(echo, "train.batch_size", tc.batch_size);
  echo_set(echo, "train.cd_steps", tc.cd_steps);
  echo_set(echo, "train.estimator", std::string(to_string(tc.estimator)));
  echo_set(echo, "train.baseline", baseline);
  Rng theta_rng = make_stream(ctx.seed, kThetaStream);
  const double scale = c.get_double("train.random_scale", 1.0);
  echo_set(echo, "train.random_scale", scale);
  const auto theta0 = read_theta(c, "train.theta0", model, scale, theta_rng, echo);
  try {
    tc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  // Data: a CSV file or exact draws from a known parameter set.
  const DataKind default_kind =
      model.family == Family::bernoulli_rbm ? DataKind::binary : DataKind::continuous;
  Dataset data;
  std::optional<ParameterVector> truth;
  if (c.has("data.path") == c.has("data.synthetic_theta")) {
    throw ConfigError("exactly one of data.path and data.synthetic_theta is required");
  }
  if (c.has("data.path")) {
    const auto path = c.require_string("data.path");
    DataKind kind;
    try {
      kind = parse_data_kind(c.get_string("data.kind", to_string(default_kind)));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("data.kind: ") + e.what());
    }
    const bool header = c.get_bool("data.header", false);
    data = load_dataset(path, kind, header);
    echo_set(echo, "data.path", path);
    echo_set(echo, "data.kind", std::string(to_string(kind)));
    echo_set(echo, "data.header", header);
  } else {
    truth = read_theta(c, "data.synthetic_theta", model, scale, theta_rng, echo);
    const auto n = c.require_uint("data.size");
    const auto data_seed = c.get_uint("data.seed", ctx.seed);
    data = synthetic_dataset(model, *truth, n, data_seed);
    echo_set(echo, "data.size", n);
    echo_set(echo, "data.seed", data_seed);
  }
  check_compatible(model, data);
  if (baseline != "none" && !has_bias_metric(model)) {
    throw ConfigError("baselines need a 1-D continuous model or an RBM for the bias metric");
  }

  const auto metrics = train(model, theta0, data, tc);

  nlohmann::json summary;
  summary["command"] = "train";
  summary["config"] = echo;
  summary["seed"] = ctx.seed;
  summary["final_theta"] = "model.json";
  const auto& last = metrics.steps.back();
  summary["final"] = {{"cross_entropy", last.cross_entropy}, {"log_z", last.log_z},
                      {"log_z_se", last.log_z_se}, {"ess", last.ess},
                      {"grad_norm", last.grad_norm}};
  write_text(out_path(ctx, "metrics.csv"), metrics_csv(metrics));
  write_json(ctx, "model.json", model_to_json(model, metrics.final_theta));

  std::string comparison;
  std::vector<double> target;
  if (has_bias_metric(model)) {
    target = truth ? bias_value(model, *truth) : bias_from_data(model, data);
    const std::string metric = model.is_rbm() ? "mean_visible" : "mode_mass_ratio";
    comparison = "estimator,metric,value,target,relative_error\n";
    auto add_row = [&](const std::string& label, const ParameterVector& theta) {
      const auto value = bias_value(model, theta);
      const double rel = relative_error(value, target);
      for (std::size_t j = 0; j < value.size(); ++j) {
        comparison += label + "," + metric + (value.size() > 1 ? "_" + std::to_string(j) : "") +
                      "," + format_double(value[j]) + "," + format_double(target[j]) + "," +
                      format_double(rel) + "\n";
      }
      return rel;
    };
    summary["bias"] = {{"metric", metric},
                       {"relative_error", add_row(std::string(to_string(tc.estimator)), metrics.final_theta)}};
    if (baseline != "none") {
      TrainConfig bc = tc;
      bc.estimator = baseline == "pcd" ? Estimator::pcd : Estimator::cd;
      if (baseline == "cd1") bc.cd_steps = 1;
      const auto base = train(model, theta0, data, bc);
      write_text(out_path(ctx, "baseline_metrics.csv"), metrics_csv(base));
      write_json(ctx, "baseline_model.json", model_to_json(model, base.final_theta));
      summary["baseline"] = {{"name", baseline},
                             {"relative_error", add_row(baseline, base.final_theta)}};
    }
    write_text(out_path(ctx, "comparison.csv"), comparison);
  }
  write_json(ctx, "summary.json", summary);
  *ctx.out << "train: steps=" << tc.steps << " cross_entropy=" << format_double(last.cross_entropy)
           << "\n";
  return kPass;
}

}  // namespace jarz::cli
