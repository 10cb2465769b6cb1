#include <cmath>
#include <ostream>

#include "common.hpp"
#include "jarz/io.hpp"
#include "jarz/models.hpp"
#include "jarz/oracle.hpp"
#include "jarz/smc.hpp"

namespace jarz::cli {
namespace {

std::set<std::string> sample_keys() {
  return with(with(model_keys(), kernel_keys()),
              {"seed", "protocol.theta0", "protocol.theta1", "protocol.random_scale",
               "protocol.steps", "protocol.walkers", "protocol.resample",
               "protocol.ess_threshold", "output.observables", "output.trace_moves",
               "output.oracle"});
}

std::vector<double> observe(const std::string& name, const ModelDescriptor& model,
                            const ParameterVector& theta, const StatePoint& x) {
  if (name == "visible") return x.visible;
  if (name == "hidden") return x.hidden;
  return grad_theta_energy(model, theta, x);
}

}  // namespace

int run_sample(RunContext& ctx) {
  const Config& c = ctx.config;
  c.check_keys(sample_keys());
  nlohmann::json echo;
  echo["seed"] = ctx.seed;
  const auto model = read_model(c, echo);
  const auto kcfg = read_kernel(c, model, echo);
  if (kcfg.kind == KernelKind::drifted) {
    throw ConfigError("kernel.kind = \"drifted\" runs through the order-study subcommand");
  }
  Rng theta_rng = make_stream(ctx.seed, kThetaStream);
  const double scale = c.get_double("protocol.random_scale", 1.0);
  echo_set(echo, "protocol.random_scale", scale);
  const auto theta0 = read_theta(c, "protocol.theta0", model, scale, theta_rng, echo);
  const auto theta1 = read_theta(c, "protocol.theta1", model, scale, theta_rng, echo);
  const auto steps = c.require_uint("protocol.steps");
  const auto walkers = c.get_uint("protocol.walkers", 1000);
  const bool resample = c.get_bool("protocol.resample", true);
  const double tau = c.get_double("protocol.ess_threshold", 0.5);
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("protocol.ess_threshold must lie in (0, 1]");
  echo_set(echo, "protocol.steps", steps);
  echo_set(echo, "protocol.walkers", walkers);
  echo_set(echo, "protocol.resample", resample);
  echo_set(echo, "protocol.ess_threshold", tau);
  const auto observables = c.get_strings("output.observables", {"visible"});
  for (const auto& o : observables) {
    if (o != "visible" && o != "hidden" && o != "grad_theta_energy") {
      throw ConfigError("output.observables: unknown observable '" + o +
                        "' (expected visible, hidden or grad_theta_energy)");
    }
    if (o == "hidden" && !model.is_rbm()) {
      throw ConfigError("output.observables: 'hidden' needs an RBM model");
    }
  }
  const bool trace = c.get_bool("output.trace_moves", false);
  const bool with_oracle = c.get_bool("output.oracle", false);
  echo_set(echo, "output.observables", observables);
  echo_set(echo, "output.trace_moves", trace);
  echo_set(echo, "output.oracle", with_oracle);
  if (steps == 0) throw ConfigError("protocol.steps must be positive");

  // Fail on an oversized oracle before the run.
  OracleResult oracle;
  if (with_oracle) oracle = enumerate_oracle(model, theta1, std::vector<std::string>{kObservableOne});

  const auto kernel = make_kernel(model, kcfg);
  Ensemble ens = init_ensemble(model, theta0, walkers, ctx.seed);

  std::string csv = "k,ess,log_z,log_z_se,resampled";
  std::vector<std::size_t> widths;
  for (const auto& o : observables) {
    const auto n = observe(o, model, theta0, ens.walkers[0].x).size();
    widths.push_back(n);
    for (std::size_t j = 0; j < n; ++j) {
      csv += "," + o + "_" + std::to_string(j) + "," + o + "_" + std::to_string(j) + "_se";
    }
  }
  csv += "\n";
  std::string moves = "k,walker,log_forward,log_reverse\n";

  bool resampled = false;
  for (std::size_t k = 0;; ++k) {
    const auto theta_k = lerp(theta0, theta1, static_cast<double>(k) / static_cast<double>(steps));
    csv += std::to_string(k) + "," + format_double(ess(ens)) + "," +
           format_double(estimate_log_z(ens)) + "," + format_double(log_z_std_error(ens)) + "," +
           (resampled ? "1" : "0");
    for (const auto& o : observables) {
      const auto est = reweighted_expectation(
          ens, [&](const StatePoint& x) { return observe(o, model, theta_k, x); });
      for (std::size_t j = 0; j < est.value.size(); ++j) {
        csv += "," + format_double(est.value[j]) + "," + format_double(est.std_error[j]);
      }
    }
    csv += "\n";
    if (k == steps) break;

    const auto theta_next =
        lerp(theta0, theta1, static_cast<double>(k + 1) / static_cast<double>(steps));
    const StatePoint before = ens.walkers[0].x;
    advance(ens, *kernel, theta_k, theta_next);
    if (trace) {
      const StatePoint& after = ens.walkers[0].x;
      moves += std::to_string(k) + ",0," +
               format_double(kernel->log_forward(theta_k, before, after)) + "," +
               format_double(kernel->log_reverse(theta_next, after, before)) + "\n";
    }
    resampled = resample && maybe_resample(ens, tau);
  }

  nlohmann::json summary;
  summary["command"] = "sample";
  summary["config"] = echo;
  summary["seed"] = ctx.seed;
  summary["log_z_ref"] = ens.log_z_ref;
  summary["final"] = ensemble_summary(ens);
  if (with_oracle) {
    const double est = estimate_log_z(ens), se = log_z_std_error(ens);
    summary["oracle"] = {{"log_z", oracle.log_z},
                         {"z_score", (est - oracle.log_z) / se},
                         {"within_3se", std::abs(est - oracle.log_z) <= 3.0 * se}};
  }
  write_text(out_path(ctx, "steps.csv"), csv);
  write_text(out_path(ctx, "ensemble.csv"), ensemble_csv(ens));
  if (trace) write_text(out_path(ctx, "moves.csv"), moves);
  write_json(ctx, "summary.json", summary);
  *ctx.out << "sample: k=" << steps << " log_z=" << format_double(estimate_log_z(ens))
           << " se=" << format_double(log_z_std_error(ens)) << " ess=" << format_double(ess(ens))
           << "\n";
  return kPass;
}

}  // namespace jarz::cli
