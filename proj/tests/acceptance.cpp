// Acceptance run: `acceptance` runs every criterion, `acceptance N` runs one.
// One line per criterion: "criterion N: PASS|FAIL <details>". Exit 0 only if
// every selected criterion passed.
//
// Seeds are fixed per criterion and were not tuned.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jarz/interpolant.hpp"
#include "jarz/kernels.hpp"
#include "jarz/models.hpp"
#include "jarz/oracle.hpp"
#include "jarz/smc.hpp"
#include "jarz/trainer.hpp"
#include "support/cli_run.hpp"

using namespace jarz;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Linear protocol theta0 -> theta1 in `steps` moves, resampling below tau*N
// (tau <= 0: never).
void run_linear(Ensemble& e, const TransitionKernel& kernel, const ParameterVector& t0,
                const ParameterVector& t1, std::size_t steps, double tau,
                const std::function<void(bool, double, double)>& on_resample = {}) {
  const double n = static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    advance(e, kernel, lerp(t0, t1, static_cast<double>(k) / n),
            lerp(t0, t1, static_cast<double>(k + 1) / n));
    if (tau > 0.0) {
      const double before = estimate_log_z(e);
      const bool r = maybe_resample(e, tau);
      if (on_resample) on_resample(r, before, estimate_log_z(e));
    }
  }
}

double z_score(double est, double exact, double se) { return (est - exact) / se; }

void log_z_check(Outcome& o, const std::string& label, double est, double exact, double se) {
  const double z = z_score(est, exact, se);
  o.detail << " " << label << "{est=" << est << " exact=" << exact << " se=" << se << " z=" << z
           << "}";
  o.require(std::abs(est - exact) <= 3.0 * se, label + " outside 3 SE");
}

// 1. Bernoulli RBM 6+4, W=0 -> random, K=100 Gibbs, N=1e4.
Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto m = ModelDescriptor::bernoulli_rbm(6, 4);
  Rng rng = make_stream(101, 0);
  const auto theta1 = random_parameters(m, 1.0, rng);
  const auto theta0 = zero_parameters(m);
  const GibbsKernel kernel(m);
  Ensemble e = init_ensemble(m, theta0, 10000, 101);
  run_linear(e, kernel, theta0, theta1, 100, 0.5);
  const auto exact = enumerate_oracle(m, theta1, std::vector<std::string>{"grad_theta_energy"});
  log_z_check(o, "log_z", estimate_log_z(e), exact.log_z, log_z_std_error(e));
  const auto est = reweighted_expectation(
      e, [&](const StatePoint& x) { return grad_theta_energy(m, theta1, x); });
  const auto& g = exact.expectations.at("grad_theta_energy");
  double worst = 0.0;
  std::size_t outside = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double z = std::abs(est.value[j] - g[j]) / est.std_error[j];
    worst = std::max(worst, z);
    if (z > 3.0) ++outside;
  }
  o.detail << " grad{components=" << g.size() << " max|z|=" << worst << " outside=" << outside
           << "} resamples=" << e.resample_steps.size();
  o.require(outside == 0, "gradient component outside 3 SE");
  const double secs = seconds_since(t0);
  o.detail << " runtime=" << secs << "s";
  o.require(secs < 60.0, "runtime");
  return o;
}

// 2. Gaussian-Bernoulli RBM 4+6, log Z vs hidden-sum oracle.
Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto m = ModelDescriptor::gaussian_rbm(4, 6);
  Rng rng = make_stream(102, 0);
  const auto theta1 = random_parameters(m, 0.5, rng);
  const auto theta0 = zero_parameters(m);
  const GibbsKernel kernel(m);
  Ensemble e = init_ensemble(m, theta0, 10000, 102);
  run_linear(e, kernel, theta0, theta1, 100, 0.5);
  const auto exact = enumerate_oracle(m, theta1, std::vector<std::string>{"one"});
  log_z_check(o, "log_z", estimate_log_z(e), exact.log_z, log_z_std_error(e));
  const double secs = seconds_since(t0);
  o.detail << " resamples=" << e.resample_steps.size() << " runtime=" << secs << "s";
  o.require(secs < 120.0, "runtime");
  return o;
}

// 3. ULA on a 2-D Gaussian: scale 1 -> 0.5 and a pure mean shift.
Outcome criterion3() {
  Outcome o;
  const auto m = ModelDescriptor::gaussian(2);
  const UlaKernel kernel(m, 1e-3);
  const double half = std::log(0.5);
  {
    const ParameterVector t0({0.0, 0.0, 0.0, 0.0}), t1({0.0, 0.0, half, half});
    Ensemble e = init_ensemble(m, t0, 10000, 103);
    run_linear(e, kernel, t0, t1, 500, 0.5);
    log_z_check(o, "scale_delta_log_z", estimate_log_z(e) - e.log_z_ref, 2.0 * half,
                log_z_std_error(e));
  }
  {
    const ParameterVector t0({0.0, 0.0, 0.0, 0.0}), t1({1.5, -1.0, 0.0, 0.0});
    Ensemble e = init_ensemble(m, t0, 10000, 203);
    run_linear(e, kernel, t0, t1, 500, 0.5);
    log_z_check(o, "shift_delta_log_z", estimate_log_z(e) - e.log_z_ref, 0.0, log_z_std_error(e));
  }
  return o;
}

// 4. zeta == alpha - lambda on probes; unit mean weight along the benchmark path.
Outcome criterion4() {
  Outcome o;
  const auto path = GaussianPath::benchmark();
  Rng rng = make_stream(104, 0);
  double worst = 0.0;
  const int probes = 2000;
  for (int p = 0; p < probes; ++p) {
    const double h = std::exp2(-(4.0 + 5.0 * uniform01(rng)));
    const double eps = 0.25 + 1.75 * uniform01(rng);
    const double t = (1.0 - h) * uniform01(rng);
    StatePoint x;
    const auto mean = path.mean(t);
    for (double mi : mean) x.visible.push_back(mi + 2.0 * path.scale(t) * standard_normal(rng));
    const StatePoint y = drifted_step(path, t, x, h, eps, rng);
    worst = std::max(worst, std::abs(zeta_increment(path, t, t + h, x, y, h, eps) -
                                     alpha_lambda_increment(path, t, t + h, x, y, h, eps)));
  }
  o.detail << " zeta{probes=" << probes << " max_abs_err=" << worst << "}";
  o.require(worst < 1e-10, "zeta vs alpha-lambda");

  OrderStudyConfig cfg;
  for (int e = 4; e <= 9; ++e) cfg.h_list.push_back(std::ldexp(1.0, -e));
  cfg.walkers = 10000;
  cfg.seed = 104;
  const auto report = order_study(path, cfg);
  for (const auto& r : report.rows) {
    const double z = (r.mean_weight - 1.0) / r.mean_weight_se;
    o.detail << " h=" << r.h << "{mean_w=" << r.mean_weight << " se=" << r.mean_weight_se
             << " z=" << z << "}";
    o.require(std::abs(r.mean_weight - 1.0) <= 3.0 * r.mean_weight_se,
              "mean weight at h=" + std::to_string(r.h));
  }
  return o;
}

// 5. Per-step increment order: slope of log RMS dA vs log h, median of 3 seeds.
Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto path = GaussianPath::benchmark();
  std::vector<double> slopes;
  for (std::uint64_t seed : {105u, 205u, 305u}) {
    OrderStudyConfig cfg;
    for (int e = 4; e <= 9; ++e) cfg.h_list.push_back(std::ldexp(1.0, -e));
    cfg.walkers = 4096;
    cfg.seed = seed;
    const auto report = order_study(path, cfg);
    slopes.push_back(report.slope);
    o.detail << " seed" << seed << "{slope=" << report.slope
             << (report.excluded_largest ? " largest-h excluded" : "") << "}";
  }
  std::sort(slopes.begin(), slopes.end());
  const double median = slopes[1];
  const double secs = seconds_since(t0);
  o.detail << " median_slope=" << median << " band=[1.3,1.7] runtime=" << secs << "s";
  o.require(median >= 1.3 && median <= 1.7, "median slope outside [1.3, 1.7]");
  o.require(secs < 300.0, "runtime");
  return o;
}

// 6. Constant-theta Gibbs with reversed-scan reverse kernel: A stays zero.
Outcome criterion6() {
  Outcome o;
  const std::vector<std::pair<std::size_t, std::size_t>> machines{
      {1, 1}, {3, 3}, {6, 4}, {4, 8}, {2, 10}, {11, 1}, {6, 6}};
  double worst = 0.0;
  std::uint64_t seed = 106;
  for (const auto& [v, h] : machines) {
    const auto m = ModelDescriptor::bernoulli_rbm(v, h);
    for (double scale : {1.0, 3.0}) {
      Rng rng = make_stream(seed, 0);
      const auto theta = random_parameters(m, scale, rng);
      const GibbsKernel kernel(m, ScanOrder::reversed);
      Ensemble e = init_ensemble(m, zero_parameters(m), 64, seed++);
      double machine_worst = 0.0;
      for (int k = 0; k < 1000; ++k) {
        advance(e, kernel, theta, theta);
        for (const auto& w : e.walkers) machine_worst = std::max(machine_worst, std::abs(w.a));
      }
      worst = std::max(worst, machine_worst);
    }
  }
  o.detail << " machines=" << machines.size() << " steps=1000 max|A|=" << worst;
  o.require(worst < 1e-10, "max |A|");
  return o;
}

// 7. Resampling leaves log Z bit-identical; with and without resampling both
// runs agree with enumeration.
Outcome criterion7() {
  Outcome o;
  const auto m = ModelDescriptor::bernoulli_rbm(6, 4);
  Rng rng = make_stream(107, 0);
  const auto theta1 = random_parameters(m, 1.0, rng);
  const auto theta0 = zero_parameters(m);
  const GibbsKernel kernel(m);
  const double exact = enumerate_oracle(m, theta1, std::vector<std::string>{"one"}).log_z;

  Ensemble plain = init_ensemble(m, theta0, 10000, 107);
  run_linear(plain, kernel, theta0, theta1, 100, 0.0);
  log_z_check(o, "plain", estimate_log_z(plain), exact, log_z_std_error(plain));

  std::size_t events = 0, mismatches = 0;
  Ensemble res = init_ensemble(m, theta0, 10000, 207);
  run_linear(res, kernel, theta0, theta1, 100, 0.95, [&](bool resampled, double before, double after) {
    if (!resampled) return;
    ++events;
    if (std::memcmp(&before, &after, sizeof before) != 0) ++mismatches;
  });
  log_z_check(o, "resampled", estimate_log_z(res), exact, log_z_std_error(res));
  o.detail << " resample_events=" << events << " bit_mismatches=" << mismatches;
  o.require(events > 0, "no resampling event");
  o.require(mismatches == 0, "log Z changed across resampling");
  return o;
}

StatePoint random_state(const ModelDescriptor& m, Rng& rng) {
  StatePoint x;
  for (std::size_t j = 0; j < m.visible; ++j) {
    x.visible.push_back(m.family == Family::bernoulli_rbm ? (uniform01(rng) < 0.5 ? 0.0 : 1.0)
                                                          : 1.5 * standard_normal(rng));
  }
  for (std::size_t k = 0; k < m.hidden; ++k) x.hidden.push_back(uniform01(rng) < 0.5 ? 0.0 : 1.0);
  return x;
}

double rel_err(double fd, double an) { return std::abs(fd - an) / std::max(std::abs(an), 1e-2); }

// 8. Finite-difference gradients, and a vanishing gradient at the truth.
Outcome criterion8() {
  Outcome o;
  Rng rng = make_stream(108, 0);
  const std::vector<ModelDescriptor> families{
      ModelDescriptor::gaussian(3), ModelDescriptor::mixture(2, 3),
      ModelDescriptor::bernoulli_rbm(4, 3), ModelDescriptor::gaussian_rbm(3, 4)};
  const int probes = 200;
  for (const auto& m : families) {
    double worst_theta = 0.0, worst_x = 0.0;
    for (int p = 0; p < probes; ++p) {
      ParameterVector theta = random_parameters(m, 0.5, rng);
      StatePoint x = random_state(m, rng);
      const auto g = grad_theta_energy(m, theta, x);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        const double d = 1e-5 * std::max(1.0, std::abs(theta[j]));
        const double keep = theta[j];
        theta[j] = keep + d;
        const double up = energy(m, theta, x);
        theta[j] = keep - d;
        const double down = energy(m, theta, x);
        theta[j] = keep;
        worst_theta = std::max(worst_theta, rel_err((up - down) / (2.0 * d), g[j]));
      }
      if (m.family == Family::bernoulli_rbm) continue;
      const auto gx = grad_x_energy(m, theta, x);
      for (std::size_t j = 0; j < x.visible.size(); ++j) {
        const double d = 1e-5 * std::max(1.0, std::abs(x.visible[j]));
        const double keep = x.visible[j];
        x.visible[j] = keep + d;
        const double up = energy(m, theta, x);
        x.visible[j] = keep - d;
        const double down = energy(m, theta, x);
        x.visible[j] = keep;
        worst_x = std::max(worst_x, rel_err((up - down) / (2.0 * d), gx[j]));
      }
    }
    o.detail << " " << to_string(m.family) << "{probes=" << probes << " theta=" << worst_theta;
    if (m.family != Family::bernoulli_rbm) o.detail << " x=" << worst_x;
    o.detail << "}";
    o.require(worst_theta < 1e-5 && worst_x < 1e-5, std::string(to_string(m.family)) + " fd");
  }

  // Data from theta, exact walkers at theta, no protocol.
  auto stationary = [&](const ModelDescriptor& m, const ParameterVector& theta, std::uint64_t seed) {
    const auto data = synthetic_dataset(m, theta, 20000, seed);
    const auto e = init_ensemble(m, theta, 20000, seed + 1);
    const auto g = jarzynski_gradient(e, m, theta, data.rows);
    double worst = 0.0;
    for (std::size_t j = 0; j < g.value.size(); ++j) {
      worst = std::max(worst, std::abs(g.value[j]) / g.std_error[j]);
    }
    o.detail << " stationary_" << to_string(m.family) << "{max|z|=" << worst << "}";
    o.require(worst <= 3.0, std::string("gradient at truth, ") + std::string(to_string(m.family)));
  };
  stationary(ModelDescriptor::gaussian(2), ParameterVector({0.5, -1.0, 0.3, -0.2}), 208);
  stationary(ModelDescriptor::mixture(1, 2),
             ParameterVector({-2.0, 2.0, std::log(0.4), std::log(0.4), 0.0, std::log(0.25)}), 308);
  {
    const auto m = ModelDescriptor::bernoulli_rbm(4, 3);
    auto theta = random_parameters(m, 1.0, rng);
    for (double& w : theta.segment(layout_of(m).weights)) w = 0.0;
    stationary(m, theta, 408);
  }
  return o;
}

// 9. Mode-mass ratio on the 0.8/0.2 mixture: Jarzynski vs CD-1 at matched
// compute (same walkers / chains, one ULA step per update).
Outcome criterion9() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto m = ModelDescriptor::mixture(1, 2);
  const double ls = std::log(0.4);
  const ParameterVector truth({-2.0, 2.0, ls, ls, std::log(0.8), std::log(0.2)});
  const double target = mode_mass_ratio(m, truth);
  const ParameterVector theta0({-1.0, 1.0, 0.0, 0.0, 0.0, 0.0});
  std::vector<double> jarz_err, cd_err;
  for (std::uint64_t seed = 109; seed < 114; ++seed) {
    const auto data = synthetic_dataset(m, truth, 1000, seed + 1000);
    TrainConfig tc;
    tc.kernel.kind = KernelKind::ula;
    tc.kernel.h = 0.01;
    tc.learning_rate = 0.05;
    tc.steps = 400;
    tc.walkers = 1000;
    tc.ess_threshold = 0.5;
    tc.seed = seed;
    const auto jz = train(m, theta0, data, tc);
    tc.estimator = Estimator::cd;
    tc.cd_steps = 1;
    const auto cd = train(m, theta0, data, tc);
    const double rj = mode_mass_ratio(m, jz.final_theta), rc = mode_mass_ratio(m, cd.final_theta);
    jarz_err.push_back(std::abs(rj - target) / target);
    cd_err.push_back(std::abs(rc - target) / target);
    o.detail << " seed" << seed << "{jarzynski=" << rj << " cd1=" << rc << "}";
  }
  std::sort(jarz_err.begin(), jarz_err.end());
  std::sort(cd_err.begin(), cd_err.end());
  const double secs = seconds_since(t0);
  o.detail << " target=" << target << " median_rel_err{jarzynski=" << jarz_err[2]
           << " cd1=" << cd_err[2] << "} runtime=" << secs << "s";
  o.require(jarz_err[2] <= cd_err[2], "Jarzynski relative error above CD-1");
  o.require(secs < 600.0, "runtime");
  return o;
}

// 10. Byte-identical outputs across runs and thread counts, every subcommand.
Outcome criterion10() {
  Outcome o;
  const int saved = omp_get_max_threads();
  const auto dir = clirun::scratch("acceptance10");
  const auto sample_cfg = clirun::write_file(dir / "sample.toml", R"(seed = 110
[model]
family = "bernoulli-rbm"
visible = 6
hidden = 4
[protocol]
theta0 = "zeros"
theta1 = "random"
steps = 50
walkers = 2000
[output]
observables = ["visible", "hidden", "grad_theta_energy"]
oracle = true
trace_moves = true
)");
  const auto train_cfg = clirun::write_file(dir / "train.toml", R"(seed = 110
[model]
family = "gaussian-mixture"
d = 1
components = 2
[kernel]
h = 0.01
[data]
synthetic_theta = [-2.0, 2.0, -0.916290731874155, -0.916290731874155, -0.2231435513142097, -1.6094379124341003]
size = 500
[train]
learning_rate = 0.05
steps = 50
walkers = 500
theta0 = [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
)");
  struct Cmd {
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Cmd> cmds{
      {{"sample", "--config", sample_cfg}, {"steps.csv", "ensemble.csv", "moves.csv", "summary.json"}},
      {{"train", "--config", train_cfg, "--baseline", "cd1"},
       {"metrics.csv", "model.json", "summary.json", "comparison.csv", "baseline_metrics.csv",
        "baseline_model.json"}},
      {{"order-study", "--seed", "110", "--set", "study.walkers=512"},
       {"order_study.csv", "order_study.json"}},
      {{"oracle-check", "--seed", "110", "--set", "check.walkers=2000", "--set", "check.steps=50"},
       {"oracle_check.json"}},
  };
  int id = 0;
  for (const auto& cmd : cmds) {
    std::vector<std::string> first;
    bool same = true;
    for (const char* threads : {"1", "1", "2", "4"}) {
      const auto out = dir / ("run" + std::to_string(id++));
      auto args = cmd.args;
      args.insert(args.end(), {"--threads", threads, "--out", out.string()});
      const auto r = clirun::run(args);
      if (r.code != 0 && r.code != 1) {
        o.require(false, cmd.args[0] + " exited " + std::to_string(r.code) + ": " + r.err);
        same = false;
        break;
      }
      std::vector<std::string> contents;
      for (const auto& f : cmd.files) contents.push_back(clirun::read_file(out / f));
      if (first.empty()) {
        first = contents;
      } else if (contents != first) {
        same = false;
      }
    }
    o.detail << " " << cmd.args[0] << "=" << (same ? "identical" : "DIFFERENT");
    o.require(same, cmd.args[0] + " outputs differ");
  }
  omp_set_num_threads(saved);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> selected;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      const int n = std::atoi(argv[i]);
      if (n < 1 || n > 10) {
        std::cerr << "usage: acceptance [1-10 ...]\n";
        return 2;
      }
      selected.push_back(n);
    }
  } else {
    for (int n = 1; n <= 10; ++n) selected.push_back(n);
  }
  bool all = true;
  for (int n : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << " exception: " << e.what();
    }
    std::cout << "criterion " << n << ": " << (o.passed ? "PASS" : "FAIL") << o.detail.str()
              << std::endl;
    all = all && o.passed;
  }
  return all ? 0 : 1;
}
