#include <doctest.h>

#include <omp.h>

#include <cstring>
#include <string>

#include "jarz/interpolant.hpp"
#include "jarz/kernels.hpp"
#include "jarz/models.hpp"
#include "jarz/oracle.hpp"
#include "jarz/smc.hpp"
#include "support/cli_run.hpp"

using namespace jarz;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool identical(const Ensemble& a, const Ensemble& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.walkers[i];
    const auto& y = b.walkers[i];
    if (!same_bits(x.a, y.a) || x.x.visible.size() != y.x.visible.size() ||
        x.x.hidden.size() != y.x.hidden.size()) {
      return false;
    }
    for (std::size_t j = 0; j < x.x.visible.size(); ++j) {
      if (!same_bits(x.x.visible[j], y.x.visible[j])) return false;
    }
    for (std::size_t j = 0; j < x.x.hidden.size(); ++j) {
      if (!same_bits(x.x.hidden[j], y.x.hidden[j])) return false;
    }
  }
  return a.streams == b.streams && same_bits(estimate_log_z(a), estimate_log_z(b));
}

// Restores the thread count a test changed.
struct ThreadGuard {
  int saved = omp_get_max_threads();
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

Ensemble rbm_run(bool use_serial, int threads) {
  omp_set_num_threads(threads);
  const auto m = ModelDescriptor::bernoulli_rbm(5, 3);
  Rng rng = make_stream(7, 0);
  const auto theta1 = random_parameters(m, 1.0, rng);
  const auto theta0 = zero_parameters(m);
  const GibbsKernel kernel(m);
  Ensemble e = init_ensemble(m, theta0, 301, 9);
  for (int k = 0; k < 20; ++k) {
    const auto a = lerp(theta0, theta1, k / 20.0), b = lerp(theta0, theta1, (k + 1) / 20.0);
    if (use_serial) {
      serial::advance(e, kernel, a, b);
    } else {
      advance(e, kernel, a, b);
    }
    maybe_resample(e, 0.5);
  }
  return e;
}

Ensemble ula_run(bool use_serial, int threads) {
  omp_set_num_threads(threads);
  const auto m = ModelDescriptor::gaussian(2);
  const ParameterVector t0({0.0, 0.0, 0.0, 0.0}), t1({1.0, -1.0, -0.5, 0.3});
  const UlaKernel kernel(m, 0.01);
  Ensemble e = init_ensemble(m, t0, 257, 4);
  for (int k = 0; k < 15; ++k) {
    const auto a = lerp(t0, t1, k / 15.0), b = lerp(t0, t1, (k + 1) / 15.0);
    if (use_serial) {
      serial::advance(e, kernel, a, b);
    } else {
      advance(e, kernel, a, b);
    }
  }
  return e;
}

Ensemble drifted_run(bool use_serial, int threads) {
  omp_set_num_threads(threads);
  const auto path = GaussianPath::benchmark();
  Rng rng = make_stream(12, 0);
  std::vector<StatePoint> states(199);
  for (auto& s : states) s.visible = {path.mean(0.0)[0] + path.scale(0.0) * standard_normal(rng)};
  Ensemble e = init_ensemble(states, 0.0, 12);
  const double h = 1.0 / 16.0;
  for (int k = 0; k < 16; ++k) {
    if (use_serial) {
      serial::advance_drifted(e, path, k * h, (k + 1) * h, h, 1.0);
    } else {
      advance_drifted(e, path, k * h, (k + 1) * h, h, 1.0);
    }
  }
  return e;
}

}  // namespace

TEST_SUITE("determinism") {
  TEST_CASE("parallel advance matches the serial reference bit for bit") {
    ThreadGuard guard;
    const auto ref = rbm_run(true, 1);
    for (int t : {1, 2, 3, 4}) CHECK(identical(ref, rbm_run(false, t)));
    const auto uref = ula_run(true, 1);
    for (int t : {1, 2, 3}) CHECK(identical(uref, ula_run(false, t)));
    const auto dref = drifted_run(true, 1);
    for (int t : {1, 2, 3}) CHECK(identical(dref, drifted_run(false, t)));
  }

  TEST_CASE("oracle is thread-invariant and matches the serial reference") {
    ThreadGuard guard;
    const auto m = ModelDescriptor::bernoulli_rbm(6, 4);
    Rng rng = make_stream(3, 0);
    const auto theta = random_parameters(m, 1.0, rng);
    const std::vector<NamedObservable> obs{
        {"grad", [&](const StatePoint& x) { return grad_theta_energy(m, theta, x); }}};
    // The serial reference normalizes in two passes, so it agrees to roundoff only.
    const auto ref = serial::enumerate_oracle(m, theta, obs);
    omp_set_num_threads(1);
    const auto one = enumerate_oracle(m, theta, obs);
    CHECK(std::abs(one.log_z - ref.log_z) < 1e-12);
    for (std::size_t j = 0; j < ref.expectations.at("grad").size(); ++j) {
      CHECK(std::abs(one.expectations.at("grad")[j] - ref.expectations.at("grad")[j]) < 1e-12);
    }
    for (int t : {2, 3, 4}) {
      omp_set_num_threads(t);
      const auto r = enumerate_oracle(m, theta, obs);
      CHECK(same_bits(r.log_z, one.log_z));
      const auto& a = r.expectations.at("grad");
      const auto& b = one.expectations.at("grad");
      REQUIRE(a.size() == b.size());
      bool all = true;
      for (std::size_t j = 0; j < a.size(); ++j) all = all && same_bits(a[j], b[j]);
      CHECK(all);
    }
  }

  TEST_CASE("order study is thread-invariant") {
    ThreadGuard guard;
    OrderStudyConfig cfg;
    cfg.h_list = {0.25, 0.125, 0.0625, 0.03125};
    cfg.walkers = 97;
    cfg.seed = 5;
    omp_set_num_threads(1);
    const auto a = order_study(GaussianPath::benchmark(), cfg);
    omp_set_num_threads(3);
    const auto b = order_study(GaussianPath::benchmark(), cfg);
    CHECK(same_bits(a.slope, b.slope));
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(same_bits(a.rows[i].rms_delta_a, b.rows[i].rms_delta_a));
      CHECK(same_bits(a.rows[i].log_mean_weight, b.rows[i].log_mean_weight));
    }
  }

  TEST_CASE("CLI outputs are byte-identical across runs and thread counts") {
    ThreadGuard guard;
    const auto dir = clirun::scratch("determinism");
    const auto sample_cfg = clirun::write_file(dir / "sample.toml", R"(seed = 8
[model]
family = "gaussian-rbm"
visible = 2
hidden = 3
[kernel]
kind = "gibbs"
[protocol]
theta0 = "zeros"
theta1 = "random"
random_scale = 0.5
steps = 10
walkers = 500
ess_threshold = 0.8
[output]
observables = ["visible", "hidden"]
oracle = true
trace_moves = true
)");
    const auto train_cfg = clirun::write_file(dir / "train.toml", R"(seed = 2
[model]
family = "gaussian-mixture"
d = 1
components = 2
[kernel]
h = 0.01
[data]
synthetic_theta = [-2.0, 2.0, -0.9, -0.9, 0.0, -1.4]
size = 200
[train]
learning_rate = 0.01
steps = 8
walkers = 200
batch_size = 50
theta0 = [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
)");
    struct Cmd {
      std::vector<std::string> args;
      std::vector<std::string> files;
    };
    const std::vector<Cmd> cmds{
        {{"sample", "--config", sample_cfg},
         {"steps.csv", "ensemble.csv", "moves.csv", "summary.json"}},
        {{"train", "--config", train_cfg, "--baseline", "pcd"},
         {"metrics.csv", "model.json", "summary.json", "comparison.csv", "baseline_metrics.csv",
          "baseline_model.json"}},
        {{"order-study", "--seed", "3", "--set", "study.h=[0.25, 0.125, 0.0625, 0.03125]", "--set",
          "study.walkers=80"},
         {"order_study.csv", "order_study.json"}},
        {{"oracle-check", "--seed", "2", "--set", "check.walkers=400", "--set", "check.steps=10",
          "--set", "check.bernoulli_visible=3", "--set", "check.bernoulli_hidden=2", "--set",
          "check.gaussian_visible=2", "--set", "check.gaussian_hidden=2", "--set",
          "check.probes=50", "--set", "check.gradient_probes=5"},
         {"oracle_check.json"}},
    };
    int run_id = 0;
    for (const auto& cmd : cmds) {
      CAPTURE(cmd.args[0]);
      std::vector<std::string> first;
      for (const char* threads : {"1", "1", "2", "3"}) {
        const auto out = dir / ("run" + std::to_string(run_id++));
        auto args = cmd.args;
        args.insert(args.end(), {"--threads", threads, "--out", out.string()});
        const auto r = clirun::run(args);
        REQUIRE(r.code <= 1);
        std::vector<std::string> contents;
        for (const auto& f : cmd.files) contents.push_back(clirun::read_file(out / f));
        if (first.empty()) {
          first = contents;
          for (const auto& c : first) CHECK(!c.empty());
        } else {
          for (std::size_t i = 0; i < contents.size(); ++i) {
            CAPTURE(cmd.files[i]);
            CHECK(contents[i] == first[i]);
          }
        }
      }
    }
  }
}
