#include <doctest.h>

#include <cmath>
#include <string>

#include <json.hpp>

#include "jarz/models.hpp"
#include "support/cli_run.hpp"

using clirun::read_csv;
using clirun::read_file;
using clirun::run;
using clirun::write_file;

namespace {

const char* kGaussianSample = R"(seed = 3
[model]
family = "gaussian"
d = 2
[kernel]
h = 0.01
[protocol]
theta0 = [0.5, -0.5, 0.0, 0.2]
theta1 = [0.5, -0.5, 0.0, 0.2]
steps = 20
walkers = 2000
)";

const char* kRbmSample = R"(seed = 5
[model]
family = "bernoulli-rbm"
visible = 4
hidden = 3
[protocol]
theta0 = "zeros"
theta1 = "random"
steps = 30
walkers = 3000
[output]
observables = ["visible", "grad_theta_energy"]
oracle = true
trace_moves = true
)";

const char* kMixtureTrain = R"(seed = 2
[model]
family = "gaussian-mixture"
d = 1
components = 2
[kernel]
h = 0.01
[data]
synthetic_theta = [-2.0, 2.0, -0.916290731874155, -0.916290731874155, 0.0, -1.3862943611198906]
size = 400
[train]
learning_rate = 0.01
steps = 15
walkers = 300
theta0 = [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
)";

double num(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"sample", "--threads", "-1"}).code == 2);
  }

  TEST_CASE("constant protocol keeps log Z at the reference") {
    const auto dir = clirun::scratch("cli_const");
    const auto cfg = write_file(dir / "c.toml", kGaussianSample);
    const auto r = run({"sample", "--config", cfg, "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir / "out" / "steps.csv");
    REQUIRE(rows.size() == 22);
    CHECK(rows[0][0] == "k");
    CHECK(rows[0][2] == "log_z");
    const double ref = jarz::log_z_reference(jarz::ModelDescriptor::gaussian(2),
                                             jarz::ParameterVector({0.5, -0.5, 0.0, 0.2}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(std::abs(num(rows[i][2]) - ref) <= 3.0 * num(rows[i][3]) + 1e-12);
    }
    const auto summary = nlohmann::json::parse(read_file(dir / "out" / "summary.json"));
    CHECK(summary["config"]["kernel"]["h"] == 0.01);
    CHECK(summary["config"]["protocol"]["walkers"] == 2000);
    CHECK(summary["seed"] == 3);
  }

  TEST_CASE("RBM protocol agrees with the oracle") {
    const auto dir = clirun::scratch("cli_rbm");
    const auto cfg = write_file(dir / "c.toml", kRbmSample);
    const auto r = run({"sample", "--config", cfg, "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    const auto summary = nlohmann::json::parse(read_file(dir / "out" / "summary.json"));
    CHECK(summary["oracle"]["within_3se"] == true);
    CHECK(summary["config"]["protocol"]["theta1"].size() == 4 * 3 + 4 + 3);
    const auto moves = read_csv(dir / "out" / "moves.csv");
    CHECK(moves.size() == 31);
    for (std::size_t i = 1; i < moves.size(); ++i) {
      CHECK(num(moves[i][2]) <= 0.0);
      CHECK(num(moves[i][3]) <= 0.0);
    }
    const auto steps = read_csv(dir / "out" / "steps.csv");
    CHECK(steps[0].size() == 5 + 2 * 4 + 2 * 19);
    CHECK(read_csv(dir / "out" / "ensemble.csv").size() == 3001);
  }

  TEST_CASE("config errors exit 2 and name the key") {
    const auto dir = clirun::scratch("cli_errors");
    std::string text = kGaussianSample;
    const auto no_h = write_file(dir / "no_h.toml", text.replace(text.find("h = 0.01"), 8, ""));
    auto r = run({"sample", "--config", no_h, "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("kernel.h") != std::string::npos);

    const auto cfg = write_file(dir / "ok.toml", kGaussianSample);
    r = run({"sample", "--config", cfg, "--set", "protocol.walkrs=10", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("protocol.walkrs") != std::string::npos);

    r = run({"sample", "--config", write_file(dir / "bad.toml", "[model\nfamily=1"), "--out",
             (dir / "o").string()});
    CHECK(r.code == 2);
    r = run({"sample", "--config", (dir / "absent.toml").string()});
    CHECK(r.code == 2);
    r = run({"sample", "--config", cfg, "--set", "kernel.kind=\"drifted\"", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    r = run({"sample", "--config", cfg, "--set", "protocol.theta1=[1.0]", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
  }

  TEST_CASE("overrides and seed flag") {
    const auto dir = clirun::scratch("cli_set");
    const auto cfg = write_file(dir / "c.toml", kGaussianSample);
    const auto r = run({"sample", "--config", cfg, "--set", "protocol.steps=4", "--set",
                        "protocol.walkers=50", "--seed", "11", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    CHECK(read_csv(dir / "o" / "steps.csv").size() == 6);
    const auto summary = nlohmann::json::parse(read_file(dir / "o" / "summary.json"));
    CHECK(summary["seed"] == 11);
    CHECK(summary["config"]["protocol"]["walkers"] == 50);
  }

  TEST_CASE("weight collapse exits 3") {
    const auto dir = clirun::scratch("cli_collapse");
    const auto cfg = write_file(dir / "c.toml", kRbmSample);
    const auto r = run({"sample", "--config", cfg, "--set", "protocol.random_scale=60", "--set",
                        "protocol.steps=1", "--set", "protocol.walkers=10", "--set",
                        "output.oracle=false", "--out", (dir / "o").string()});
    CHECK(r.code == 3);
  }

  TEST_CASE("train writes metrics and a baseline comparison") {
    const auto dir = clirun::scratch("cli_train");
    const auto cfg = write_file(dir / "c.toml", kMixtureTrain);
    const auto r = run({"train", "--config", cfg, "--baseline", "cd1", "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto metrics = read_csv(dir / "o" / "metrics.csv");
    REQUIRE(metrics.size() == 16);
    CHECK(metrics[0][1] == "cross_entropy");
    for (std::size_t i = 1; i < metrics.size(); ++i) {
      CHECK(num(metrics[i][1]) == num(metrics[i][2]) + num(metrics[i][4]));
    }
    const auto cmp = read_csv(dir / "o" / "comparison.csv");
    REQUIRE(cmp.size() == 3);
    CHECK(cmp[1][0] == "jarzynski");
    CHECK(cmp[2][0] == "cd1");
    CHECK(cmp[1][1] == "mode_mass_ratio");
    CHECK(num(cmp[1][3]) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(std::filesystem::exists(dir / "o" / "baseline_model.json"));
    const auto model = nlohmann::json::parse(read_file(dir / "o" / "model.json"));
    CHECK(model["family"] == "gaussian-mixture");
  }

  TEST_CASE("train with zero learning rate keeps cross-entropy flat") {
    const auto dir = clirun::scratch("cli_train_flat");
    const auto cfg = write_file(dir / "c.toml", kMixtureTrain);
    const auto r = run({"train", "--config", cfg, "--set", "train.learning_rate=0.0", "--out",
                        (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto m = read_csv(dir / "o" / "metrics.csv");
    const double first = num(m[1][1]);
    for (std::size_t i = 2; i < m.size(); ++i) {
      CHECK(std::abs(num(m[i][1]) - first) <= 3.0 * num(m[i][3]) + 1e-12);
    }
  }

  TEST_CASE("train input errors") {
    const auto dir = clirun::scratch("cli_train_err");
    std::string text = kMixtureTrain;
    text.replace(text.find("synthetic_theta"), text.find("size = 400") + 10 - text.find("synthetic_theta"),
                 "path = \"" + (dir / "nope.csv").string() + "\"");
    auto r = run({"train", "--config", write_file(dir / "c.toml", text), "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("nope.csv") != std::string::npos);
    r = run({"train", "--config", write_file(dir / "d.toml", kMixtureTrain), "--baseline", "sgd",
             "--out", (dir / "o").string()});
    CHECK(r.code == 2);
  }

  TEST_CASE("order-study") {
    const auto dir = clirun::scratch("cli_order");
    auto r = run({"order-study", "--set", "study.h=[0.1]", "--out", (dir / "o").string()});
    CHECK(r.code == 2);
    r = run({"order-study", "--set", "study.h=[0.25, 0.125, 0.0625, 0.03125]", "--set",
             "study.walkers=64", "--seed", "4", "--out", (dir / "a").string()});
    REQUIRE(r.code == 0);
    r = run({"order-study", "--set", "study.h=[0.25, 0.125, 0.0625, 0.03125]", "--set",
             "study.walkers=64", "--seed", "4", "--out", (dir / "b").string()});
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "a" / "order_study.csv") == read_file(dir / "b" / "order_study.csv"));
    const auto s = nlohmann::json::parse(read_file(dir / "a" / "order_study.json"));
    CHECK(s.contains("slope"));
    CHECK(s["unit_mean_weight"].size() == 4);
    CHECK(read_csv(dir / "a" / "order_study.csv")[0][2] == "rms_delta_a");
  }

  TEST_CASE("oracle-check outcomes") {
    const auto dir = clirun::scratch("cli_oracle");
    const std::vector<std::string> small{"--set", "check.walkers=3000", "--set", "check.steps=40",
                                         "--set", "check.bernoulli_visible=4", "--set",
                                         "check.bernoulli_hidden=3", "--set",
                                         "check.gaussian_visible=2", "--set", "check.gaussian_hidden=3"};
    auto args = std::vector<std::string>{"oracle-check", "--seed", "1", "--out", (dir / "a").string()};
    args.insert(args.end(), small.begin(), small.end());
    auto r = run(args);
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS unbiasedness") != std::string::npos);
    const auto report = nlohmann::json::parse(read_file(dir / "a" / "oracle_check.json"));
    CHECK(report["passed"] == true);
    CHECK(report["checks"].size() == 5);

    args.push_back("--debug-flip-increment-sign");
    r = run(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("unbiasedness") != std::string::npos);

    r = run({"oracle-check", "--set", "check.bernoulli_visible=20", "--set", "check.bernoulli_hidden=20",
             "--out", (dir / "b").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("oracle too large") != std::string::npos);
  }
}
