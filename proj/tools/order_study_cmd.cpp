#include <cmath>
#include <ostream>

#include "common.hpp"
#include "jarz/interpolant.hpp"
#include "jarz/io.hpp"

namespace jarz::cli {

int run_order_study(RunContext& ctx) {
  const Config& c = ctx.config;
  c.check_keys({"seed", "path.mean_start", "path.mean_end", "path.scale_start", "path.scale_end",
                "path.ramp", "study.epsilon", "study.h", "study.walkers", "study.steps",
                "study.slope_band"});
  nlohmann::json echo;
  echo["seed"] = ctx.seed;
  const auto bench = GaussianPath::benchmark();
  const auto m0 = c.has("path.mean_start") ? c.require_doubles("path.mean_start") : bench.mean_start();
  const auto m1 = c.has("path.mean_end") ? c.require_doubles("path.mean_end") : bench.mean_end();
  const double g0 = c.get_double("path.scale_start", bench.scale_start());
  const double g1 = c.get_double("path.scale_end", bench.scale_end());
  const std::string ramp_name = c.get_string("path.ramp", "smoothstep");
  if (ramp_name != "smoothstep" && ramp_name != "linear") {
    throw ConfigError("path.ramp must be smoothstep or linear");
  }
  const GaussianPath path(m0, m1, g0, g1,
                          ramp_name == "linear" ? Ramp::linear : Ramp::smoothstep);
  echo_set(echo, "path.mean_start", m0);
  echo_set(echo, "path.mean_end", m1);
  echo_set(echo, "path.scale_start", g0);
  echo_set(echo, "path.scale_end", g1);
  echo_set(echo, "path.ramp", ramp_name);

  OrderStudyConfig oc;
  oc.seed = ctx.seed;
  oc.epsilon = c.get_double("study.epsilon", 1.0);
  if (c.has("study.h")) {
    oc.h_list = c.require_doubles("study.h");
  } else {
    for (int e = 4; e <= 9; ++e) oc.h_list.push_back(std::ldexp(1.0, -e));
  }
  oc.walkers = c.get_uint("study.walkers", 4096);
  oc.steps = c.get_uint("study.steps", 0);
  const auto band = c.has("study.slope_band") ? c.require_doubles("study.slope_band")
                                              : std::vector<double>{1.3, 1.7};
  if (band.size() != 2 || !(band[0] < band[1])) {
    throw ConfigError("study.slope_band must be [low, high] with low < high");
  }
  try {
    validate_h_list(oc.h_list);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("study.h: ") + e.what());
  }
  echo_set(echo, "study.epsilon", oc.epsilon);
  echo_set(echo, "study.h", oc.h_list);
  echo_set(echo, "study.walkers", oc.walkers);
  echo_set(echo, "study.steps", oc.steps);
  echo_set(echo, "study.slope_band", band);

  const auto report = order_study(path, oc);

  nlohmann::json summary = order_study_summary(report);
  summary["command"] = "order-study";
  summary["config"] = echo;
  summary["slope_band"] = band;
  summary["slope_in_band"] = report.slope >= band[0] && report.slope <= band[1];
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& r : report.rows) {
    weights.push_back({{"h", r.h},
                       {"mean_weight", r.mean_weight},
                       {"mean_weight_se", r.mean_weight_se},
                       {"within_3se", std::abs(r.mean_weight - 1.0) <= 3.0 * r.mean_weight_se}});
  }
  summary["unit_mean_weight"] = weights;
  write_text(out_path(ctx, "order_study.csv"), order_study_csv(report));
  write_json(ctx, "order_study.json", summary);
  *ctx.out << "order-study: slope=" << format_double(report.slope)
           << (report.excluded_largest ? " (largest h excluded)" : "") << "\n";
  return kPass;
}

}  // namespace jarz::cli
