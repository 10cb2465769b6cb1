#include "jarz/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "jarz/error.hpp"
#include "jarz/models.hpp"

namespace jarz {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

nlohmann::json model_to_json(const ModelDescriptor& model, const ParameterVector& theta) {
  nlohmann::json dims;
  if (model.is_rbm()) {
    dims["visible"] = model.visible;
    dims["hidden"] = model.hidden;
  } else {
    dims["d"] = model.visible;
    if (model.family == Family::gaussian_mixture) dims["components"] = model.components;
  }
  return {{"family", std::string(to_string(model.family))}, {"dims", dims},
          {"theta", theta.values}};
}

std::pair<ModelDescriptor, ParameterVector> model_from_json(const nlohmann::json& j) {
  try {
    const Family family = parse_family(j.at("family").get<std::string>());
    const auto& dims = j.at("dims");
    ModelDescriptor model;
    switch (family) {
      case Family::gaussian: model = ModelDescriptor::gaussian(dims.at("d")); break;
      case Family::gaussian_mixture:
        model = ModelDescriptor::mixture(dims.at("d"), dims.at("components"));
        break;
      case Family::bernoulli_rbm:
        model = ModelDescriptor::bernoulli_rbm(dims.at("visible"), dims.at("hidden"));
        break;
      case Family::gaussian_rbm:
        model = ModelDescriptor::gaussian_rbm(dims.at("visible"), dims.at("hidden"));
        break;
    }
    ParameterVector theta(j.at("theta").get<std::vector<double>>());
    validate_parameters(model, theta);
    return {model, theta};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model JSON: ") + e.what());
  }
}

std::string ensemble_csv(const Ensemble& ensemble) {
  std::string out = "walker";
  if (!ensemble.walkers.empty()) {
    const auto& x = ensemble.walkers.front().x;
    for (std::size_t j = 0; j < x.visible.size(); ++j) out += ",v" + std::to_string(j);
    for (std::size_t j = 0; j < x.hidden.size(); ++j) out += ",h" + std::to_string(j);
  }
  out += ",a\n";
  for (std::size_t i = 0; i < ensemble.walkers.size(); ++i) {
    const auto& w = ensemble.walkers[i];
    out += std::to_string(i);
    for (double v : w.x.visible) out += "," + format_double(v);
    for (double v : w.x.hidden) out += "," + format_double(v);
    out += "," + format_double(w.a) + "\n";
  }
  return out;
}

nlohmann::json ensemble_summary(const Ensemble& ensemble) {
  return {{"k", ensemble.step},
          {"ess", ess(ensemble)},
          {"log_z", estimate_log_z(ensemble)},
          {"log_z_se", log_z_std_error(ensemble)},
          {"resample_steps", ensemble.resample_steps}};
}

std::string metrics_csv(const TrainMetrics& metrics) {
  std::string out = "k,cross_entropy,log_z,log_z_se,mean_energy,ess,grad_norm,resampled\n";
  for (const auto& m : metrics.steps) {
    out += std::to_string(m.k) + "," + format_double(m.cross_entropy) + "," +
           format_double(m.log_z) + "," + format_double(m.log_z_se) + "," +
           format_double(m.mean_energy) + "," + format_double(m.ess) + "," +
           format_double(m.grad_norm) + "," + (m.resampled ? "1" : "0") + "\n";
  }
  return out;
}

std::string order_study_csv(const OrderStudyReport& report) {
  std::string out =
      "h,steps,rms_delta_a,n,log_mean_weight,log_mean_weight_se,mean_weight,mean_weight_se\n";
  for (const auto& r : report.rows) {
    out += format_double(r.h) + "," + std::to_string(r.steps) + "," +
           format_double(r.rms_delta_a) + "," + std::to_string(r.n) + "," +
           format_double(r.log_mean_weight) + "," + format_double(r.log_mean_weight_se) + "," +
           format_double(r.mean_weight) + "," + format_double(r.mean_weight_se) + "\n";
  }
  return out;
}

nlohmann::json order_study_summary(const OrderStudyReport& report) {
  return {{"slope", report.slope},
          {"intercept", report.intercept},
          {"excluded_largest_h", report.excluded_largest},
          {"seed", report.seed}};
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

}  // namespace jarz
