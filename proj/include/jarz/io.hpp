#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "jarz/interpolant.hpp"
#include "jarz/smc.hpp"
#include "jarz/trainer.hpp"
#include "jarz/types.hpp"

// Text outputs. Doubles are written in shortest round-trip form, so logged
// values re-parse bit-exactly and identical runs give identical bytes.
namespace jarz {

std::string format_double(double v);

// {"family": ..., "dims": {...}, "theta": [...]}
nlohmann::json model_to_json(const ModelDescriptor& model, const ParameterVector& theta);
std::pair<ModelDescriptor, ParameterVector> model_from_json(const nlohmann::json& j);

// walker, visible..., hidden..., a
std::string ensemble_csv(const Ensemble& ensemble);
// k, ess, log_z, log_z_se, resample_steps
nlohmann::json ensemble_summary(const Ensemble& ensemble);

std::string metrics_csv(const TrainMetrics& metrics);

std::string order_study_csv(const OrderStudyReport& report);
nlohmann::json order_study_summary(const OrderStudyReport& report);

// Creates parent directories as needed.
void write_text(const std::string& path, const std::string& text);

}  // namespace jarz
