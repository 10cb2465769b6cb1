#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "jarz/kernels.hpp"
#include "jarz/types.hpp"

namespace jarz::cli {

enum ExitCode { kPass = 0, kCheckFailure = 1, kInputError = 2, kNumericalAbort = 3 };

struct RunContext {
  Config config;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  // subcommand-specific flags
  std::string baseline;
  bool flip_increment_sign = false;
};

// Streams reserved for configuration-level draws, away from walker indices.
inline constexpr std::uint64_t kThetaStream = (std::uint64_t{1} << 63) + 1;

std::set<std::string> model_keys();
std::set<std::string> kernel_keys();
std::set<std::string> with(std::set<std::string> a, const std::set<std::string>& b);

ModelDescriptor read_model(const Config& c, nlohmann::json& echo);
KernelConfig read_kernel(const Config& c, const ModelDescriptor& model, nlohmann::json& echo);

// `key` holds an array of values, "zeros", or "random" (iid N(0, scale^2)
// drawn from `rng`).
ParameterVector read_theta(const Config& c, const std::string& key, const ModelDescriptor& model,
                           double random_scale, Rng& rng, nlohmann::json& echo);

// Sets echo[a][b]... for a dotted key.
void echo_set(nlohmann::json& echo, const std::string& key, nlohmann::json value);

std::string out_path(const RunContext& ctx, const std::string& name);
void write_json(const RunContext& ctx, const std::string& name, const nlohmann::json& j);

int run_sample(RunContext& ctx);
int run_train(RunContext& ctx);
int run_order_study(RunContext& ctx);
int run_oracle_check(RunContext& ctx);

}  // namespace jarz::cli
