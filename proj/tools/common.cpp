#include "common.hpp"

#include <filesystem>

#include "jarz/io.hpp"
#include "jarz/models.hpp"

namespace jarz::cli {

std::set<std::string> model_keys() {
  return {"model.family", "model.d", "model.components", "model.visible", "model.hidden"};
}

std::set<std::string> kernel_keys() {
  return {"kernel.kind", "kernel.h", "kernel.epsilon", "kernel.scan_order", "kernel.zero_noise"};
}

std::set<std::string> with(std::set<std::string> a, const std::set<std::string>& b) {
  a.insert(b.begin(), b.end());
  return a;
}

void echo_set(nlohmann::json& echo, const std::string& key, nlohmann::json value) {
  nlohmann::json* node = &echo;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ModelDescriptor read_model(const Config& c, nlohmann::json& echo) {
  const std::string name = c.require_string("model.family");
  Family family;
  try {
    family = parse_family(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model.family: ") + e.what());
  }
  ModelDescriptor m;
  echo_set(echo, "model.family", name);
  switch (family) {
    case Family::gaussian:
      m = ModelDescriptor::gaussian(c.require_uint("model.d"));
      echo_set(echo, "model.d", m.visible);
      break;
    case Family::gaussian_mixture:
      m = ModelDescriptor::mixture(c.require_uint("model.d"), c.require_uint("model.components"));
      echo_set(echo, "model.d", m.visible);
      echo_set(echo, "model.components", m.components);
      break;
    case Family::bernoulli_rbm:
    case Family::gaussian_rbm: {
      const auto v = c.require_uint("model.visible");
      const auto h = c.require_uint("model.hidden");
      m = family == Family::bernoulli_rbm ? ModelDescriptor::bernoulli_rbm(v, h)
                                          : ModelDescriptor::gaussian_rbm(v, h);
      echo_set(echo, "model.visible", v);
      echo_set(echo, "model.hidden", h);
      break;
    }
  }
  const bool rbm = m.is_rbm();
  for (const char* k : {"model.d", "model.components"}) {
    if (rbm && c.has(k)) throw ConfigError(std::string("config key '") + k + "' does not apply to " + name);
  }
  for (const char* k : {"model.visible", "model.hidden"}) {
    if (!rbm && c.has(k)) throw ConfigError(std::string("config key '") + k + "' does not apply to " + name);
  }
  if (family == Family::gaussian && c.has("model.components")) {
    throw ConfigError("config key 'model.components' does not apply to gaussian");
  }
  m.validate();
  return m;
}

KernelConfig read_kernel(const Config& c, const ModelDescriptor& model, nlohmann::json& echo) {
  KernelConfig k;
  const std::string fallback = model.is_rbm() ? "gibbs" : "ula";
  const std::string kind = c.get_string("kernel.kind", fallback);
  try {
    k.kind = parse_kernel_kind(kind);
    k.scan_order = parse_scan_order(c.get_string("kernel.scan_order", "reversed"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  echo_set(echo, "kernel.kind", kind);
  if (k.kind != KernelKind::gibbs) {
    k.h = c.require_double("kernel.h");
    echo_set(echo, "kernel.h", k.h);
  } else if (c.has("kernel.h")) {
    throw ConfigError("config key 'kernel.h' does not apply to the gibbs kernel");
  }
  k.epsilon = c.get_double("kernel.epsilon", 1.0);
  k.zero_noise = c.get_bool("kernel.zero_noise", false);
  if (k.kind == KernelKind::gibbs) {
    echo_set(echo, "kernel.scan_order", std::string(to_string(k.scan_order)));
  } else {
    echo_set(echo, "kernel.zero_noise", k.zero_noise);
  }
  if (k.kind == KernelKind::drifted) echo_set(echo, "kernel.epsilon", k.epsilon);
  k.validate();
  return k;
}

ParameterVector read_theta(const Config& c, const std::string& key, const ModelDescriptor& model,
                           double random_scale, Rng& rng, nlohmann::json& echo) {
  ParameterVector theta;
  if (c.is_array(key)) {
    theta = ParameterVector(c.require_doubles(key));
  } else {
    const std::string word = c.require_string(key);
    if (word == "zeros") {
      theta = zero_parameters(model);
    } else if (word == "random") {
      theta = random_parameters(model, random_scale, rng);
    } else {
      throw ConfigError("config key '" + key + "' must be an array, \"zeros\" or \"random\"");
    }
  }
  try {
    validate_parameters(model, theta);
  } catch (const InvalidArgument& e) {
    throw ConfigError(key + ": " + e.what());
  }
  echo_set(echo, key, theta.values);
  return theta;
}

std::string out_path(const RunContext& ctx, const std::string& name) {
  return (std::filesystem::path(ctx.out_dir) / name).string();
}

void write_json(const RunContext& ctx, const std::string& name, const nlohmann::json& j) {
  write_text(out_path(ctx, name), j.dump(2) + "\n");
}

}  // namespace jarz::cli
