#include "jarz/types.hpp"

#include "jarz/error.hpp"

namespace jarz {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::gaussian: return "gaussian";
    case Family::gaussian_mixture: return "gaussian-mixture";
    case Family::bernoulli_rbm: return "bernoulli-rbm";
    case Family::gaussian_rbm: return "gaussian-rbm";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "gaussian-mixture") return Family::gaussian_mixture;
  if (name == "bernoulli-rbm") return Family::bernoulli_rbm;
  if (name == "gaussian-rbm") return Family::gaussian_rbm;
  throw InvalidArgument("unknown model family '" + std::string(name) + "'");
}

ModelDescriptor ModelDescriptor::gaussian(std::size_t d) {
  return {Family::gaussian, d, 0, 0};
}

ModelDescriptor ModelDescriptor::mixture(std::size_t d, std::size_t components) {
  return {Family::gaussian_mixture, d, 0, components};
}

ModelDescriptor ModelDescriptor::bernoulli_rbm(std::size_t visible, std::size_t hidden) {
  return {Family::bernoulli_rbm, visible, hidden, 0};
}

ModelDescriptor ModelDescriptor::gaussian_rbm(std::size_t visible, std::size_t hidden) {
  return {Family::gaussian_rbm, visible, hidden, 0};
}

void ModelDescriptor::validate() const {
  if (visible == 0) throw InvalidArgument("model dimension must be >= 1");
  if (is_rbm() && hidden == 0) throw InvalidArgument("RBM hidden dimension must be >= 1");
  if (!is_rbm() && hidden != 0) {
    throw InvalidArgument("continuous families have no hidden units");
  }
  if (family == Family::gaussian_mixture && components == 0) {
    throw InvalidArgument("mixture needs at least one component");
  }
}

std::size_t ModelDescriptor::parameter_count() const { return layout_of(*this).total; }

ParameterLayout layout_of(const ModelDescriptor& model) {
  ParameterLayout l;
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    Segment s{at, n};
    at += n;
    return s;
  };
  switch (model.family) {
    case Family::gaussian:
      l.mean = take(model.visible);
      l.log_scale = take(model.visible);
      break;
    case Family::gaussian_mixture:
      l.mean = take(model.components * model.visible);
      l.log_scale = take(model.components * model.visible);
      l.logits = take(model.components);
      break;
    case Family::bernoulli_rbm:
      l.weights = take(model.visible * model.hidden);
      l.visible_bias = take(model.visible);
      l.hidden_bias = take(model.hidden);
      break;
    case Family::gaussian_rbm:
      l.weights = take(model.visible * model.hidden);
      l.visible_bias = take(model.visible);
      l.hidden_bias = take(model.hidden);
      l.log_variance = take(model.visible);
      break;
  }
  l.total = at;
  return l;
}

ParameterVector zero_parameters(const ModelDescriptor& model) {
  return ParameterVector(std::vector<double>(model.parameter_count(), 0.0));
}

ParameterVector lerp(const ParameterVector& a, const ParameterVector& b, double s) {
  if (a.size() != b.size()) throw InvalidArgument("lerp: parameter sizes differ");
  ParameterVector out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - s) * a[i] + s * b[i];
  return out;
}

}  // namespace jarz
