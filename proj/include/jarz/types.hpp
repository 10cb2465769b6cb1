#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jarz {

enum class Family { gaussian, gaussian_mixture, bernoulli_rbm, gaussian_rbm };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// Shape of an energy family.
///
/// For the continuous families `visible` is the dimension d and `hidden` is
/// zero. `components` is used by the mixture only.
struct ModelDescriptor {
  Family family = Family::gaussian;
  std::size_t visible = 0;
  std::size_t hidden = 0;
  std::size_t components = 0;

  static ModelDescriptor gaussian(std::size_t d);
  static ModelDescriptor mixture(std::size_t d, std::size_t components);
  static ModelDescriptor bernoulli_rbm(std::size_t visible, std::size_t hidden);
  static ModelDescriptor gaussian_rbm(std::size_t visible, std::size_t hidden);

  bool is_rbm() const {
    return family == Family::bernoulli_rbm || family == Family::gaussian_rbm;
  }
  bool has_continuous_visible() const { return family != Family::bernoulli_rbm; }

  std::size_t parameter_count() const;

  // Throws InvalidArgument when a dimension required by the family is zero.
  void validate() const;

  friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

struct Segment {
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Named slices of the flat parameter vector.
///
///   gaussian:          mean[d], log_scale[d]
///   gaussian-mixture:  means[K*d], log_scales[K*d], logits[K]
///   bernoulli-rbm:     W[dv*dh] (row-major), b[dv], c[dh]
///   gaussian-rbm:      W[dv*dh] (row-major), b[dv], c[dh], log_variance[dv]
struct ParameterLayout {
  Segment weights, visible_bias, hidden_bias, log_variance;  // RBM families
  Segment mean, log_scale, logits;                           // Gaussian families
  std::size_t total = 0;
};

ParameterLayout layout_of(const ModelDescriptor& model);

/// Flat parameter set theta.
struct ParameterVector {
  std::vector<double> values;

  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> segment(Segment s) const {
    return std::span<const double>(values).subspan(s.offset, s.size);
  }
  std::span<double> segment(Segment s) {
    return std::span<double>(values).subspan(s.offset, s.size);
  }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

ParameterVector zero_parameters(const ModelDescriptor& model);

// (1 - s) * a + s * b, elementwise.
ParameterVector lerp(const ParameterVector& a, const ParameterVector& b, double s);

/// A walker position. Continuous families use `visible` only; the RBM
/// families carry the (v, h) pair with binary entries stored as 0.0 / 1.0.
struct StatePoint {
  std::vector<double> visible;
  std::vector<double> hidden;

  friend bool operator==(const StatePoint&, const StatePoint&) = default;
};

// A vector-valued function of a walker state.
using ObservableFn = std::function<std::vector<double>(const StatePoint&)>;

}  // namespace jarz
