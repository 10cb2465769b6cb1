#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "jarz/types.hpp"

namespace jarz {

/// Exact log Z and exact expectations E_theta[f].
struct OracleResult {
  double log_z = 0.0;
  std::map<std::string, std::vector<double>> expectations;
};

/// Built-in observable names understood by `enumerate_oracle`:
///   "one"                constant 1
///   "grad_theta_energy"  dU/dtheta in the flat layout
///   "visible"            v
///   "hidden"             h
inline constexpr const char* kObservableOne = "one";
inline constexpr const char* kObservableGradTheta = "grad_theta_energy";
inline constexpr const char* kObservableVisible = "visible";
inline constexpr const char* kObservableHidden = "hidden";

struct NamedObservable {
  std::string name;
  ObservableFn fn;
};

// At most 2^24 evaluated states: d_v + d_h <= 24 for the Bernoulli RBM and
// d_h <= 20 for the Gaussian RBM (whose visible integral is analytic).
inline constexpr std::size_t kMaxOracleStates = std::size_t{1} << 24;

/// Exact oracle by enumeration. Bernoulli RBM: log-sum-exp over all 2^(dv+dh)
/// states. Gaussian RBM: sum over 2^dh hidden states with the Gaussian
/// integral over v done in closed form. Throws DomainError("oracle too large")
/// past the cap and for other families.
OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<std::string>& observables);

/// Custom observables; Bernoulli RBM only.
OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<NamedObservable>& observables);

// Binary state number `index` of a dv + dh machine: bit j is v_j, bit dv + k is h_k.
StatePoint binary_state(const ModelDescriptor& model, std::size_t index);

namespace serial {

// Single-threaded two-pass reference used to check the parallel oracle.
OracleResult enumerate_oracle(const ModelDescriptor& model, const ParameterVector& theta,
                              const std::vector<NamedObservable>& observables);

}  // namespace serial
}  // namespace jarz
