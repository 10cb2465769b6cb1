#pragma once

#include <span>
#include <vector>

#include "jarz/numeric.hpp"
#include "jarz/types.hpp"

// Energy families U_theta(x) with rho_theta = exp(-U_theta) / Z_theta.
//
//   gaussian          U = sum_j (x_j - mu_j)^2 / (2 s_j^2)
//   gaussian-mixture  U = -log sum_c w_c N(x; mu_c, diag s_c^2),  w = softmax(logits)
//                     (normalized, so Z = 1)
//   bernoulli-rbm     U = -b.v - c.h - v^T W h
//   gaussian-rbm      U = sum_j (v_j - b_j)^2 / (2 sigma_j^2) - c.h
//                         - sum_jk (v_j / sigma_j) W_jk h_k
namespace jarz {

// Shape and finiteness checks. All throw InvalidArgument.
void validate_parameters(const ModelDescriptor& model, const ParameterVector& theta);
void validate_state(const ModelDescriptor& model, const StatePoint& x);

double energy(const ModelDescriptor& model, const ParameterVector& theta, const StatePoint& x);

/// Gradient in the continuous coordinates (the visible block for the
/// Gaussian-Bernoulli RBM). Throws DomainError for the Bernoulli RBM.
std::vector<double> grad_x_energy(const ModelDescriptor& model, const ParameterVector& theta,
                                  const StatePoint& x);

/// dU/dtheta in the flat layout of `layout_of(model)`.
std::vector<double> grad_theta_energy(const ModelDescriptor& model,
                                      const ParameterVector& theta, const StatePoint& x);

/// True when rho_theta can be sampled exactly and has closed-form Z:
/// any Gaussian or mixture, and RBMs with W == 0.
bool is_analytic(const ModelDescriptor& model, const ParameterVector& theta);

/// Exact draw from rho_theta0. Throws DomainError outside the analytic subfamily.
StatePoint sample_reference(const ModelDescriptor& model, const ParameterVector& theta0, Rng& rng);

/// Exact log Z_theta0. Throws DomainError outside the analytic subfamily.
double log_z_reference(const ModelDescriptor& model, const ParameterVector& theta0);

/// Pre-activation of the hidden layer, z_k = c_k + sum_j u_j W_jk with
/// u = v (Bernoulli) or u_j = v_j / sigma_j (Gaussian); P(h_k = 1 | v) = sigmoid(z_k).
std::vector<double> hidden_logits(const ModelDescriptor& model, const ParameterVector& theta,
                                  std::span<const double> visible);

/// Bernoulli RBM only: z_j = b_j + (W h)_j, P(v_j = 1 | h) = sigmoid(z_j).
std::vector<double> visible_logits(const ModelDescriptor& model, const ParameterVector& theta,
                                   std::span<const double> hidden);

/// P(h_k = 1 | v) for both RBM families.
std::vector<double> conditional_hidden(const ModelDescriptor& model,
                                       const ParameterVector& theta,
                                       std::span<const double> visible);

/// Law of v given h. Bernoulli: mean = P(v_j = 1), variance = p (1 - p).
/// Gaussian: v_j ~ N(mean_j, variance_j) with mean_j = b_j + sigma_j (W h)_j.
struct VisibleConditional {
  std::vector<double> mean;
  std::vector<double> variance;
};

VisibleConditional conditional_visible(const ModelDescriptor& model,
                                       const ParameterVector& theta,
                                       std::span<const double> hidden);

// Energy and parameter gradient of a data row, i.e. of a visible-only
// observation. For RBMs this is the free energy F(v) = -log sum_h e^{-U(v,h)}
// and dF/dtheta = E[dU/dtheta | v]; for the continuous families it is U itself.
double marginal_energy(const ModelDescriptor& model, const ParameterVector& theta,
                       std::span<const double> row);
std::vector<double> marginal_grad_theta_energy(const ModelDescriptor& model,
                                               const ParameterVector& theta,
                                               std::span<const double> row);

// Every entry iid N(0, scale^2).
ParameterVector random_parameters(const ModelDescriptor& model, double scale, Rng& rng);

// A walker state whose visible block is `row` (hidden units zero).
StatePoint state_from_row(const ModelDescriptor& model, std::span<const double> row);

}  // namespace jarz
