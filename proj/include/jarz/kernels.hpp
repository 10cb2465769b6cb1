#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "jarz/numeric.hpp"
#include "jarz/types.hpp"

// Time-indexed Markov kernels. Every log-density here is written
// log pi(from -> to): the log-probability (density) of landing on `to` after
// one move started at `from`.
namespace jarz {

/// Which scan is used to evaluate the reverse move of a Gibbs kernel.
/// `reversed` (v-then-h) is the detailed-balance partner of the forward
/// (h-then-v) sweep; `forward` re-uses the forward sweep.
enum class ScanOrder { forward, reversed };

enum class KernelKind { ula, gibbs, drifted };

std::string_view to_string(ScanOrder order);
ScanOrder parse_scan_order(std::string_view name);
std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

struct KernelConfig {
  KernelKind kind = KernelKind::ula;
  double h = 0.0;        // step size (ula, drifted)
  double epsilon = 1.0;  // noise scale (drifted)
  ScanOrder scan_order = ScanOrder::reversed;
  bool zero_noise = false;  // debug: xi forced to 0 in the continuous kernels

  void validate() const;
};

struct MoveRecord {
  StatePoint from;
  StatePoint to;
  std::size_t k = 0;
  double log_forward = 0.0;
  double log_reverse = 0.0;
};

// ---------------------------------------------------------------------------
// Unadjusted Langevin: x' = x - h grad U(x) + sqrt(2h) xi.

StatePoint ula_step(const ModelDescriptor& model, const ParameterVector& theta,
                    const StatePoint& x, double h, Rng& rng, bool zero_noise = false);

double ula_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                       const StatePoint& from, const StatePoint& to, double h);

/// alpha(x, y) = U(x) + (y - x).grad U(x) / 2 + h |grad U(x)|^2 / 4
double ula_alpha(const ModelDescriptor& model, const ParameterVector& theta,
                 const StatePoint& x, const StatePoint& y, double h);

// ---------------------------------------------------------------------------
// Drifted Langevin for a time-dependent density exp(-U(t, x)) with drift b
// and score s = -grad U:  x' = x + h [b + eps s](t, x) + sqrt(2 h eps) xi.

class FlowFields {
 public:
  virtual ~FlowFields() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> drift(double t, std::span<const double> x) const = 0;
  virtual std::vector<double> score(double t, std::span<const double> x) const = 0;
  /// Normalized potential: exp(-potential(t, .)) integrates to one.
  virtual double potential(double t, std::span<const double> x) const = 0;
};

StatePoint drifted_step(const FlowFields& fields, double t, const StatePoint& x, double h,
                        double eps, Rng& rng, bool zero_noise = false);

/// Gaussian with mean from + h [b + eps s](t, from), covariance 2 h eps I.
double drifted_log_forward(const FlowFields& fields, double t, const StatePoint& from,
                           const StatePoint& to, double h, double eps);
/// As the forward density with the sign of b flipped.
double drifted_log_backward(const FlowFields& fields, double t, const StatePoint& from,
                            const StatePoint& to, double h, double eps);

/// Weight increment of the drifted recursion, written term by term:
///   U_k(x) - U_{k+1}(y)
///   + (x - y).([b_k(x) - b_{k+1}(y)] / eps + s_k(x) + s_{k+1}(y)) / 2
///   + h/4 ((|b_k(x)|^2 - |b_{k+1}(y)|^2) / eps + eps (|s_k(x)|^2 - |s_{k+1}(y)|^2))
///   + h/2 (b_k(x).s_k(x) + b_{k+1}(y).s_{k+1}(y))
double zeta_increment(const FlowFields& fields, double t_k, double t_next, const StatePoint& x,
                      const StatePoint& y, double h, double eps);

/// The same increment composed as alpha_k(x, y) - lambda_{k+1}(y, x).
double alpha_lambda_increment(const FlowFields& fields, double t_k, double t_next,
                              const StatePoint& x, const StatePoint& y, double h, double eps);

// ---------------------------------------------------------------------------
// Gibbs sweeps. Forward sweep: h' ~ P(h | v), then v' ~ P(v | h').
// Reversed sweep: v' ~ P(v | h), then h' ~ P(h | v').

std::pair<StatePoint, MoveRecord> gibbs_step(const ModelDescriptor& model,
                                             const ParameterVector& theta, const StatePoint& x,
                                             Rng& rng, ScanOrder reverse = ScanOrder::reversed);

/// log P(h' | v) + log P(v' | h'); independent of from.hidden.
double gibbs_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                         const StatePoint& from, const StatePoint& to);

/// log P(v' | h) + log P(h' | v'); independent of from.visible.
double gibbs_reversed_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                                  const StatePoint& from, const StatePoint& to);

std::pair<StatePoint, MoveRecord> gibbs_gauss_step(const ModelDescriptor& model,
                                                   const ParameterVector& theta,
                                                   const StatePoint& x, Rng& rng,
                                                   ScanOrder reverse = ScanOrder::reversed);

double gibbs_gauss_log_density(const ModelDescriptor& model, const ParameterVector& theta,
                               const StatePoint& from, const StatePoint& to);

double gibbs_gauss_reversed_log_density(const ModelDescriptor& model,
                                        const ParameterVector& theta, const StatePoint& from,
                                        const StatePoint& to);

// ---------------------------------------------------------------------------

/// A kernel pi_theta parameterized by the model parameters. `log_reverse` is
/// the normalized kernel used to evaluate the time-reversed move in the
/// weight increment.
class TransitionKernel {
 public:
  explicit TransitionKernel(ModelDescriptor model) : model_(model) {}
  virtual ~TransitionKernel() = default;

  const ModelDescriptor& model() const { return model_; }

  virtual StatePoint sample(const ParameterVector& theta, const StatePoint& from,
                            Rng& rng) const = 0;
  virtual double log_forward(const ParameterVector& theta, const StatePoint& from,
                             const StatePoint& to) const = 0;
  virtual double log_reverse(const ParameterVector& theta, const StatePoint& from,
                             const StatePoint& to) const = 0;

 private:
  ModelDescriptor model_;
};

class UlaKernel final : public TransitionKernel {
 public:
  UlaKernel(ModelDescriptor model, double h, bool zero_noise = false);

  StatePoint sample(const ParameterVector& theta, const StatePoint& from,
                    Rng& rng) const override;
  double log_forward(const ParameterVector& theta, const StatePoint& from,
                     const StatePoint& to) const override;
  double log_reverse(const ParameterVector& theta, const StatePoint& from,
                     const StatePoint& to) const override;

  double step_size() const { return h_; }

 private:
  double h_;
  bool zero_noise_;
};

/// Forward Gibbs sweep for either RBM family.
class GibbsKernel final : public TransitionKernel {
 public:
  GibbsKernel(ModelDescriptor model, ScanOrder reverse = ScanOrder::reversed);

  StatePoint sample(const ParameterVector& theta, const StatePoint& from,
                    Rng& rng) const override;
  double log_forward(const ParameterVector& theta, const StatePoint& from,
                     const StatePoint& to) const override;
  double log_reverse(const ParameterVector& theta, const StatePoint& from,
                     const StatePoint& to) const override;

  ScanOrder reverse_order() const { return reverse_; }

 private:
  ScanOrder reverse_;
};

/// ULA for continuous families, Gibbs for RBMs. Throws InvalidArgument when
/// the configured kind does not fit the model.
std::unique_ptr<TransitionKernel> make_kernel(const ModelDescriptor& model,
                                              const KernelConfig& config);

}  // namespace jarz
