#include "jarz/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>

#include "jarz/error.hpp"
#include "jarz/numeric.hpp"

namespace jarz {

GaussianPath::GaussianPath(std::vector<double> mean_start, std::vector<double> mean_end,
                           double scale_start, double scale_end, Ramp ramp)
    : mean_start_(std::move(mean_start)),
      mean_end_(std::move(mean_end)),
      scale_start_(scale_start),
      scale_end_(scale_end),
      ramp_(ramp) {
  if (mean_start_.empty()) throw InvalidArgument("path dimension must be positive");
  if (mean_start_.size() != mean_end_.size()) {
    throw InvalidArgument("path mean endpoints differ in dimension");
  }
  for (std::size_t i = 0; i < mean_start_.size(); ++i) {
    if (!std::isfinite(mean_start_[i]) || !std::isfinite(mean_end_[i])) {
      throw InvalidArgument("path mean endpoints must be finite");
    }
  }
  // gamma(t) stays between its endpoints, so positive endpoints suffice.
  if (!(scale_start_ > 0.0) || !(scale_end_ > 0.0) || !std::isfinite(scale_start_) ||
      !std::isfinite(scale_end_)) {
    throw DomainError("path scale must be positive");
  }
}

GaussianPath GaussianPath::benchmark() { return GaussianPath({0.0}, {2.0}, 1.0, 0.5); }

GaussianPath GaussianPath::stationary(std::vector<double> mean, double scale) {
  auto end = mean;
  return GaussianPath(std::move(mean), std::move(end), scale, scale, Ramp::linear);
}

double GaussianPath::s(double t) const {
  return ramp_ == Ramp::linear ? t : t * t * (3.0 - 2.0 * t);
}

double GaussianPath::s_rate(double t) const {
  return ramp_ == Ramp::linear ? 1.0 : 6.0 * t * (1.0 - t);
}

void GaussianPath::check(double t, std::span<const double> x) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("path time " + std::to_string(t) + " outside [0, 1]");
  }
  if (x.size() != dim()) {
    throw InvalidArgument("point dimension " + std::to_string(x.size()) +
                          " does not match path dimension " + std::to_string(dim()));
  }
}

std::vector<double> GaussianPath::mean(double t) const {
  const double st = s(t);
  std::vector<double> m(dim());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = mean_start_[i] + (mean_end_[i] - mean_start_[i]) * st;
  }
  return m;
}

std::vector<double> GaussianPath::mean_rate(double t) const {
  const double r = s_rate(t);
  std::vector<double> m(dim());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mean_end_[i] - mean_start_[i]) * r;
  return m;
}

double GaussianPath::scale(double t) const {
  return scale_start_ + (scale_end_ - scale_start_) * s(t);
}

double GaussianPath::scale_rate(double t) const { return (scale_end_ - scale_start_) * s_rate(t); }

std::vector<double> GaussianPath::score(double t, std::span<const double> x) const {
  check(t, x);
  const auto m = mean(t);
  const double g = scale(t);
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -(x[i] - m[i]) / (g * g);
  return out;
}

std::vector<double> GaussianPath::drift(double t, std::span<const double> x) const {
  check(t, x);
  const auto m = mean(t);
  const auto mdot = mean_rate(t);
  const double ratio = scale_rate(t) / scale(t);
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mdot[i] + ratio * (x[i] - m[i]);
  return out;
}

double GaussianPath::potential(double t, std::span<const double> x) const {
  check(t, x);
  const auto m = mean(t);
  const double g = scale(t);
  double r2 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) r2 += (x[i] - m[i]) * (x[i] - m[i]);
  return r2 / (2.0 * g * g) +
         0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi * g * g);
}

std::vector<double> score_field(const GaussianPath& path, double t, std::span<const double> x) {
  return path.score(t, x);
}

std::vector<double> drift_field(const GaussianPath& path, double t, std::span<const double> x) {
  return path.drift(t, x);
}

double potential_field(const GaussianPath& path, double t, std::span<const double> x) {
  return path.potential(t, x);
}

double continuity_residual(const FlowFields& fields, double t, std::span<const double> x) {
  const double dt = 1e-6 * std::max(1.0, std::abs(t));
  const double drho_dt =
      (std::exp(-fields.potential(t + dt, x)) - std::exp(-fields.potential(t - dt, x))) /
      (2.0 * dt);

  double divergence = 0.0;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double dx = 1e-5 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + dx;
    const double up = fields.drift(t, probe)[i] * std::exp(-fields.potential(t, probe));
    probe[i] = x[i] - dx;
    const double down = fields.drift(t, probe)[i] * std::exp(-fields.potential(t, probe));
    probe[i] = x[i];
    divergence += (up - down) / (2.0 * dx);
  }
  return std::abs(drho_dt + divergence);
}

void validate_h_list(std::span<const double> h_list) {
  if (h_list.size() < 4) {
    throw InvalidArgument("order study needs at least 4 h values, got " +
                          std::to_string(h_list.size()));
  }
  for (std::size_t j = 0; j < h_list.size(); ++j) {
    if (!(h_list[j] > 0.0) || !std::isfinite(h_list[j])) {
      throw InvalidArgument("h values must be finite and positive");
    }
    if (j > 0 && !(h_list[j] < h_list[j - 1])) {
      throw InvalidArgument("h values must be strictly decreasing");
    }
  }
  if (h_list.front() / h_list.back() < 4.0 * (1.0 - 1e-12)) {
    throw InvalidArgument("h values must span at least two octaves");
  }
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

struct WalkerTrace {
  double sum_sq = 0.0;
  double a = 0.0;
};

}  // namespace

void fit_order(OrderStudyReport& report) {
  std::vector<double> lx, ly;
  std::size_t largest = 0;
  for (std::size_t j = 0; j < report.rows.size(); ++j) {
    if (!(report.rows[j].rms_delta_a > 0.0)) {
      throw NumericalError("order fit needs positive RMS at every h");
    }
    lx.push_back(std::log(report.rows[j].h));
    ly.push_back(std::log(report.rows[j].rms_delta_a));
    if (report.rows[j].h > report.rows[largest].h) largest = j;
  }
  LineFit fit = least_squares(lx, ly);
  const double predicted = std::exp(fit.intercept + fit.slope * lx[largest]);
  report.excluded_largest =
      std::abs(report.rows[largest].rms_delta_a / predicted - 1.0) > 0.25 && lx.size() > 2;
  if (report.excluded_largest) {
    lx.erase(lx.begin() + static_cast<std::ptrdiff_t>(largest));
    ly.erase(ly.begin() + static_cast<std::ptrdiff_t>(largest));
    fit = least_squares(lx, ly);
  }
  report.slope = fit.slope;
  report.intercept = fit.intercept;
}

OrderStudyReport order_study(const FlowFields& fields, const OrderStudyConfig& config,
                             std::span<const double> initial_mean, double initial_scale) {
  validate_h_list(config.h_list);
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
    throw InvalidArgument("epsilon must be a finite positive number");
  }
  if (config.walkers < 2) throw InvalidArgument("order study needs at least 2 walkers");
  if (initial_mean.size() != fields.dim()) {
    throw InvalidArgument("initial mean does not match the field dimension");
  }
  const std::size_t n_h = config.h_list.size();
  const std::size_t n = config.walkers;
  std::vector<std::size_t> steps(n_h);
  for (std::size_t j = 0; j < n_h; ++j) {
    steps[j] = config.steps > 0
                   ? config.steps
                   : static_cast<std::size_t>(std::floor(1.0 / config.h_list[j] + 1e-9));
    if (steps[j] == 0) throw InvalidArgument("h larger than the time horizon");
  }

  std::vector<WalkerTrace> traces(n_h * n);
  std::vector<std::exception_ptr> failure(n_h * n);
  const auto total = static_cast<long long>(n_h * n);

#pragma omp parallel for schedule(dynamic, 64)
  for (long long job = 0; job < total; ++job) {
    const auto j = static_cast<std::size_t>(job) / n;
    const auto i = static_cast<std::size_t>(job) % n;
    try {
      const double h = config.h_list[j];
      Rng rng = make_stream(config.seed, (static_cast<std::uint64_t>(j) << 32) | i);
      StatePoint x;
      x.visible.resize(initial_mean.size());
      for (std::size_t c = 0; c < x.visible.size(); ++c) {
        x.visible[c] = initial_mean[c] + initial_scale * standard_normal(rng);
      }
      WalkerTrace tr;
      for (std::size_t k = 0; k < steps[j]; ++k) {
        const double t = static_cast<double>(k) * h;
        const double t_next = static_cast<double>(k + 1) * h;
        StatePoint y = drifted_step(fields, t, x, h, config.epsilon, rng);
        const double inc = zeta_increment(fields, t, t_next, x, y, h, config.epsilon);
        if (!std::isfinite(inc)) {
          throw NumericalError("non-finite increment at h=" + std::to_string(h) + ", walker " +
                               std::to_string(i) + ", step " + std::to_string(k));
        }
        tr.sum_sq += inc * inc;
        tr.a += inc;
        x = std::move(y);
      }
      traces[job] = tr;
    } catch (...) {
      failure[job] = std::current_exception();
    }
  }
  for (const auto& f : failure) {
    if (f) std::rethrow_exception(f);
  }

  OrderStudyReport report;
  report.seed = config.seed;
  for (std::size_t j = 0; j < n_h; ++j) {
    OrderStudyRow row;
    row.h = config.h_list[j];
    row.steps = steps[j];
    row.n = n * steps[j];
    std::vector<double> a(n);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_sq += traces[j * n + i].sum_sq;
      a[i] = traces[j * n + i].a;
    }
    row.rms_delta_a = std::sqrt(sum_sq / static_cast<double>(row.n));

    double w_sum = 0.0, w_sq = 0.0;
    for (double v : a) {
      const double w = std::exp(v);
      w_sum += w;
      w_sq += w * w;
    }
    const double nn = static_cast<double>(n);
    row.mean_weight = w_sum / nn;
    row.mean_weight_se =
        std::sqrt(std::max(0.0, (w_sq / nn - row.mean_weight * row.mean_weight) / (nn - 1.0)));
    row.log_mean_weight = log_mean_exp(a);
    double a_max = a[0];
    for (double v : a) a_max = std::max(a_max, v);
    double r_sum = 0.0, r_sq = 0.0;
    for (double v : a) {
      const double r = std::exp(v - a_max);
      r_sum += r;
      r_sq += r * r;
    }
    row.log_mean_weight_se = std::sqrt(std::max(0.0, r_sq / (r_sum * r_sum) - 1.0 / nn));
    report.rows.push_back(row);
  }
  fit_order(report);
  return report;
}

OrderStudyReport order_study(const GaussianPath& path, const OrderStudyConfig& config) {
  const auto m0 = path.mean(0.0);
  return order_study(path, config, m0, path.scale(0.0));
}

}  // namespace jarz
