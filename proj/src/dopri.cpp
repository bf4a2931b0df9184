#include "geoflow/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace geoflow {

namespace {

// Dormand & Prince (1980) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

}  // namespace

Dopri5::Dopri5(Rhs f, std::size_t dim, StepControl control)
    : f_(std::move(f)), dim_(dim), ctl_(std::move(control)), y_(dim), tmp_(dim), ynew_(dim), err_(dim) {
  for (auto& k : k_) k.resize(dim);
  if (!ctl_.atol.empty() && ctl_.atol.size() != dim) throw std::invalid_argument("atol size mismatch");
}

void Dopri5::reset(double t0, std::span<const double> y0) {
  t_ = t0;
  std::copy(y0.begin(), y0.end(), y_.begin());
  h_ = 0.0;
  err_old_ = 1e-4;
  fsal_valid_ = false;
}

double Dopri5::error_norm(const std::vector<double>& err, const std::vector<double>& ynew) const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double atol = ctl_.atol.empty() ? 0.0 : ctl_.atol[i];
    double sc = atol + ctl_.rtol * std::max(std::fabs(y_[i]), std::fabs(ynew[i]));
    if (sc == 0.0) {
      if (err[i] != 0.0) return HUGE_VAL;
      continue;
    }
    double r = err[i] / sc;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(dim_));
}

// Hairer, Norsett & Wanner, "Solving ODEs I", II.4 starting step.
double Dopri5::initial_step(double direction) {
  // Tiny absolute floors (components that start at zero) would make the guess
  // collapse; the controller tightens the step afterwards if needed.
  auto scale = [&](std::size_t i, double v) {
    double atol = ctl_.atol.empty() ? 0.0 : ctl_.atol[i];
    return std::max(atol, ctl_.rtol) + ctl_.rtol * std::fabs(v);
  };
  double d0 = 0.0;
  double d1 = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double sc = scale(i, y_[i]);
    d0 += (y_[i] / sc) * (y_[i] / sc);
    d1 += (k_[0][i] / sc) * (k_[0][i] / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(dim_));
  d1 = std::sqrt(d1 / static_cast<double>(dim_));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = y_[i] + direction * h0 * k_[0][i];
  f_(t_ + direction * h0, tmp_.data(), k_[1].data());
  double d2 = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double r = (k_[1][i] - k_[0][i]) / scale(i, y_[i]);
    d2 += r * r;
  }
  d2 = std::sqrt(d2 / static_cast<double>(dim_)) / h0;
  double m = std::max(d1, d2);
  double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min(100 * h0, h1);
}

void Dopri5::integrate_to(double t1) {
  if (t1 == t_) return;
  const double dir = t1 > t_ ? 1.0 : -1.0;
  if (!fsal_valid_) {
    f_(t_, y_.data(), k_[0].data());
    fsal_valid_ = true;
  }
  double h = std::fabs(h_);
  if (h == 0.0) h = ctl_.initial_step > 0.0 ? ctl_.initial_step : initial_step(dir);
  long steps = 0;
  bool reject = false;
  while (dir * (t1 - t_) > 0.0) {
    if (++steps > ctl_.max_steps) throw IntegrationError("step budget exhausted", t_);
    double span = std::fabs(t1 - t_);
    bool last = false;
    if (h >= span * (1.0 - 1e-14)) {
      h = span;
      last = true;
    }
    if (h < 1e-14 * std::max(1.0, std::fabs(t_))) throw IntegrationError("step size underflow", t_);
    const double hs = dir * h;
    const double t = t_;
    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (std::size_t i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (const auto& [c, k] : terms) acc += c * (*k)[i];
        out[i] = y_[i] + hs * acc;
      }
    };
    stage(tmp_, {{a21, &k_[0]}});
    f_(t + c2 * hs, tmp_.data(), k_[1].data());
    stage(tmp_, {{a31, &k_[0]}, {a32, &k_[1]}});
    f_(t + c3 * hs, tmp_.data(), k_[2].data());
    stage(tmp_, {{a41, &k_[0]}, {a42, &k_[1]}, {a43, &k_[2]}});
    f_(t + c4 * hs, tmp_.data(), k_[3].data());
    stage(tmp_, {{a51, &k_[0]}, {a52, &k_[1]}, {a53, &k_[2]}, {a54, &k_[3]}});
    f_(t + c5 * hs, tmp_.data(), k_[4].data());
    stage(tmp_, {{a61, &k_[0]}, {a62, &k_[1]}, {a63, &k_[2]}, {a64, &k_[3]}, {a65, &k_[4]}});
    f_(t + hs, tmp_.data(), k_[5].data());
    stage(ynew_, {{a71, &k_[0]}, {a73, &k_[2]}, {a74, &k_[3]}, {a75, &k_[4]}, {a76, &k_[5]}});
    const double tnew = last ? t1 : t + hs;
    f_(tnew, ynew_.data(), k_[6].data());
    bool finite = true;
    for (std::size_t i = 0; i < dim_; ++i) {
      err_[i] = hs * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] + e6 * k_[5][i] + e7 * k_[6][i]);
      if (!std::isfinite(ynew_[i]) || !std::isfinite(k_[6][i])) finite = false;
    }
    double err = finite ? error_norm(err_, ynew_) : HUGE_VAL;
    if (err <= 1.0) {
      double fac = err == 0.0 ? kFacMax
                              : std::clamp(std::pow(err, -kAlpha) * std::pow(err_old_, kBeta) * kSafety, kFacMin, kFacMax);
      if (reject) fac = std::min(fac, 1.0);
      err_old_ = std::max(err, 1e-4);
      y_.swap(ynew_);
      k_[0].swap(k_[6]);
      t_ = tnew;
      ++accepted_;
      reject = false;
      if (ctl_.after_step) ctl_.after_step(y_, ctl_.atol);
      // keep the unshortened step as the proposal for the next call
      if (!last || h_ == 0.0) h_ = h * fac;
      h *= fac;
    } else {
      if (!finite && h < 1e-12) throw IntegrationError("non-finite state", t_);
      double fac = finite ? std::max(kFacMin, kSafety * std::pow(err, -kAlpha)) : 0.1;
      h *= fac;
      ++rejected_;
      reject = true;
    }
  }
}

}  // namespace geoflow
