#pragma once

// Dormand-Prince 5(4) with PI step-size control. No dense output: every
// requested time is hit exactly by shortening the final step.

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace geoflow {

class IntegrationError : public std::runtime_error {
public:
  IntegrationError(const std::string& what, double last_t)
      : std::runtime_error(what + " (last valid t = " + std::to_string(last_t) + ")"), last_t_(last_t) {}
  double last_t() const { return last_t_; }

private:
  double last_t_;
};

struct StepControl {
  double rtol = 1e-12;
  std::vector<double> atol;  // per component; empty means rtol everywhere
  double initial_step = 0.0; // 0 selects automatically
  long max_steps = 2'000'000;
  // Called after every accepted step; may rewrite atol.
  std::function<void(std::span<const double> y, std::vector<double>& atol)> after_step;
};

class Dopri5 {
public:
  using Rhs = std::function<void(double t, const double* y, double* dy)>;

  Dopri5(Rhs f, std::size_t dim, StepControl control);

  void reset(double t0, std::span<const double> y0);
  // Advances to t1 (either direction); throws IntegrationError on failure.
  void integrate_to(double t1);

  double t() const { return t_; }
  std::span<const double> y() const { return y_; }
  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

private:
  double error_norm(const std::vector<double>& err, const std::vector<double>& ynew) const;
  double initial_step(double direction);

  Rhs f_;
  std::size_t dim_;
  StepControl ctl_;
  double t_ = 0.0;
  double h_ = 0.0;
  double err_old_ = 1e-4;
  bool fsal_valid_ = false;
  long accepted_ = 0;
  long rejected_ = 0;
  std::vector<double> y_;
  std::vector<double> k_[7];
  std::vector<double> tmp_;
  std::vector<double> ynew_;
  std::vector<double> err_;
};

}  // namespace geoflow
