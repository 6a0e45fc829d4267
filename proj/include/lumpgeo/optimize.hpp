#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace lumpgeo {

struct OptimizeOptions {
  double gtol = 1e-9;     ///< stop when the gradient sup-norm falls below this
  int max_iter = 5000;
  int bfgs_after = 10;    ///< plain gradient steps before curvature updates start
  double armijo = 1e-4;
  double shrink = 0.5;
  /// stop as soon as the objective drops below this value
  double floor = -std::numeric_limits<double>::infinity();
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  bool below_floor = false;
  std::vector<double> trace;  ///< objective value after each accepted step, starting at x0
  double grad_norm() const { return gradient.size() ? gradient.cwiseAbs().maxCoeff() : 0.0; }
};

/// Objective returning f(x) and writing ∇f(x). May throw to signal x outside the domain.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Minimizes a smooth convex function: steepest descent with Armijo backtracking,
/// then BFGS inverse-Hessian updates.
inline OptimizeResult minimize(const Objective& f, Eigen::VectorXd x0, const OptimizeOptions& opt = {}) {
  OptimizeResult r;
  r.x = std::move(x0);
  const int d = static_cast<int>(r.x.size());
  r.value = f(r.x, r.gradient);
  r.trace.push_back(r.value);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(d, d);
  bool have_curvature = false;
  Eigen::VectorXd g_new(d), x_new(d), dir(d);
  for (; r.iterations < opt.max_iter; ++r.iterations) {
    if (r.grad_norm() <= opt.gtol) {
      r.converged = true;
      return r;
    }
    bool use_bfgs = r.iterations >= opt.bfgs_after && have_curvature;
    dir = use_bfgs ? Eigen::VectorXd(-hinv * r.gradient) : Eigen::VectorXd(-r.gradient);
    double slope = r.gradient.dot(dir);
    if (!(slope < 0)) {
      dir = -r.gradient;
      slope = r.gradient.dot(dir);
      hinv.setIdentity();
      have_curvature = false;
    }
    double step = 1.0, f_new = 0;
    bool accepted = false;
    const double gnorm = r.gradient.norm();
    for (int ls = 0; ls < 80; ++ls) {
      x_new = r.x + step * dir;
      bool ok = true;
      try {
        f_new = f(x_new, g_new);
      } catch (const Error&) {
        ok = false;
      }
      if (ok && std::isfinite(f_new)) {
        if (f_new <= r.value + opt.armijo * step * slope) {
          accepted = true;
          break;
        }
        // near the optimum differences drown in roundoff; accept steps that shrink the gradient
        if (f_new <= r.value + 1e-13 * std::max(1.0, std::abs(r.value)) && g_new.norm() < gnorm) {
          accepted = true;
          break;
        }
      }
      step *= opt.shrink;
    }
    if (!accepted) break;
    Eigen::VectorXd s = x_new - r.x, y = g_new - r.gradient;
    double sy = s.dot(y);
    if (sy > 1e-300 && std::isfinite(sy)) {
      if (!have_curvature) hinv = Eigen::MatrixXd::Identity(d, d) * (sy / y.dot(y));
      double rho = 1.0 / sy;
      Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
      have_curvature = true;
    }
    r.x = x_new;
    r.value = f_new;
    r.gradient = g_new;
    r.trace.push_back(r.value);
    if (r.value < opt.floor) {
      r.below_floor = true;
      break;
    }
  }
  r.converged = r.grad_norm() <= opt.gtol;
  return r;
}

}  // namespace lumpgeo
