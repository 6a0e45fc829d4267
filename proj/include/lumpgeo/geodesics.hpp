#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "kernel.hpp"

namespace lumpgeo {

namespace detail {

/// exp of a function given on the edges of g, shifted so its largest entry is 1.
/// Returns the shift so that callers can recover the unshifted PF root.
inline Eigen::MatrixXd exp_on_edges(const Digraph& g, const Eigen::VectorXd& logs, double& shift) {
  shift = logs.maxCoeff();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n(), g.n());
  for (std::size_t k = 0; k < g.size(); ++k) a(g.edges()[k].first, g.edges()[k].second) = std::exp(logs[k] - shift);
  return a;
}

inline Eigen::VectorXd log_on_edges(const StochasticKernel& p) {
  return p.graph().vectorize(p.matrix()).array().log().matrix();
}

inline void require_same_support(const StochasticKernel& a, const StochasticKernel& b, const char* who) {
  if (a.graph() != b.graph()) throw DomainError(std::string(who) + ": kernels have different supports");
}

}  // namespace detail

/// 𝔰(P₀^(1−t) ∘ P₁^t), entrywise powers; defined for every real t.
inline StochasticKernel e_geodesic(const StochasticKernel& p0, const StochasticKernel& p1, double t) {
  detail::require_same_support(p0, p1, "e_geodesic");
  Eigen::VectorXd logs = (1 - t) * detail::log_on_edges(p0) + t * detail::log_on_edges(p1);
  double shift;
  return stochastic_rescale(detail::exp_on_edges(p0.graph(), logs, shift));
}

/// log of the PF root of P₀^(1−t) ∘ P₁^t.
inline double e_geodesic_log_rho(const StochasticKernel& p0, const StochasticKernel& p1, double t) {
  detail::require_same_support(p0, p1, "e_geodesic_log_rho");
  Eigen::VectorXd logs = (1 - t) * detail::log_on_edges(p0) + t * detail::log_on_edges(p1);
  double shift;
  Eigen::MatrixXd a = detail::exp_on_edges(p0.graph(), logs, shift);
  return shift + std::log(pf_pair(a).rho);
}

/// Kernel of the edge measure (1−t)Q₀ + tQ₁. Parameters outside [0,1] are accepted while positive.
inline StochasticKernel m_geodesic(const StochasticKernel& p0, const StochasticKernel& p1, double t) {
  detail::require_same_support(p0, p1, "m_geodesic");
  Eigen::MatrixXd q = (1 - t) * edge_measure(p0).q + t * edge_measure(p1).q;
  for (const auto& [i, j] : p0.graph().edges())
    if (!(q(i, j) > 0))
      throw DomainError("m_geodesic: edge measure not positive at (" + std::to_string(i) + "," +
                        std::to_string(j) + ") for t=" + std::to_string(t));
  for (int i = 0; i < q.rows(); ++i)
    for (int j = 0; j < q.cols(); ++j)
      if (!p0.graph().has_edge(i, j)) q(i, j) = 0;
  q /= q.sum();
  return kernel_from_edge_measure(q);
}

}  // namespace lumpgeo
