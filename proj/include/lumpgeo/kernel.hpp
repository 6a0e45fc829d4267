#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "digraph.hpp"
#include "errors.hpp"

namespace lumpgeo {

inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kEdgeMeasureTol = 1e-10;

/// Row-stochastic irreducible kernel with an explicit support digraph.
class StochasticKernel {
 public:
  StochasticKernel() = default;

  StochasticKernel(Digraph graph, Eigen::MatrixXd rows) : graph_(std::move(graph)), p_(std::move(rows)) {
    validate();
  }

  /// Support implied by the nonzero entries.
  static StochasticKernel from_matrix(const Eigen::MatrixXd& rows) {
    return StochasticKernel(Digraph::support(rows), rows);
  }

  /// Rows divided by their sums before validation; used for computed outputs.
  static StochasticKernel normalized(Digraph graph, Eigen::MatrixXd rows) {
    for (int i = 0; i < rows.rows(); ++i) {
      double s = rows.row(i).sum();
      if (s > 0) rows.row(i) /= s;
    }
    return StochasticKernel(std::move(graph), std::move(rows));
  }

  static StochasticKernel normalized(const Eigen::MatrixXd& rows) {
    return normalized(Digraph::support(rows), rows);
  }

  int n() const { return graph_.n(); }
  const Digraph& graph() const { return graph_; }
  const Eigen::MatrixXd& matrix() const { return p_; }
  double operator()(int i, int j) const { return p_(i, j); }

 private:
  void validate() const {
    const int n = graph_.n();
    if (p_.rows() != n || p_.cols() != n)
      throw InvalidInput("kernel: matrix is " + std::to_string(p_.rows()) + "x" +
                         std::to_string(p_.cols()) + " but graph has " + std::to_string(n) +
                         " vertices");
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) {
        double v = p_(i, j);
        if (!std::isfinite(v)) throw InvalidInput("kernel: non-finite entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        bool edge = graph_.has_edge(i, j);
        if (edge && !(v > 0))
          throw InvalidInput("kernel: entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") must be positive on the edge set");
        if (!edge && v != 0)
          throw InvalidInput("kernel: entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") must be zero off the edge set");
        s += v;
      }
      if (std::abs(s - 1.0) > kRowSumTol)
        throw InvalidInput("kernel: row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
    if (!graph_.is_strongly_connected()) throw IrreducibilityError("kernel: support is not strongly connected");
  }

  Digraph graph_;
  Eigen::MatrixXd p_;
};

struct PFPair {
  double rho = 0;
  Eigen::VectorXd v;  ///< right eigenvector, max entry 1
};

struct PowerIterationOptions {
  double tol = 1e-13;
  long max_iter = 100000;
};

namespace detail {

/// Osborne balancing: d with D⁻¹AD having equal off-diagonal row and column sums.
/// The similarity keeps ρ, and 𝔰 is invariant under it.
inline Eigen::VectorXd balance(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double change = 0;
    for (int i = 0; i < n; ++i) {
      double r = 0, c = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        r += a(i, j) * d[j];
        c += a(j, i) / d[j];
      }
      if (!(r > 0) || !(c > 0)) continue;
      double next = std::sqrt(r / c);
      change = std::max(change, std::abs(std::log(next / d[i])));
      d[i] = next;
    }
    if (change < 1e-3) break;
  }
  return d / d.maxCoeff();
}

/// Dominant eigenvector of a nonnegative irreducible matrix by shifted power iteration.
/// Returns the vector with unit sup norm and the eigenvalue.
inline PFPair power_iterate(const Eigen::MatrixXd& a0, const PowerIterationOptions& opt) {
  const int n = static_cast<int>(a0.rows());
  Eigen::VectorXd dbal = balance(a0);
  Eigen::MatrixXd a = dbal.cwiseInverse().asDiagonal() * a0 * dbal.asDiagonal();
  double scale = a.rowwise().sum().maxCoeff();
  if (!(scale > 0)) throw IrreducibilityError("pf_pair: zero matrix");
  Eigen::MatrixXd b = a / scale;
  double deficit = 0;
  for (int i = 0; i < n; ++i) deficit = std::max(deficit, b.row(i).maxCoeff() - b(i, i));
  const double c = deficit + 1.0;
  Eigen::MatrixXd m = b;
  m.diagonal().array() += c;

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n), w(n);
  double diff = 1, prev = 1, best = 1;
  int stall = 0;
  long it = 0;
  for (; it < opt.max_iter; ++it) {
    w.noalias() = m * v;
    w /= w.maxCoeff();
    diff = ((w - v).array() / w.array()).abs().maxCoeff();
    v.swap(w);
    double ratio = prev > 0 ? std::min(diff / prev, 0.999999) : 0.0;
    prev = diff;
    if (diff < best) {
      best = diff;
      stall = 0;
    } else {
      ++stall;
    }
    // stop once the extrapolated error is below tol, or roundoff has taken over
    if (diff <= opt.tol * (1.0 - ratio) || diff <= 2e-16 * n) break;
    if (diff <= opt.tol && stall >= 5) break;
  }
  Eigen::VectorXd bv = b * v;
  int imax;
  v.maxCoeff(&imax);
  double rho_b = bv[imax] / v[imax];
  double residual = (bv - rho_b * v).cwiseAbs().maxCoeff();
  if (it >= opt.max_iter || residual > 1e-10)
    throw ConvergenceError("pf_pair: power iteration did not converge", residual);
  v = v.cwiseProduct(dbal);
  return {rho_b * scale, v / v.maxCoeff()};
}

}  // namespace detail

/// Right Perron-Frobenius pair of an irreducible nonnegative matrix.
inline PFPair pf_pair(const Eigen::MatrixXd& a, const PowerIterationOptions& opt = {}) {
  if (!is_irreducible(a)) throw IrreducibilityError("pf_pair: matrix is reducible");
  return detail::power_iterate(a, opt);
}

/// 𝔰(A)(y,y') = A(y,y') v(y') / (ρ v(y)).
inline StochasticKernel stochastic_rescale(const Eigen::MatrixXd& a) {
  PFPair pf = pf_pair(a);
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s(i, j) = a(i, j) * pf.v[j] / (pf.rho * pf.v[i]);
  return StochasticKernel::normalized(Digraph::support(a), std::move(s));
}

/// Stationary distribution, the left PF vector of P normalized to sum 1.
inline Eigen::VectorXd stationary(const StochasticKernel& p) {
  PFPair left = detail::power_iterate(p.matrix().transpose(), {});
  Eigen::VectorXd pi = left.v / left.v.sum();
  return pi;
}

struct EdgeMeasure {
  Digraph graph;
  Eigen::MatrixXd q;
  Eigen::VectorXd pi;
};

inline EdgeMeasure edge_measure(const StochasticKernel& p) {
  Eigen::VectorXd pi = stationary(p);
  return {p.graph(), pi.asDiagonal() * p.matrix(), pi};
}

/// P(y,y') = Q(y,y')/π(y) after checking Q is a pair law with equal marginals.
inline StochasticKernel kernel_from_edge_measure(const Eigen::MatrixXd& q) {
  if (q.rows() == 0 || q.rows() != q.cols()) throw InvalidEdgeMeasure("edge measure: matrix must be square and nonempty");
  if ((q.array() < 0).any()) throw InvalidEdgeMeasure("edge measure: negative entry");
  if (std::abs(q.sum() - 1.0) > kEdgeMeasureTol)
    throw InvalidEdgeMeasure("edge measure: total mass " + std::to_string(q.sum()));
  Eigen::VectorXd row = q.rowwise().sum(), col = q.colwise().sum().transpose();
  Eigen::Index worst;
  double gap = (row - col).cwiseAbs().maxCoeff(&worst);
  if (gap > kEdgeMeasureTol)
    throw InvalidEdgeMeasure("edge measure: row and column marginals differ by " + std::to_string(gap) +
                             " at vertex " + std::to_string(worst));
  Eigen::MatrixXd p = q;
  for (int i = 0; i < q.rows(); ++i) {
    if (!(row[i] > 0)) throw InvalidEdgeMeasure("edge measure: vertex " + std::to_string(i) + " has zero mass");
    p.row(i) /= row[i];
  }
  return StochasticKernel::normalized(Digraph::support(q), std::move(p));
}

inline StochasticKernel kernel_from_edge_measure(const EdgeMeasure& q) {
  StochasticKernel p = kernel_from_edge_measure(q.q);
  if (p.graph() != q.graph) throw InvalidEdgeMeasure("edge measure: support differs from declared graph");
  return p;
}

/// D(P‖P') = Σ π(y) P(y,y') log(P(y,y')/P'(y,y')).
/// Evaluated as Σ π [Σ P·(r−1−log r) + P'-mass off supp P], r = P'/P, which is termwise
/// nonnegative and avoids cancellation when P' is close to P.
inline double kl_rate(const StochasticKernel& p, const StochasticKernel& p2, const Eigen::VectorXd& pi) {
  if (p.n() != p2.n()) throw DomainError("kl_rate: kernels have different state counts");
  const int n = p.n();
  double total = 0;
  for (int i = 0; i < n; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j) {
      double a = p(i, j), b = p2(i, j);
      if (a > 0) {
        if (!(b > 0))
          throw AbsoluteContinuityError("kl_rate: P'(" + std::to_string(i) + "," + std::to_string(j) +
                                        ") = 0 where P > 0");
        double x = b / a - 1.0;
        row += a * (x - (std::abs(x) < 0.5 ? std::log1p(x) : std::log(b) - std::log(a)));
      } else {
        row += b;
      }
    }
    total += pi[i] * row;
  }
  return total;
}

inline double kl_rate(const StochasticKernel& p, const StochasticKernel& p2) {
  return kl_rate(p, p2, stationary(p));
}

/// H(P) = −Σ Q log P.
inline double entropy_rate(const StochasticKernel& p) {
  Eigen::VectorXd pi = stationary(p);
  double h = 0;
  for (const auto& [i, j] : p.graph().edges()) h -= pi[i] * p(i, j) * std::log(p(i, j));
  return h;
}

/// P*(y,y') = π(y')P(y',y)/π(y).
inline StochasticKernel time_reversal(const StochasticKernel& p) {
  Eigen::VectorXd pi = stationary(p);
  const int n = p.n();
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = pi[j] * p(j, i) / pi[i];
  return StochasticKernel::normalized(std::move(r));
}

inline StochasticKernel additive_reversiblization(const StochasticKernel& p) {
  return StochasticKernel::normalized(0.5 * (p.matrix() + time_reversal(p).matrix()));
}

/// P P*. Raises an irreducibility error when the product is reducible (e.g. a deterministic cycle).
inline StochasticKernel multiplicative_reversiblization(const StochasticKernel& p) {
  return StochasticKernel::normalized(p.matrix() * time_reversal(p).matrix());
}

inline double detailed_balance_gap(const StochasticKernel& p, const Eigen::VectorXd& pi) {
  Eigen::MatrixXd q = pi.asDiagonal() * p.matrix();
  return (q - q.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_reversible(const StochasticKernel& p, double tol = 1e-10) {
  return detailed_balance_gap(p, stationary(p)) <= tol;
}

/// U = 𝔰(δ_E), the maximum entropy rate kernel supported on g.
inline StochasticKernel max_entropy_kernel(const Digraph& g) {
  if (!g.is_strongly_connected()) throw IrreducibilityError("max_entropy_kernel: graph not strongly connected");
  return stochastic_rescale(g.indicator());
}

struct Trajectory {
  std::vector<int> states;
  std::size_t size() const { return states.size(); }
};

inline void check_distribution(const Eigen::VectorXd& mu, int n, const char* who) {
  if (mu.size() != n) throw InvalidInput(std::string(who) + ": distribution has wrong length");
  if ((mu.array() < 0).any() || !mu.allFinite()) throw InvalidInput(std::string(who) + ": distribution has a negative entry");
  if (std::abs(mu.sum() - 1.0) > 1e-9) throw InvalidInput(std::string(who) + ": distribution does not sum to 1");
}

inline int draw(std::mt19937_64& rng, const Eigen::VectorXd& weights) {
  std::discrete_distribution<int> d(weights.data(), weights.data() + weights.size());
  return d(rng);
}

inline Trajectory sample_trajectory(const StochasticKernel& p, const Eigen::VectorXd& mu, std::size_t k,
                                    std::uint64_t seed) {
  check_distribution(mu, p.n(), "sample_trajectory");
  if (k < 1) throw InvalidInput("sample_trajectory: length must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<int>> rows;
  rows.reserve(p.n());
  for (int i = 0; i < p.n(); ++i) {
    Eigen::VectorXd r = p.matrix().row(i).transpose();
    rows.emplace_back(r.data(), r.data() + r.size());
  }
  Trajectory t;
  t.states.reserve(k);
  t.states.push_back(draw(rng, mu));
  while (t.states.size() < k) t.states.push_back(rows[t.states.back()](rng));
  return t;
}

}  // namespace lumpgeo
