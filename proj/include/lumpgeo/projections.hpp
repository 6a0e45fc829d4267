#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "embeddings.hpp"
#include "geometry.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "lumping.hpp"
#include "optimize.hpp"

namespace lumpgeo {

/// Constraints Σ Q gᵢ = cᵢ on edge measures supported on a graph.
struct LinearConstraintSet {
  Digraph graph;
  std::vector<Eigen::MatrixXd> functions;
  Eigen::VectorXd targets;
  std::size_t size() const { return functions.size(); }
};

/// Independent subset of a constraint set, modulo functions whose expectation is fixed.
struct ReducedConstraints {
  LinearConstraintSet set;
  std::vector<int> kept;
  std::vector<int> dropped;
  double inconsistency = 0;  ///< largest mismatch between a dropped target and the value implied by the kept ones
  /// Dimension of the feasible set inside the kernels on the graph.
  int feasible_dim() const {
    return static_cast<int>(set.graph.size()) - set.graph.n() - static_cast<int>(set.functions.size());
  }
};

inline ReducedConstraints reduce_constraints(const LinearConstraintSet& cs, double threshold = kRankThreshold) {
  if (cs.targets.size() != static_cast<Eigen::Index>(cs.functions.size()))
    throw InvalidInput("constraints: target count differs from function count");
  Eigen::MatrixXd n = shift_basis(cs.graph);
  Eigen::MatrixXd g = vectorize_functions(cs.functions, cs.graph);
  ReducedConstraints r;
  r.kept = independent_columns(n, g, threshold);
  r.set.graph = cs.graph;
  r.set.targets.resize(static_cast<Eigen::Index>(r.kept.size()));
  for (std::size_t k = 0; k < r.kept.size(); ++k) {
    r.set.functions.push_back(cs.functions[r.kept[k]]);
    r.set.targets[k] = cs.targets[r.kept[k]];
  }
  std::vector<char> is_kept(cs.functions.size(), 0);
  for (int k : r.kept) is_kept[k] = 1;
  Eigen::MatrixXd basis = hcat(n, vectorize_functions(r.set.functions, cs.graph));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  for (std::size_t i = 0; i < cs.functions.size(); ++i) {
    if (is_kept[i]) continue;
    r.dropped.push_back(static_cast<int>(i));
    // a shift function f(y')−f(y)+c has expectation c under every edge measure
    Eigen::VectorXd coef = qr.solve(g.col(static_cast<Eigen::Index>(i)));
    double implied = coef[n.cols() - 1];
    for (std::size_t k = 0; k < r.kept.size(); ++k) implied += coef[n.cols() + k] * r.set.targets[k];
    r.inconsistency = std::max(r.inconsistency, std::abs(implied - cs.targets[i]));
  }
  return r;
}

/// max |Σ Q gᵢ − cᵢ|.
inline double constraint_residual(const StochasticKernel& p, const LinearConstraintSet& cs) {
  Eigen::MatrixXd q = edge_measure(p).q;
  double worst = 0;
  for (std::size_t i = 0; i < cs.size(); ++i)
    worst = std::max(worst, std::abs(q.cwiseProduct(cs.functions[i]).sum() - cs.targets[i]));
  return worst;
}

struct DualState {
  Eigen::VectorXd lambda;
  double psi = 0;            ///< log PF root of exp(log P − Σ λᵢgᵢ)
  Eigen::VectorXd gradient;  ///< gradient of the dual objective −λ·c − ψ(λ)
  StochasticKernel tilted;   ///< 𝔰 of the tilted matrix
  double dual_value = 0;     ///< −λ·c − ψ(λ); equals D(P_e‖P) at the optimum
  int iterations = 0;
  double grad_norm() const { return gradient.size() ? gradient.cwiseAbs().maxCoeff() : 0.0; }
};

/// ψ(λ), the tilted kernel, and its edge measure on the graph's edge order.
struct Tilt {
  double psi;
  StochasticKernel kernel;
  Eigen::VectorXd q;
};

inline Tilt tilt(const StochasticKernel& p, const Eigen::MatrixXd& gv, const Eigen::VectorXd& lambda) {
  Eigen::VectorXd logs = detail::log_on_edges(p) - gv * lambda;
  double shift;
  Eigen::MatrixXd a = detail::exp_on_edges(p.graph(), logs, shift);
  PFPair pf = pf_pair(a);
  Eigen::MatrixXd s(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s(i, j) = a(i, j) * pf.v[j] / (pf.rho * pf.v[i]);
  StochasticKernel k = StochasticKernel::normalized(p.graph(), std::move(s));
  Eigen::VectorXd q = p.graph().vectorize(edge_measure(k).q);
  return {shift + std::log(pf.rho), std::move(k), std::move(q)};
}

/// ψ(λ) = log ρ(exp(log P − Σ λᵢgᵢ)).
inline double dual_psi(const StochasticKernel& p, const LinearConstraintSet& cs, const Eigen::VectorXd& lambda) {
  return tilt(p, vectorize_functions(cs.functions, p.graph()), lambda).psi;
}

/// ∂ψ/∂λᵢ = −Σ Q_λ gᵢ.
inline Eigen::VectorXd dual_psi_gradient(const StochasticKernel& p, const LinearConstraintSet& cs, const Eigen::VectorXd& lambda) {
  Eigen::MatrixXd gv = vectorize_functions(cs.functions, p.graph());
  return -(gv.transpose() * tilt(p, gv, lambda).q);
}

struct EProjection {
  StochasticKernel kernel;
  DualState dual;
  ReducedConstraints reduction;
};

/// argmin over {P' : Σ Q' gᵢ = cᵢ} of D(P'‖P), through the dual
/// max_λ −λ·c − ψ(λ) whose stationarity is exactly Σ Q_λ gᵢ = cᵢ.
inline EProjection e_projection(const StochasticKernel& p, const LinearConstraintSet& cs, const OptimizeOptions& opt = {}) {
  if (cs.graph != p.graph()) throw DomainError("e_projection: constraint graph differs from the kernel support");
  EProjection out;
  out.reduction = reduce_constraints(cs);
  if (out.reduction.inconsistency > 1e-8)
    throw InfeasibleConstraints("e_projection: redundant constraints have inconsistent targets (mismatch " +
                            std::to_string(out.reduction.inconsistency) + "), the set is infeasible");
  const LinearConstraintSet& red = out.reduction.set;
  const int d = static_cast<int>(red.size());
  Eigen::MatrixXd gv = vectorize_functions(red.functions, p.graph());
  const Eigen::VectorXd& c = red.targets;
  Objective phi = [&](const Eigen::VectorXd& lam, Eigen::VectorXd& grad) {
    Tilt t = tilt(p, gv, lam);
    grad = c - gv.transpose() * t.q;
    return lam.dot(c) + t.psi;
  };
  // weak duality: −φ(λ) ≤ D(P'‖P) ≤ max_e −log P(e) for every feasible P'
  OptimizeOptions bounded = opt;
  bounded.floor = detail::log_on_edges(p).minCoeff() - 1e-6;
  OptimizeResult r = minimize(phi, Eigen::VectorXd::Zero(d), bounded);
  if (r.below_floor)
    throw InfeasibleConstraints("e_projection: dual objective exceeds every attainable divergence (" +
                            std::to_string(-r.value) + "), the constraint set is infeasible");
  if (!r.converged) {
    if (r.iterations >= opt.max_iter)
      throw ConvergenceError("e_projection: dual ascent did not converge, gradient norm " + std::to_string(r.grad_norm()),
                             r.grad_norm());
    throw OptimizationError("e_projection: line search failed with gradient norm " + std::to_string(r.grad_norm()) +
                            "; the constraint set may be infeasible or unbounded");
  }
  Tilt t = tilt(p, gv, r.x);
  out.kernel = t.kernel;
  out.dual = {r.x, t.psi, gv.transpose() * t.q - c, t.kernel, -r.value, r.iterations};
  return out;
}

/// Linear functionals of Q that cut out the kernels on `target` lumping onto p_base:
/// Q(y, S_x') − P̄₀(κ(y), x')·Q(y, 𝒴) = 0.
inline LinearConstraintSet leaf_constraints(const StochasticKernel& p_base, const Lumping& kappa, const Digraph& target) {
  if (!is_compatible(kappa, target)) throw CompatibilityError("leaf_constraints: lumping and graph are not compatible");
  Digraph d = lumped_edge_set(kappa, target);
  if (p_base.graph() != d) throw DomainError("leaf_constraints: base kernel support differs from the lumped edge set");
  LinearConstraintSet cs{target, {}, {}};
  std::vector<double> targets;
  const int m = kappa.m();
  for (int y = 0; y < m; ++y)
    for (int x2 : d.successors(kappa(y))) {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
      for (int y2 : target.successors(y)) g(y, y2) = (kappa(y2) == x2 ? 1.0 : 0.0) - p_base(kappa(y), x2);
      cs.functions.push_back(std::move(g));
      targets.push_back(0.0);
    }
  cs.targets = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  return cs;
}

/// Maximum entropy rate kernel on `target` among those lumping onto p_base.
inline EProjection max_entropy_lift(const StochasticKernel& p_base, const Lumping& kappa, const Digraph& target,
                                    const OptimizeOptions& opt = {}) {
  return e_projection(max_entropy_kernel(target), leaf_constraints(p_base, kappa, target), opt);
}

/// Λ⋆κ⋆P: the closest point to P in the image of the embedding.
inline StochasticKernel m_projection_closed(const StochasticKernel& p, const MarkovEmbedding& e, double tol = kLumpTol) {
  if (p.graph() != e.graph()) throw DomainError("m_projection_closed: kernel support differs from the embedding's edge set");
  return embed_markov(e, lump(p, e.kappa(), tol));
}

/// D(P‖Λ⋆P̃) − D(P‖Λ⋆κ⋆P) − D(κ⋆P‖P̃).
inline double closed_projection_residual(const StochasticKernel& p, const MarkovEmbedding& e, const StochasticKernel& ptilde_base) {
  StochasticKernel lp = lump(p, e.kappa());
  return kl_rate(p, embed_markov(e, ptilde_base)) - kl_rate(p, embed_markov(e, lp)) - kl_rate(lp, ptilde_base);
}

/// Projection onto reversible kernels: (P + P*)/2.
inline StochasticKernel m_projection_reversible(const StochasticKernel& p) { return additive_reversiblization(p); }

struct MProjection {
  Eigen::VectorXd theta;
  StochasticKernel kernel;
  double divergence = 0;
  double grad_norm = 0;
  int restarts = 0;
  std::vector<double> trace;  ///< divergence along the accepted iterates of the winning start
};

/// Local minimizer of θ ↦ D(P‖P_θ) over an e-family. ∂ₖD = Σ (Q_θ − Q) gₖ, which equals
/// Σ (Q_θ − Q) ∂ₖ log P_θ because Q_θ − Q annihilates shift functions.
inline MProjection m_projection_numeric(const StochasticKernel& p, const EFamily& fam, const Eigen::VectorXd& theta0,
                                        std::uint64_t seed = 0, int restarts = 3, const OptimizeOptions& opt = {},
                                        double stationarity = 1e-7) {
  if (p.n() != fam.graph().n()) throw DomainError("m_projection_numeric: state counts differ");
  for (const auto& [i, j] : p.graph().edges())
    if (!fam.graph().has_edge(i, j)) throw AbsoluteContinuityError("m_projection_numeric: kernel support exceeds the family's graph");
  const Eigen::VectorXd pi = stationary(p);
  const Eigen::VectorXd q = fam.graph().vectorize(pi.asDiagonal() * p.matrix());
  const Eigen::MatrixXd& gv = fam.generator_matrix();
  Objective obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd& grad) {
    StochasticKernel k = fam(th);
    Eigen::VectorXd qt = fam.graph().vectorize(edge_measure(k).q);
    grad = gv.transpose() * (qt - q);
    return kl_rate(p, k, pi);
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, 1);
  MProjection best;
  best.divergence = INFINITY;
  for (int run = 0; run <= restarts; ++run) {
    Eigen::VectorXd start = theta0;
    if (run > 0)
      for (int k = 0; k < start.size(); ++k) start[k] += nd(rng);
    OptimizeResult r = minimize(obj, start, opt);
    if (r.value < best.divergence) {
      best.theta = r.x;
      best.divergence = r.value;
      best.grad_norm = r.grad_norm();
      best.trace = r.trace;
    }
  }
  best.restarts = restarts;
  if (best.grad_norm > stationarity)
    throw ConvergenceError("m_projection_numeric: gradient norm " + std::to_string(best.grad_norm) + " above tolerance",
                           best.grad_norm);
  best.kernel = fam(best.theta);
  return best;
}

enum class ConvexKind { m_convex, e_convex };

/// m-convex: D(P̄‖P) − D(P̄‖P₀) − D(P₀‖P); e-convex: D(P‖P̄) − D(P‖P₀) − D(P₀‖P̄).
inline double pythagorean_residual(const StochasticKernel& p, const StochasticKernel& proj, const StochasticKernel& pbar,
                                   ConvexKind mode) {
  if (mode == ConvexKind::m_convex) return kl_rate(pbar, p) - kl_rate(pbar, proj) - kl_rate(proj, p);
  return kl_rate(p, pbar) - kl_rate(p, proj) - kl_rate(proj, pbar);
}

struct FourPointResult {
  bool holds = true;
  double worst_margin = INFINITY;  ///< min over P̄ of D(P'‖P̄) + D(P'‖P) − D(P'‖P₀)
};

inline FourPointResult four_point_check(const StochasticKernel& p, const StochasticKernel& p2,
                                        const std::vector<StochasticKernel>& members, const StochasticKernel& p0,
                                        double tol = 1e-12) {
  FourPointResult r;
  const double base = kl_rate(p2, p) - kl_rate(p2, p0);
  for (const auto& m : members) r.worst_margin = std::min(r.worst_margin, kl_rate(p2, m) + base);
  r.holds = r.worst_margin >= -tol;
  return r;
}

}  // namespace lumpgeo
