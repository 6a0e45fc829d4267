#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "embeddings.hpp"
#include "geometry.hpp"
#include "lumping.hpp"
#include "projections.hpp"
#include "random.hpp"

namespace lumpgeo {

/// Address of a lumpable kernel: which leaf (leaf_rep over base_point) and where in it (within_leaf).
struct LeafCoordinates {
  StochasticKernel base_point;
  StochasticKernel leaf_rep;
  StochasticKernel within_leaf;
};

inline LeafCoordinates foliate(const StochasticKernel& p, const StochasticKernel& p_base, const Lumping& kappa,
                               double tol = kLumpTol) {
  MarkovEmbedding lam = canonical_embedding(p, kappa, tol);
  return {p_base, embed_markov(lam, p_base), lump(p, kappa, tol)};
}

inline StochasticKernel reconstruct(const LeafCoordinates& c, const Lumping& kappa, double tol = kLumpTol) {
  return embed_markov(canonical_embedding(c.leaf_rep, kappa, tol), c.within_leaf);
}

/// The leaf through a lumpable kernel as an e-family, with the data to map base kernels in and out.
struct LeafFamily {
  EFamily family;
  Lumping kappa;
  StochasticKernel base_point;        ///< lump of the representative
  MarkovEmbedding embedding;          ///< canonical embedding of the representative
  std::vector<Edge> generator_edges;  ///< base edges carrying a free parameter
  std::vector<Edge> anchor_edges;     ///< one dropped edge per base row

  /// Λ⋆P̄ for a base kernel P̄ on the lumped graph.
  StochasticKernel member(const StochasticKernel& pbar) const { return embed_markov(embedding, pbar); }

  /// θ with family(θ) = Λ⋆P̄: solves log P̄ − log P̄₀ = Σ θᵢ ḡᵢ + shift on the base graph.
  Eigen::VectorXd theta_of(const StochasticKernel& pbar) const {
    const Digraph& d = base_point.graph();
    if (pbar.graph() != d) throw DomainError("leaf family: base kernel support differs from the lumped edge set");
    Eigen::VectorXd rhs = detail::log_on_edges(pbar) - detail::log_on_edges(base_point);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(generator_edges.size()));
    for (std::size_t k = 0; k < generator_edges.size(); ++k)
      g(d.edge_index(generator_edges[k].first, generator_edges[k].second), k) = 1;
    Eigen::MatrixXd a = hcat(g, shift_basis(d));
    Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
    return sol.head(static_cast<Eigen::Index>(generator_edges.size()));
  }
};

/// One anchor edge per base row, chosen so the anchors form a single cycle with in-trees
/// hanging off it; the remaining edge indicators are then independent modulo shifts.
inline std::vector<Edge> anchor_edges(const Digraph& d) {
  const int n = d.n();
  std::vector<int> next(n, -1);
  std::vector<std::vector<int>> pred(n);
  for (const auto& [a, b] : d.edges()) pred[b].push_back(a);
  std::deque<int> queue{0};
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int u : pred[v])
      if (!seen[u]) {
        seen[u] = 1;
        next[u] = v;
        queue.push_back(u);
      }
  }
  next[0] = d.successors(0).front();
  std::vector<Edge> out;
  for (int x = 0; x < n; ++x) out.emplace_back(x, next[x]);
  return out;
}

inline LeafFamily leaf_family(const StochasticKernel& p_rep, const Lumping& kappa, double tol = kLumpTol) {
  LeafFamily lf;
  lf.kappa = kappa;
  lf.embedding = canonical_embedding(p_rep, kappa, tol);
  lf.base_point = lump(p_rep, kappa, tol);
  const Digraph& d = lf.base_point.graph();
  const Digraph& e = p_rep.graph();
  lf.anchor_edges = anchor_edges(d);
  std::vector<char> anchored(static_cast<std::size_t>(d.n()) * d.n(), 0);
  for (const auto& [a, b] : lf.anchor_edges) anchored[static_cast<std::size_t>(a) * d.n() + b] = 1;
  const int m = kappa.m();
  Eigen::MatrixXd carrier = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [y, y2] : e.edges())
    carrier(y, y2) = std::log(lf.embedding.lambda()(y, y2)) + std::log(lf.base_point(kappa(y), kappa(y2)));
  std::vector<Eigen::MatrixXd> gens;
  for (const auto& [x, x2] : d.edges()) {
    if (anchored[static_cast<std::size_t>(x) * d.n() + x2]) continue;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [y, y2] : e.edges())
      if (kappa(y) == x && kappa(y2) == x2) g(y, y2) = 1;
    gens.push_back(std::move(g));
    lf.generator_edges.emplace_back(x, x2);
  }
  lf.family = EFamily(e, std::move(carrier), std::move(gens));
  return lf;
}

/// Samples members of two leaves and reports whether every pair stays more than `gap` apart.
inline bool leaf_disjointness_probe(const StochasticKernel& rep1, const StochasticKernel& rep2, const Lumping& kappa,
                                    int samples, std::uint64_t seed, double gap = 1e-8) {
  if (rep1.graph() == rep2.graph() && (rep1.matrix() - rep2.matrix()).cwiseAbs().maxCoeff() <= gap) return false;
  MarkovEmbedding l1 = canonical_embedding(rep1, kappa), l2 = canonical_embedding(rep2, kappa);
  if (l1.base_graph() != l2.base_graph()) return true;
  RandomSource rs(seed);
  std::vector<StochasticKernel> a, b;
  for (int s = 0; s < samples; ++s) {
    StochasticKernel pa = rs.kernel(l1.base_graph()), pb = rs.kernel(l1.base_graph());
    a.push_back(embed_markov(l1, pa));
    b.push_back(embed_markov(l2, pb));
    // the nearest candidates share their lump
    if (l1.graph() == l2.graph() &&
        (embed_markov(l1, pa).matrix() - embed_markov(l2, pa).matrix()).cwiseAbs().maxCoeff() <= gap)
      return false;
  }
  for (const auto& u : a)
    for (const auto& v : b)
      if (u.graph() == v.graph() && (u.matrix() - v.matrix()).cwiseAbs().maxCoeff() <= gap) return false;
  return true;
}

struct LeafPythagoreanReport {
  double residual = 0;           ///< D(P‖P') − D(P‖P⊙) − D(P⊙‖P')
  double worst_leaf_margin = 0;  ///< min over sampled P'' in the leaf of D(P‖P'') − D(P‖P⊙)
  double worst_base_margin = 0;  ///< min over sampled P'' over the base point of D(P''‖P') − D(P⊙‖P')
  bool ok = false;
};

/// Pythagorean identity for p ∈ L(P̄₀), p_rep ∈ L(P̄₀), p_prime in the leaf of p_rep,
/// plus sampled checks of the two minimizing properties of p_rep.
inline LeafPythagoreanReport leaf_pythagorean_check(const StochasticKernel& p, const StochasticKernel& p_rep,
                                                    const StochasticKernel& p_prime, const Lumping& kappa,
                                                    int probes = 20, std::uint64_t seed = 0, double tol = 1e-8) {
  StochasticKernel base = lump(p_rep, kappa);
  StochasticKernel lp = lump(p, kappa);
  if (lp.graph() != base.graph() || (lp.matrix() - base.matrix()).cwiseAbs().maxCoeff() > 1e-9)
    throw DomainError("leaf_pythagorean_check: p does not lump onto the representative's base point");
  MarkovEmbedding lam = canonical_embedding(p_rep, kappa);
  MarkovEmbedding lam2 = canonical_embedding(p_prime, kappa);
  if (lam.graph() != lam2.graph() || (lam.lambda() - lam2.lambda()).cwiseAbs().maxCoeff() > 1e-9)
    throw DomainError("leaf_pythagorean_check: p_prime does not lie in the representative's leaf");
  LeafPythagoreanReport r;
  const double d_rep_prime = kl_rate(p_rep, p_prime), d_p_rep = kl_rate(p, p_rep);
  r.residual = kl_rate(p, p_prime) - d_p_rep - d_rep_prime;
  RandomSource rs(seed);
  r.worst_leaf_margin = INFINITY;
  r.worst_base_margin = INFINITY;
  for (int s = 0; s < probes; ++s) {
    StochasticKernel in_leaf = embed_markov(lam, rs.kernel(base.graph()));
    r.worst_leaf_margin = std::min(r.worst_leaf_margin, kl_rate(p, in_leaf) - d_p_rep);
    StochasticKernel over_base = embed_markov(rs.markov_embedding(kappa, p_rep.graph()), base);
    r.worst_base_margin = std::min(r.worst_base_margin, kl_rate(over_base, p_prime) - d_rep_prime);
  }
  r.ok = std::abs(r.residual) <= tol && r.worst_leaf_margin >= -tol && r.worst_base_margin >= -tol;
  return r;
}

/// Normalized transition counts of a trajectory.
struct MarkovType {
  Digraph graph;
  Eigen::MatrixXd t;
  std::size_t k = 0;
  bool marginal_consistent = false;
};

inline MarkovType markov_type(const Trajectory& traj, int n) {
  if (traj.size() < 2) throw InvalidInput("markov_type: trajectory must have at least two states");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t s = 0; s + 1 < traj.size(); ++s) {
    int a = traj.states[s], b = traj.states[s + 1];
    if (a < 0 || b < 0 || a >= n || b >= n) throw InvalidInput("markov_type: state out of range at step " + std::to_string(s));
    c(a, b) += 1;
  }
  MarkovType mt;
  mt.k = traj.size();
  mt.t = c / static_cast<double>(traj.size() - 1);
  mt.graph = Digraph::support(mt.t);
  mt.marginal_consistent =
      (mt.t.rowwise().sum() - mt.t.colwise().sum().transpose()).cwiseAbs().maxCoeff() <= 1e-12;
  return mt;
}

struct MleResult {
  Eigen::VectorXd theta;
  StochasticKernel kernel;
  StochasticKernel empirical;     ///< kernel the projection was taken from
  bool adjusted = false;          ///< type marginals disagreed and were reconciled
  double adjustment_norm = 0;     ///< sup distance between the type and the edge measure actually used
  std::vector<double> log_likelihood_trace;  ///< Σ Q̂ log P_θ per step along the optimizer iterates
};

/// Empirical kernel of a type: T/π̂ when T is an edge measure, else row-normalized counts.
inline StochasticKernel empirical_kernel(const MarkovType& type, double& adjustment) {
  adjustment = 0;
  if (type.marginal_consistent) return kernel_from_edge_measure(type.t);
  Eigen::MatrixXd p = type.t;
  for (int i = 0; i < p.rows(); ++i) {
    double s = p.row(i).sum();
    if (!(s > 0)) throw IrreducibilityError("mle: state " + std::to_string(i) + " is never left in the trajectory");
    p.row(i) /= s;
  }
  StochasticKernel k = StochasticKernel::normalized(type.graph, std::move(p));
  adjustment = (edge_measure(k).q - type.t).cwiseAbs().maxCoeff();
  return k;
}

/// Maximum likelihood member of an embedded model, as the m-projection of the empirical kernel.
inline MleResult mle_embedded(const MarkovType& type, const LeafFamily& leaf, std::uint64_t seed = 0,
                              const OptimizeOptions& opt = {}) {
  MleResult r;
  r.empirical = empirical_kernel(type, r.adjustment_norm);
  r.adjusted = !type.marginal_consistent;
  MProjection mp = m_projection_numeric(r.empirical, leaf.family, Eigen::VectorXd::Zero(leaf.family.dim()), seed, 3, opt);
  r.theta = mp.theta;
  r.kernel = mp.kernel;
  // D(P̂‖P_θ) = −H(P̂) − Σ Q̂ log P_θ, so the per-step log-likelihood is −H(P̂) − D
  const double h = entropy_rate(r.empirical);
  for (double dv : mp.trace) r.log_likelihood_trace.push_back(-h - dv);
  return r;
}

}  // namespace lumpgeo
