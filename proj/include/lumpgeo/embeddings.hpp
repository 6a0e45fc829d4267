#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geodesics.hpp"
#include "kernel.hpp"
#include "lumping.hpp"

namespace lumpgeo {

/// Markov embedding Λ⋆: P ↦ P(κ(y),κ(y'))·λ(y,y').
class MarkovEmbedding {
 public:
  MarkovEmbedding() = default;

  MarkovEmbedding(Lumping kappa, Eigen::MatrixXd lambda) : kappa_(std::move(kappa)), lambda_(std::move(lambda)) {
    if (lambda_.rows() != kappa_.m() || lambda_.cols() != kappa_.m())
      throw InvalidInput("markov embedding: weight matrix size differs from lumping domain");
    if ((lambda_.array() < 0).any()) throw InvalidInput("markov embedding: negative weight");
    for (int y = 0; y < kappa_.m(); ++y)
      if (!(lambda_.row(y).maxCoeff() > 0)) throw InvalidInput("markov embedding: row " + std::to_string(y) + " has no positive weight");
    graph_ = Digraph::support(lambda_);
    if (!is_compatible(kappa_, graph_)) throw CompatibilityError("markov embedding: lumping and edge set are not compatible");
    base_ = lumped_edge_set(kappa_, graph_);
    Eigen::MatrixXd s = block_row_sums<double>(lambda_, kappa_);
    for (int y = 0; y < kappa_.m(); ++y)
      for (int x2 : base_.successors(kappa_(y)))
        if (std::abs(s(y, x2) - 1.0) > kRowSumTol)
          throw InvalidInput("markov embedding: weights of row " + std::to_string(y) + " into block " +
                             std::to_string(x2) + " sum to " + std::to_string(s(y, x2)));
  }

  /// Rescales each block row of nonnegative weights to sum to 1.
  static MarkovEmbedding normalized(const Lumping& kappa, Eigen::MatrixXd w) {
    Eigen::MatrixXd s = block_row_sums<double>(w, kappa);
    for (int y = 0; y < kappa.m(); ++y)
      for (int y2 = 0; y2 < kappa.m(); ++y2)
        if (w(y, y2) != 0) w(y, y2) /= s(y, kappa(y2));
    return MarkovEmbedding(kappa, std::move(w));
  }

  const Lumping& kappa() const { return kappa_; }
  const Eigen::MatrixXd& lambda() const { return lambda_; }
  const Digraph& graph() const { return graph_; }
  const Digraph& base_graph() const { return base_; }

 private:
  Lumping kappa_;
  Eigen::MatrixXd lambda_;
  Digraph graph_, base_;
};

inline StochasticKernel embed_markov(const MarkovEmbedding& e, const StochasticKernel& p) {
  if (p.graph() != e.base_graph()) throw DomainError("embed_markov: kernel support differs from the lumped edge set");
  return StochasticKernel::normalized(e.graph(), embed_matrix<double>(e.lambda(), e.kappa(), p.matrix()));
}

/// Λ^(P)(y,y') = P(y,y') / P(y, S_κ(y')).
inline MarkovEmbedding canonical_embedding(const StochasticKernel& p, const Lumping& kappa, double tol = kLumpTol) {
  LumpabilityViolation v = lumpability_violation(p.matrix(), kappa);
  if (v.magnitude > tol) detail::throw_not_lumpable("canonical_embedding", v);
  return MarkovEmbedding::normalized(kappa, p.matrix());
}

/// Embedding whose weights depend only on the destination state.
class MemorylessEmbedding {
 public:
  MemorylessEmbedding() = default;

  MemorylessEmbedding(Lumping kappa, Eigen::VectorXd weights) : kappa_(std::move(kappa)), w_(std::move(weights)) {
    if (w_.size() != kappa_.m()) throw InvalidInput("memoryless embedding: weight vector size differs from lumping domain");
    for (int y = 0; y < kappa_.m(); ++y)
      if (!(w_[y] > 0)) throw InvalidInput("memoryless embedding: weight " + std::to_string(y) + " is not positive");
    for (int x = 0; x < kappa_.n(); ++x) {
      double s = 0;
      for (int y : kappa_.block(x)) s += w_[y];
      if (std::abs(s - 1.0) > kRowSumTol)
        throw InvalidInput("memoryless embedding: weights of block " + std::to_string(x) + " sum to " + std::to_string(s));
    }
  }

  const Lumping& kappa() const { return kappa_; }
  const Eigen::VectorXd& weights() const { return w_; }

  /// The Markov embedding with λ(y,y') = L(y') on every edge over the base graph.
  MarkovEmbedding to_markov(const Digraph& base) const {
    if (base.n() != kappa_.n()) throw DomainError("memoryless embedding: base graph size differs from lumping range");
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(kappa_.m(), kappa_.m());
    for (int y = 0; y < kappa_.m(); ++y)
      for (int y2 = 0; y2 < kappa_.m(); ++y2)
        if (base.has_edge(kappa_(y), kappa_(y2))) lam(y, y2) = w_[y2];
    return MarkovEmbedding::normalized(kappa_, std::move(lam));
  }

 private:
  Lumping kappa_;
  Eigen::VectorXd w_;
};

inline StochasticKernel embed_memoryless(const MemorylessEmbedding& e, const StochasticKernel& p) {
  return embed_markov(e.to_markov(p.graph()), p);
}

/// π(y) = π̄(κ(y))·L(y).
inline Eigen::VectorXd memoryless_stationary(const MemorylessEmbedding& e, const StochasticKernel& p) {
  Eigen::VectorXd base = stationary(p), pi(e.kappa().m());
  for (int y = 0; y < e.kappa().m(); ++y) pi[y] = base[e.kappa()(y)] * e.weights()[y];
  return pi;
}

/// Probability vector (p₁/m, …, p_n/m).
struct RationalDistribution {
  std::vector<long long> numerators;
  long long denominator = 1;
  double error = 0;  ///< sup distance to the vector it approximates, when produced by rationalize
};

/// Smallest common denominator ≤ max_denominator whose rounding reproduces pi within tol;
/// otherwise the best approximation found. Numerators are kept ≥ 1 and sum to the denominator.
inline RationalDistribution rationalize(const Eigen::VectorXd& pi, long long max_denominator = 1000000, double tol = 1e-12) {
  const int n = static_cast<int>(pi.size());
  if (n == 0) throw InvalidInput("rationalize: empty vector");
  RationalDistribution best;
  best.error = INFINITY;
  std::vector<long long> num(n);
  for (long long m = n; m <= max_denominator; ++m) {
    long long total = 0;
    for (int i = 0; i < n; ++i) {
      num[i] = std::max<long long>(1, std::llround(pi[i] * m));
      total += num[i];
    }
    // repair the total by moving units where rounding was least faithful
    while (total != m) {
      int pick = -1;
      double score = -INFINITY;
      for (int i = 0; i < n; ++i) {
        double drift = static_cast<double>(num[i]) - pi[i] * m;
        double s = total > m ? drift : -drift;
        if (total > m && num[i] <= 1) continue;
        if (s > score) score = s, pick = i;
      }
      if (pick < 0) break;
      num[pick] += total > m ? -1 : 1;
      total += total > m ? -1 : 1;
    }
    if (total != m) continue;
    double err = 0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(static_cast<double>(num[i]) / m - pi[i]));
    if (err < best.error) best = {num, m, err};
    if (err <= tol) break;
  }
  return best;
}

struct BistochasticEmbedding {
  Lumping kappa;
  MemorylessEmbedding embedding;
  StochasticKernel kernel;
};

/// Memoryless embedding of P into m states that is doubly stochastic, given π = (p_i/m).
inline BistochasticEmbedding embed_to_bistochastic(const StochasticKernel& p, const RationalDistribution& r,
                                                   long long max_states = 4096) {
  const int n = p.n();
  if (static_cast<int>(r.numerators.size()) != n) throw InvalidInput("embed_to_bistochastic: numerator count differs from state count");
  long long sum = 0;
  for (long long v : r.numerators) {
    if (v < 1) throw InvalidInput("embed_to_bistochastic: numerators must be positive integers");
    sum += v;
  }
  if (sum != r.denominator) throw InvalidInput("embed_to_bistochastic: numerators do not sum to the denominator");
  if (r.denominator > max_states) throw InvalidInput("embed_to_bistochastic: denominator exceeds the state budget");
  Eigen::VectorXd pi = stationary(p);
  for (int i = 0; i < n; ++i)
    if (std::abs(static_cast<double>(r.numerators[i]) / r.denominator - pi[i]) > 1e-9)
      throw InvalidInput("embed_to_bistochastic: supplied rational stationary differs from the kernel's at state " +
                         std::to_string(i));
  const int m = static_cast<int>(r.denominator);
  std::vector<int> map(m);
  Eigen::VectorXd w(m);
  long long cum = 0;
  int i = 0;
  for (int j = 1; j <= m; ++j) {
    while (cum + r.numerators[i] < j) cum += r.numerators[i++];
    map[j - 1] = i;
    w[j - 1] = 1.0 / static_cast<double>(r.numerators[i]);
  }
  Lumping kappa(n, std::move(map));
  MemorylessEmbedding e(kappa, w);
  return {kappa, e, embed_memoryless(e, p)};
}

/// Φ⋆P̄ = 𝔰(P⊙ ∘ P̄(κ,κ)), computed through the PF pair of the base-space product.
class ExponentialEmbedding {
 public:
  ExponentialEmbedding() = default;

  ExponentialEmbedding(StochasticKernel origin, Lumping kappa, double tol = kLumpTol)
      : origin_(std::move(origin)), kappa_(std::move(kappa)) {
    if (origin_.n() != kappa_.m()) throw InvalidInput("exponential embedding: origin size differs from lumping domain");
    LumpabilityViolation v = lumpability_violation(origin_.matrix(), kappa_);
    if (v.magnitude > tol) detail::throw_not_lumpable("exponential embedding origin", v);
    origin_lump_ = lump(origin_, kappa_, tol);
  }

  const StochasticKernel& origin() const { return origin_; }
  const Lumping& kappa() const { return kappa_; }
  const StochasticKernel& origin_lump() const { return origin_lump_; }

 private:
  StochasticKernel origin_;
  Lumping kappa_;
  StochasticKernel origin_lump_;
};

inline StochasticKernel embed_exponential(const ExponentialEmbedding& e, const StochasticKernel& p) {
  if (p.graph() != e.origin_lump().graph()) throw DomainError("embed_exponential: kernel support differs from the lumped edge set");
  Eigen::MatrixXd h = e.origin_lump().matrix().cwiseProduct(p.matrix());
  PFPair pf = pf_pair(h);
  const Lumping& k = e.kappa();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k.m(), k.m());
  for (const auto& [y, y2] : e.origin().graph().edges())
    out(y, y2) = e.origin()(y, y2) * p(k(y), k(y2)) * pf.v[k(y2)] / (pf.rho * pf.v[k(y)]);
  return StochasticKernel::normalized(e.origin().graph(), std::move(out));
}

/// D(Φ⋆P‖Φ⋆P') − D(𝔰(P̄⊙∘P)‖𝔰(P̄⊙∘P')); zero when the origin lumps into the maxentropic kernel.
inline double exponential_distortion(const ExponentialEmbedding& e, const StochasticKernel& p, const StochasticKernel& p2) {
  StochasticKernel lp = stochastic_rescale(e.origin_lump().matrix().cwiseProduct(p.matrix()));
  StochasticKernel lp2 = stochastic_rescale(e.origin_lump().matrix().cwiseProduct(p2.matrix()));
  return kl_rate(embed_exponential(e, p), embed_exponential(e, p2)) - kl_rate(lp, lp2);
}

/// Lift of a kernel on (𝒳,𝒟) to its space of length-k paths, lumped by the last vertex.
class HudsonEmbedding {
 public:
  HudsonEmbedding() = default;

  HudsonEmbedding(Digraph base, int order, std::size_t budget = 10000) : base_(std::move(base)), order_(order) {
    if (order < 2) throw InvalidInput("hudson embedding: order must be at least 2");
    std::vector<int> path;
    enumerate(path, budget);
    std::map<std::vector<int>, int> index;
    for (std::size_t s = 0; s < paths_.size(); ++s) index.emplace(paths_[s], static_cast<int>(s));
    std::vector<int> last(paths_.size());
    std::vector<Edge> rel;
    for (std::size_t s = 0; s < paths_.size(); ++s) {
      last[s] = paths_[s].back();
      std::vector<int> next(paths_[s].begin() + 1, paths_[s].end());
      next.push_back(0);
      for (int x2 : base_.successors(paths_[s].back())) {
        next.back() = x2;
        rel.emplace_back(static_cast<int>(s), index.at(next));
      }
    }
    h_ = Lumping(base_.n(), std::move(last));
    relation_ = Digraph(static_cast<int>(paths_.size()), std::move(rel));
  }

  const Digraph& base_graph() const { return base_; }
  int order() const { return order_; }
  const std::vector<std::vector<int>>& paths() const { return paths_; }
  const Lumping& lumping() const { return h_; }
  const Digraph& relation() const { return relation_; }

  MarkovEmbedding to_markov() const { return MarkovEmbedding(h_, relation_.indicator()); }

 private:
  void enumerate(std::vector<int>& path, std::size_t budget) {
    if (static_cast<int>(path.size()) == order_) {
      if (paths_.size() >= budget)
        throw InvalidInput("hudson embedding: path space exceeds the budget of " + std::to_string(budget) + " states");
      paths_.push_back(path);
      return;
    }
    if (path.empty()) {
      for (int x = 0; x < base_.n(); ++x) {
        path.push_back(x);
        enumerate(path, budget);
        path.pop_back();
      }
      return;
    }
    for (int x2 : base_.successors(path.back())) {
      path.push_back(x2);
      enumerate(path, budget);
      path.pop_back();
    }
  }

  Digraph base_;
  int order_ = 2;
  std::vector<std::vector<int>> paths_;
  Lumping h_;
  Digraph relation_;
};

inline StochasticKernel hudson_embed(const HudsonEmbedding& h, const StochasticKernel& p) {
  return embed_markov(h.to_markov(), p);
}

struct HudsonMidpointReport {
  double p = 0;
  StochasticKernel base0, base1, lifted0, lifted1, midpoint;
  Eigen::MatrixXd closed_form;
  LumpabilityViolation violation;
  double closed_form_deviation = 0;
};

/// Two lifted 2-state kernels whose m-geodesic midpoint is not lumpable by the last coordinate.
inline HudsonMidpointReport hudson_midpoint_counterexample(double p) {
  if (!(p > 0 && p < 1)) throw InvalidInput("hudson_midpoint_counterexample: p must lie in (0,1)");
  if (p == 0.5) throw DomainError("hudson_midpoint_counterexample: p = 1/2 makes both kernels equal");
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1 - p, p, p, 1 - p;
  b << p, 1 - p, 1 - p, p;
  HudsonMidpointReport r;
  r.p = p;
  r.base0 = StochasticKernel::from_matrix(a);
  r.base1 = StochasticKernel::from_matrix(b);
  HudsonEmbedding h(Digraph::complete(2), 2);
  r.lifted0 = hudson_embed(h, r.base0);
  r.lifted1 = hudson_embed(h, r.base1);
  r.midpoint = m_geodesic(r.lifted0, r.lifted1, 0.5);
  const double s = (1 - p) * (1 - p) + p * p, d = 2 * p * (1 - p);
  r.closed_form.resize(4, 4);
  r.closed_form << s, d, 0, 0,
                   0, 0, s, d,
                   d, s, 0, 0,
                   0, 0, d, s;
  r.violation = lumpability_violation(r.midpoint.matrix(), h.lumping());
  r.closed_form_deviation = (r.midpoint.matrix() - r.closed_form).cwiseAbs().maxCoeff();
  return r;
}

/// Trajectory of Λ⋆P obtained from a trajectory of P by sampling within blocks.
inline Trajectory simulate_embedded(const MarkovEmbedding& e, const Trajectory& base, const Eigen::VectorXd& nu,
                                    std::uint64_t seed) {
  const Lumping& k = e.kappa();
  check_distribution(nu, k.m(), "simulate_embedded");
  if (base.states.empty()) throw InvalidInput("simulate_embedded: empty base trajectory");
  for (std::size_t t = 0; t < base.size(); ++t) {
    int x = base.states[t];
    if (x < 0 || x >= k.n()) throw InvalidInput("simulate_embedded: base state out of range at step " + std::to_string(t));
    if (t > 0 && !e.base_graph().has_edge(base.states[t - 1], x))
      throw InvalidInput("simulate_embedded: base transition at step " + std::to_string(t) + " is not an edge");
  }
  std::mt19937_64 rng(seed);
  Trajectory out;
  out.states.reserve(base.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k.m());
  for (int y : k.block(base.states[0])) w[y] = nu[y];
  if (!(w.sum() > 0)) throw InvalidInput("simulate_embedded: initial distribution puts no mass on the first block");
  out.states.push_back(draw(rng, w));
  for (std::size_t t = 1; t < base.size(); ++t) {
    w.setZero();
    for (int y : k.block(base.states[t])) w[y] = e.lambda()(out.states.back(), y);
    out.states.push_back(draw(rng, w));
  }
  return out;
}

/// k-th order lumping: Hudson lift of order k followed by an ordinary lumping of the path space.
inline StochasticKernel composite_lump(const StochasticKernel& p, int k, const Lumping& kappa2, double tol = kLumpTol) {
  if (k < 1) throw InvalidInput("composite_lump: order must be positive");
  if (k == 1) return lump(p, kappa2, tol);
  HudsonEmbedding h(p.graph(), k);
  if (kappa2.m() != static_cast<int>(h.paths().size()))
    throw InvalidInput("composite_lump: lumping domain differs from the path space size");
  return lump(hudson_embed(h, p), kappa2, tol);
}

/// P(y,y') = μ(y' − y mod m).
inline StochasticKernel make_cyclic_kernel(const Eigen::VectorXd& mu) {
  const int m = static_cast<int>(mu.size());
  check_distribution(mu, m, "make_cyclic_kernel");
  Eigen::MatrixXd p(m, m);
  for (int y = 0; y < m; ++y)
    for (int y2 = 0; y2 < m; ++y2) p(y, y2) = mu[((y2 - y) % m + m) % m];
  if (!is_irreducible(p)) throw IrreducibilityError("make_cyclic_kernel: support of mu does not generate the cycle");
  return StochasticKernel::normalized(std::move(p));
}

/// Path-space lumping (y₁,y₂) ↦ y₂ − y₁ mod m for the order-2 lift of a full-support cyclic kernel.
inline Lumping cyclic_difference_lumping(const HudsonEmbedding& h, int m) {
  std::vector<int> map;
  for (const auto& s : h.paths()) map.push_back(((s[1] - s[0]) % m + m) % m);
  return Lumping(m, std::move(map));
}

}  // namespace lumpgeo
