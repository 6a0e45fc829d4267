#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "embeddings.hpp"
#include "kernel.hpp"
#include "lumping.hpp"

namespace lumpgeo {

/// Random instances for property checks. Rows are Dirichlet(alpha) on the allowed support.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& engine() { return rng_; }

  double uniform(double lo = 0, double hi = 1) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0, 1)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// Dirichlet weights, floored away from zero so logs stay tame.
  Eigen::VectorXd dirichlet(int k, double alpha = 1.0) {
    std::gamma_distribution<double> g(alpha, 1.0);
    Eigen::VectorXd w(k);
    for (int i = 0; i < k; ++i) w[i] = std::max(g(rng_), 1e-3);
    return w / w.sum();
  }

  Eigen::VectorXd distribution(int n, double alpha = 1.0) { return dirichlet(n, alpha); }

  StochasticKernel kernel(const Digraph& g, double alpha = 1.0) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g.n(), g.n());
    for (int i = 0; i < g.n(); ++i) {
      const auto& s = g.successors(i);
      Eigen::VectorXd w = dirichlet(static_cast<int>(s.size()), alpha);
      for (std::size_t k = 0; k < s.size(); ++k) p(i, s[k]) = w[k];
    }
    return StochasticKernel::normalized(g, std::move(p));
  }

  StochasticKernel kernel(int n, double alpha = 1.0) { return kernel(Digraph::complete(n), alpha); }

  /// Random reversible kernel on the complete graph: symmetric positive weights, row-normalized.
  StochasticKernel reversible_kernel(int n) {
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) w(i, j) = w(j, i) = uniform(0.05, 1.0);
    return StochasticKernel::normalized(w);
  }

  /// Surjective lumping of m states onto n blocks, blocks in random order.
  Lumping lumping(int m, int n) {
    std::vector<int> map(m);
    for (int y = 0; y < m; ++y) map[y] = y < n ? y : integer(0, n - 1);
    std::shuffle(map.begin(), map.end(), rng_);
    return Lumping(n, std::move(map));
  }

  /// Random strongly connected graph on n vertices that contains a Hamiltonian cycle.
  Digraph connected_graph(int n, double density = 0.5) {
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j == (i + 1) % n || uniform() < density) e.emplace_back(i, j);
    return Digraph(n, std::move(e));
  }

  /// Markov embedding over a full-support lumped graph with Dirichlet block rows.
  MarkovEmbedding markov_embedding(const Lumping& kappa, const Digraph& e, double alpha = 1.0) {
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(kappa.m(), kappa.m());
    for (int y = 0; y < kappa.m(); ++y)
      for (int x2 = 0; x2 < kappa.n(); ++x2) {
        std::vector<int> dest;
        for (int y2 : kappa.block(x2))
          if (e.has_edge(y, y2)) dest.push_back(y2);
        if (dest.empty()) continue;
        Eigen::VectorXd w = dirichlet(static_cast<int>(dest.size()), alpha);
        for (std::size_t k = 0; k < dest.size(); ++k) lam(y, dest[k]) = w[k];
      }
    return MarkovEmbedding::normalized(kappa, std::move(lam));
  }

  MarkovEmbedding markov_embedding(const Lumping& kappa) { return markov_embedding(kappa, Digraph::complete(kappa.m())); }

  MemorylessEmbedding memoryless_embedding(const Lumping& kappa) {
    Eigen::VectorXd w(kappa.m());
    for (int x = 0; x < kappa.n(); ++x) {
      const auto& b = kappa.block(x);
      Eigen::VectorXd d = dirichlet(static_cast<int>(b.size()));
      for (std::size_t k = 0; k < b.size(); ++k) w[b[k]] = d[k];
    }
    return MemorylessEmbedding(kappa, w);
  }

  /// Markov embedding on complete graphs that maps reversible kernels to reversible kernels.
  /// λ(y,y') = M(y,y')/L(y) with M symmetric and every block of M a coupling of (L|S_x, L|S_x').
  MarkovEmbedding reversible_markov_embedding(const Lumping& kappa) {
    const int m = kappa.m();
    Eigen::VectorXd l = memoryless_embedding(kappa).weights();
    Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(m, m);
    for (int x = 0; x < kappa.n(); ++x)
      for (int x2 = x; x2 < kappa.n(); ++x2) {
        const auto& bx = kappa.block(x);
        const auto& bx2 = kappa.block(x2);
        const int r = static_cast<int>(bx.size()), c = static_cast<int>(bx2.size());
        Eigen::MatrixXd a(r, c);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) a(i, j) = uniform(0.1, 1.0);
        Eigen::VectorXd lr(r), lc(c);
        for (int i = 0; i < r; ++i) lr[i] = l[bx[i]];
        for (int j = 0; j < c; ++j) lc[j] = l[bx2[j]];
        if (x == x2) {
          a = 0.5 * (a + a.transpose()).eval();
          Eigen::VectorXd d = Eigen::VectorXd::Ones(r);
          for (int it = 0; it < 5000; ++it) {
            Eigen::VectorXd s = d.asDiagonal() * a * d;
            if ((s - lr).cwiseAbs().maxCoeff() < 1e-15) break;
            d = (d.array() * (lr.array() / s.array()).sqrt()).matrix();
          }
          a = d.asDiagonal() * a * d.asDiagonal();
          a = 0.5 * (a + a.transpose()).eval();
        } else {
          for (int it = 0; it < 5000; ++it) {
            a = (lr.array() / a.rowwise().sum().array()).matrix().asDiagonal() * a;
            Eigen::VectorXd cs = a.colwise().sum().transpose();
            a = a * (lc.array() / cs.array()).matrix().asDiagonal();
            if ((Eigen::VectorXd(a.rowwise().sum()) - lr).cwiseAbs().maxCoeff() < 1e-15) break;
          }
        }
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) mm(bx[i], bx2[j]) = mm(bx2[j], bx[i]) = a(i, j);
      }
    Eigen::MatrixXd lam = l.cwiseInverse().asDiagonal() * mm;
    return MarkovEmbedding::normalized(kappa, std::move(lam));
  }

  /// κ-lumpable kernel: Dirichlet base kernel on the lumped graph composed with a Dirichlet embedding.
  StochasticKernel lumpable_kernel(const Lumping& kappa, const Digraph& e) {
    MarkovEmbedding emb = markov_embedding(kappa, e);
    return embed_markov(emb, kernel(emb.base_graph()));
  }

  StochasticKernel lumpable_kernel(const Lumping& kappa) { return lumpable_kernel(kappa, Digraph::complete(kappa.m())); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace lumpgeo
