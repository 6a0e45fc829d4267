#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "digraph.hpp"
#include "errors.hpp"
#include "kernel.hpp"

namespace lumpgeo {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kLumpTol = 1e-9;

/// Surjective map κ: [m] → [n] together with its blocks S_x = κ⁻¹(x).
class Lumping {
 public:
  Lumping() = default;

  Lumping(int n, std::vector<int> map) : n_(n), map_(std::move(map)) {
    if (map_.empty()) throw InvalidInput("lumping: empty map");
    if (n <= 0) throw InvalidInput("lumping: range size must be positive");
    blocks_.assign(n, {});
    for (std::size_t y = 0; y < map_.size(); ++y) {
      if (map_[y] < 0 || map_[y] >= n)
        throw InvalidInput("lumping: map[" + std::to_string(y) + "] = " + std::to_string(map_[y]) +
                           " out of range");
      blocks_[map_[y]].push_back(static_cast<int>(y));
    }
    for (int x = 0; x < n; ++x)
      if (blocks_[x].empty()) throw InvalidInput("lumping: block " + std::to_string(x) + " is empty");
  }

  static Lumping identity(int m) {
    std::vector<int> map(m);
    for (int y = 0; y < m; ++y) map[y] = y;
    return Lumping(m, std::move(map));
  }

  int m() const { return static_cast<int>(map_.size()); }
  int n() const { return n_; }
  int operator()(int y) const { return map_[y]; }
  const std::vector<int>& map() const { return map_; }
  const std::vector<int>& block(int x) const { return blocks_[x]; }

  bool operator==(const Lumping& o) const { return n_ == o.n_ && map_ == o.map_; }

 private:
  int n_ = 0;
  std::vector<int> map_;
  std::vector<std::vector<int>> blocks_;
};

/// 𝒟 = κ₂(ℰ).
inline Digraph lumped_edge_set(const Lumping& kappa, const Digraph& e) {
  if (e.n() != kappa.m()) throw InvalidInput("lumped_edge_set: graph size differs from lumping domain");
  std::vector<char> seen(static_cast<std::size_t>(kappa.n()) * kappa.n(), 0);
  std::vector<Edge> d;
  for (const auto& [y, y2] : e.edges()) {
    std::size_t k = static_cast<std::size_t>(kappa(y)) * kappa.n() + kappa(y2);
    if (!seen[k]) {
      seen[k] = 1;
      d.emplace_back(kappa(y), kappa(y2));
    }
  }
  return Digraph(kappa.n(), std::move(d));
}

/// Every y ∈ S_x reaches S_x' whenever (x,x') ∈ 𝒟.
inline bool is_compatible(const Lumping& kappa, const Digraph& e) {
  Digraph d = lumped_edge_set(kappa, e);
  for (const auto& [x, x2] : d.edges())
    for (int y : kappa.block(x)) {
      bool hit = false;
      for (int y2 : kappa.block(x2))
        if (e.has_edge(y, y2)) {
          hit = true;
          break;
        }
      if (!hit) return false;
    }
  return true;
}

/// a(y, S_x') for all y and x'.
template <class T>
Mat<T> block_row_sums(const Mat<T>& a, const Lumping& kappa) {
  Mat<T> s(kappa.m(), kappa.n());
  for (int y = 0; y < kappa.m(); ++y)
    for (int x = 0; x < kappa.n(); ++x) {
      T acc(0);
      for (int y2 : kappa.block(x)) acc += a(y, y2);
      s(y, x) = acc;
    }
  return s;
}

/// Matrix-level pushforward using the first state of each block as representative.
template <class T>
Mat<T> lump_matrix(const Mat<T>& a, const Lumping& kappa) {
  Mat<T> s = block_row_sums<T>(a, kappa);
  Mat<T> out(kappa.n(), kappa.n());
  for (int x = 0; x < kappa.n(); ++x)
    for (int x2 = 0; x2 < kappa.n(); ++x2) out(x, x2) = s(kappa.block(x).front(), x2);
  return out;
}

/// Linear extension of a Markov embedding: λ(y,y') · a(κ(y),κ(y')).
template <class T>
Mat<T> embed_matrix(const Mat<T>& lambda, const Lumping& kappa, const Mat<T>& base) {
  Mat<T> out(kappa.m(), kappa.m());
  for (int y = 0; y < kappa.m(); ++y)
    for (int y2 = 0; y2 < kappa.m(); ++y2) out(y, y2) = lambda(y, y2) * base(kappa(y), kappa(y2));
  return out;
}

struct LumpabilityViolation {
  double magnitude = 0;
  int x = -1, x2 = -1, y1 = -1, y2 = -1;
};

/// Largest spread of a(y, S_x') over y within a block.
inline LumpabilityViolation lumpability_violation(const Eigen::MatrixXd& a, const Lumping& kappa) {
  if (a.rows() != kappa.m() || a.cols() != kappa.m())
    throw InvalidInput("lumpability: matrix size differs from lumping domain");
  Eigen::MatrixXd s = block_row_sums<double>(a, kappa);
  LumpabilityViolation worst;
  for (int x = 0; x < kappa.n(); ++x)
    for (int x2 = 0; x2 < kappa.n(); ++x2) {
      int hi = kappa.block(x).front(), lo = hi;
      for (int y : kappa.block(x)) {
        if (s(y, x2) > s(hi, x2)) hi = y;
        if (s(y, x2) < s(lo, x2)) lo = y;
      }
      double gap = s(hi, x2) - s(lo, x2);
      if (gap > worst.magnitude) worst = {gap, x, x2, hi, lo};
    }
  return worst;
}

inline double lumpability_scale(const Eigen::MatrixXd& a) {
  double s = a.cwiseAbs().rowwise().sum().maxCoeff();
  return s > 0 ? s : 1.0;
}

inline bool is_lumpable_matrix(const Eigen::MatrixXd& a, const Lumping& kappa, double tol = kLumpTol) {
  return lumpability_violation(a, kappa).magnitude <= tol * lumpability_scale(a);
}

inline bool is_lumpable(const StochasticKernel& p, const Lumping& kappa, double tol = kLumpTol) {
  return lumpability_violation(p.matrix(), kappa).magnitude <= tol;
}

namespace detail {
[[noreturn]] inline void throw_not_lumpable(const char* who, const LumpabilityViolation& v) {
  throw LumpabilityError(std::string(who) + ": not lumpable, block sums differ by " +
                             std::to_string(v.magnitude) + " for x=" + std::to_string(v.x) +
                             ", x'=" + std::to_string(v.x2) + " between y=" + std::to_string(v.y1) +
                             " and y=" + std::to_string(v.y2),
                         v.magnitude, v.x, v.x2, v.y1, v.y2);
}
}  // namespace detail

/// κ⋆A for a lumpable (possibly signed) matrix.
inline Eigen::MatrixXd lump_linear(const Eigen::MatrixXd& a, const Lumping& kappa, double tol = kLumpTol) {
  LumpabilityViolation v = lumpability_violation(a, kappa);
  if (v.magnitude > tol * lumpability_scale(a)) detail::throw_not_lumpable("lump_linear", v);
  return lump_matrix<double>(a, kappa);
}

/// κ⋆P(x,x') = P(y, S_x') for y ∈ S_x.
inline StochasticKernel lump(const StochasticKernel& p, const Lumping& kappa, double tol = kLumpTol) {
  LumpabilityViolation v = lumpability_violation(p.matrix(), kappa);
  if (v.magnitude > tol) detail::throw_not_lumpable("lump", v);
  return StochasticKernel::normalized(lumped_edge_set(kappa, p.graph()), lump_matrix<double>(p.matrix(), kappa));
}

/// π(S_x).
inline Eigen::VectorXd lump_distribution(const Eigen::VectorXd& pi, const Lumping& kappa) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kappa.n());
  for (int y = 0; y < kappa.m(); ++y) out[kappa(y)] += pi[y];
  return out;
}

/// Q(S_x, S_x').
inline Eigen::MatrixXd lump_edge_measure(const Eigen::MatrixXd& q, const Lumping& kappa) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kappa.n(), kappa.n());
  for (int y = 0; y < kappa.m(); ++y)
    for (int y2 = 0; y2 < kappa.m(); ++y2) out(kappa(y), kappa(y2)) += q(y, y2);
  return out;
}

/// Basis of the κ-lumpable matrices supported on ℰ.
struct LumpableBasis {
  Lumping kappa;
  Digraph graph;
  std::vector<Eigen::MatrixXd> c_vectors;
  std::vector<Edge> c_index;  ///< (x,x') ∈ 𝒟
  std::vector<Eigen::MatrixXd> f_vectors;
  std::vector<Edge> f_index;  ///< (y,y') ∈ R_{x,x'}
  std::size_t size() const { return c_vectors.size() + f_vectors.size(); }
};

inline LumpableBasis lumpable_basis(const Lumping& kappa, const Digraph& e) {
  if (!is_compatible(kappa, e)) throw CompatibilityError("lumpable_basis: lumping and edge set are not compatible");
  Digraph d = lumped_edge_set(kappa, e);
  LumpableBasis b{kappa, e, {}, {}, {}, {}};
  const int m = kappa.m();
  for (const auto& [x, x2] : d.edges()) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
    std::vector<int> top(m, -1);
    for (int y : kappa.block(x)) {
      for (int y2 : kappa.block(x2))
        if (e.has_edge(y, y2)) top[y] = y2;  // blocks are ascending, so the last hit is the max
      c(y, top[y]) = 1;
    }
    b.c_vectors.push_back(std::move(c));
    b.c_index.emplace_back(x, x2);
    for (int y : kappa.block(x))
      for (int y2 : kappa.block(x2))
        if (e.has_edge(y, y2) && y2 != top[y]) {
          Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, m);
          f(y, y2) = 1;
          f(y, top[y]) = -1;
          b.f_vectors.push_back(std::move(f));
          b.f_index.emplace_back(y, y2);
        }
  }
  return b;
}

/// |ℰ| − Σ_{(x,x')∈𝒟} |S_x| + |𝒟|.
inline int lumpable_space_dim(const Lumping& kappa, const Digraph& e) {
  Digraph d = lumped_edge_set(kappa, e);
  int s = 0;
  for (const auto& [x, x2] : d.edges()) s += static_cast<int>(kappa.block(x).size());
  return static_cast<int>(e.size()) - s + static_cast<int>(d.size());
}

/// Dimension of the manifold of κ-lumpable kernels on ℰ.
inline int dim_lumpable_kernels(const Lumping& kappa, const Digraph& e) {
  return lumpable_space_dim(kappa, e) - kappa.n();
}

}  // namespace lumpgeo
