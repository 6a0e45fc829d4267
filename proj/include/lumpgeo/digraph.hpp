#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace lumpgeo {

using Edge = std::pair<int, int>;

/// True iff the directed graph given by adjacency lists is strongly connected.
/// Iterative Tarjan pass; stops early once a second component root is found.
inline bool strongly_connected(int n, const std::vector<std::vector<int>>& adj) {
  if (n <= 0) return false;
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int counter = 0, components = 0;
  struct Frame {
    int v;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next < adj[f.v].size()) {
        int w = adj[f.v][f.next++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      int v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        if (++components > 1) return false;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
        } while (w != v);
      }
    }
  }
  return components == 1;
}

/// Directed graph on vertices 0..n-1 with a lexicographically sorted edge list.
class Digraph {
 public:
  Digraph() = default;

  Digraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n <= 0) throw InvalidInput("digraph: vertex count must be positive");
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      auto [i, j] = edges_[k];
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw InvalidInput("digraph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                           ") out of range");
      if (k > 0 && edges_[k - 1] == edges_[k])
        throw InvalidInput("digraph: duplicate edge (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
    }
    adj_.assign(n, {});
    mask_.assign(static_cast<std::size_t>(n) * n, -1);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      adj_[edges_[k].first].push_back(edges_[k].second);
      mask_[static_cast<std::size_t>(edges_[k].first) * n + edges_[k].second] =
          static_cast<int>(k);
    }
    connected_ = strongly_connected(n_, adj_);
  }

  /// Support digraph of a matrix: edges where |a(i,j)| > 0.
  static Digraph support(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.rows() != a.cols()) throw InvalidInput("support: matrix must be square and nonempty");
    std::vector<Edge> e;
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j)
        if (a(i, j) != 0.0) e.emplace_back(i, j);
    return Digraph(static_cast<int>(a.rows()), std::move(e));
  }

  static Digraph complete(int n) {
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) e.emplace_back(i, j);
    return Digraph(n, std::move(e));
  }

  int n() const { return n_; }
  std::size_t size() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& successors(int i) const { return adj_[i]; }
  bool has_edge(int i, int j) const { return mask_[static_cast<std::size_t>(i) * n_ + j] >= 0; }
  /// Position of (i,j) in the sorted edge list, or -1.
  int edge_index(int i, int j) const { return mask_[static_cast<std::size_t>(i) * n_ + j]; }
  bool is_strongly_connected() const { return connected_; }

  bool operator==(const Digraph& o) const { return n_ == o.n_ && edges_ == o.edges_; }
  bool operator!=(const Digraph& o) const { return !(*this == o); }

  /// Entries of `a` on the edge list, in edge order.
  Eigen::VectorXd vectorize(const Eigen::MatrixXd& a) const {
    Eigen::VectorXd v(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) v[k] = a(edges_[k].first, edges_[k].second);
    return v;
  }

  Eigen::MatrixXd unvectorize(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t k = 0; k < edges_.size(); ++k) a(edges_[k].first, edges_[k].second) = v[k];
    return a;
  }

  Eigen::MatrixXd indicator() const {
    return unvectorize(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(edges_.size())));
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> mask_;
  bool connected_ = false;
};

/// Irreducibility of a square nonnegative matrix: strong connectivity of its support.
inline bool is_irreducible(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) throw InvalidInput("is_irreducible: empty matrix");
  if (m.rows() != m.cols()) throw InvalidInput("is_irreducible: matrix not square");
  if ((m.array() < 0).any()) throw InvalidInput("is_irreducible: negative entry");
  return Digraph::support(m).is_strongly_connected();
}

}  // namespace lumpgeo
