#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "embeddings.hpp"
#include "geodesics.hpp"
#include "kernel.hpp"
#include "linalg.hpp"

namespace lumpgeo {

/// Basis of the shift functions h(y,y') = f(y') − f(y) + c on the edges of g,
/// one column per f = e_y (y ≠ 0) plus the constant function.
inline Eigen::MatrixXd shift_basis(const Digraph& g) {
  const int n = g.n();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), n);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto [i, j] = g.edges()[k];
    if (j > 0) b(k, j - 1) += 1;
    if (i > 0) b(k, i - 1) -= 1;
    b(k, n - 1) = 1;
  }
  return b;
}

/// Columns are the functions restricted to the edges of g.
inline Eigen::MatrixXd vectorize_functions(const std::vector<Eigen::MatrixXd>& fs, const Digraph& g) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i) m.col(i) = g.vectorize(fs[i]);
  return m;
}

/// Rank of the functions modulo the shift subspace.
inline int rank_modulo_shifts(const std::vector<Eigen::MatrixXd>& fs, const Digraph& g) {
  Eigen::MatrixXd n = shift_basis(g);
  return numerical_rank(hcat(n, vectorize_functions(fs, g))) - numerical_rank(n);
}

inline bool is_independent_in_G(const std::vector<Eigen::MatrixXd>& fs, const Digraph& g) {
  return rank_modulo_shifts(fs, g) == static_cast<int>(fs.size());
}

/// Exponential family P_θ = 𝔰(exp(K + Σ θᵢ gᵢ)) on a fixed edge set.
class EFamily {
 public:
  EFamily() = default;

  EFamily(Digraph graph, Eigen::MatrixXd carrier, std::vector<Eigen::MatrixXd> generators)
      : graph_(std::move(graph)), k_(std::move(carrier)), g_(std::move(generators)) {
    if (!graph_.is_strongly_connected()) throw IrreducibilityError("e-family: graph not strongly connected");
    if (k_.rows() != graph_.n() || k_.cols() != graph_.n()) throw InvalidFamily("e-family: carrier has the wrong size");
    for (const auto& g : g_)
      if (g.rows() != graph_.n() || g.cols() != graph_.n()) throw InvalidFamily("e-family: generator has the wrong size");
    if (!is_independent_in_G(g_, graph_)) throw InvalidFamily("e-family: generators are dependent modulo shift functions");
    kv_ = graph_.vectorize(k_);
    gv_ = vectorize_functions(g_, graph_);
  }

  int dim() const { return static_cast<int>(g_.size()); }
  const Digraph& graph() const { return graph_; }
  const Eigen::MatrixXd& carrier() const { return k_; }
  const std::vector<Eigen::MatrixXd>& generators() const { return g_; }
  /// Generators as columns over the edge list.
  const Eigen::MatrixXd& generator_matrix() const { return gv_; }

  StochasticKernel operator()(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim()) throw InvalidInput("e-family: parameter has the wrong dimension");
    Eigen::VectorXd logs = kv_ + gv_ * theta;
    double shift;
    return stochastic_rescale(detail::exp_on_edges(graph_, logs, shift));
  }

 private:
  Digraph graph_;
  Eigen::MatrixXd k_;
  std::vector<Eigen::MatrixXd> g_;
  Eigen::VectorXd kv_;
  Eigen::MatrixXd gv_;
};

inline StochasticKernel eval_e_family(const EFamily& f, const Eigen::VectorXd& theta) { return f(theta); }

/// Mixture family with edge measures Q_ξ = C + Σ ξᵢ Fᵢ.
class MFamily {
 public:
  MFamily() = default;

  MFamily(Digraph graph, Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> directions)
      : graph_(std::move(graph)), c_(std::move(base)), f_(std::move(directions)) {
    if (c_.rows() != graph_.n() || c_.cols() != graph_.n()) throw InvalidFamily("m-family: base has the wrong size");
    if (std::abs(c_.sum() - 1.0) > kEdgeMeasureTol) throw InvalidFamily("m-family: base does not sum to 1");
    for (std::size_t i = 0; i < f_.size(); ++i) {
      if (f_[i].rows() != graph_.n() || f_[i].cols() != graph_.n()) throw InvalidFamily("m-family: direction has the wrong size");
      if (std::abs(f_[i].sum()) > kEdgeMeasureTol)
        throw InvalidFamily("m-family: direction " + std::to_string(i) + " does not sum to 0");
    }
    if (numerical_rank(vectorize_functions(f_, graph_)) != static_cast<int>(f_.size()))
      throw InvalidFamily("m-family: directions are not affinely independent");
  }

  int dim() const { return static_cast<int>(f_.size()); }
  const Digraph& graph() const { return graph_; }
  const Eigen::MatrixXd& base() const { return c_; }
  const std::vector<Eigen::MatrixXd>& directions() const { return f_; }

  StochasticKernel operator()(const Eigen::VectorXd& xi) const {
    if (xi.size() != dim()) throw InvalidInput("m-family: parameter has the wrong dimension");
    Eigen::MatrixXd q = c_;
    for (int i = 0; i < dim(); ++i) q += xi[i] * f_[i];
    for (int i = 0; i < graph_.n(); ++i)
      for (int j = 0; j < graph_.n(); ++j) {
        if (graph_.has_edge(i, j) && !(q(i, j) > 0))
          throw DomainError("m-family: edge measure not positive at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        if (!graph_.has_edge(i, j)) q(i, j) = 0;
      }
    try {
      return kernel_from_edge_measure(q);
    } catch (const InvalidEdgeMeasure& e) {
      throw InvalidFamily(std::string("m-family: ") + e.what());
    }
  }

 private:
  Digraph graph_;
  Eigen::MatrixXd c_;
  std::vector<Eigen::MatrixXd> f_;
};

inline StochasticKernel eval_m_family(const MFamily& f, const Eigen::VectorXd& xi) { return f(xi); }

/// Any smooth map from parameters to kernels.
using FamilyMap = std::function<StochasticKernel(const Eigen::VectorXd&)>;

struct DifferenceSteps {
  double first = 1e-5;   ///< relative step for first partials
  double second = 1e-4;  ///< relative step for second partials
};

namespace detail {

struct Sampled {
  Eigen::VectorXd logp, q;
};

inline Sampled sample_family(const FamilyMap& f, const Eigen::VectorXd& theta, const Digraph* support) {
  StochasticKernel p = f(theta);
  if (support && p.graph() != *support) throw DomainError("family: support changes within the difference stencil");
  EdgeMeasure em = edge_measure(p);
  return {log_on_edges(p), p.graph().vectorize(em.q)};
}

inline double step(double theta, double rel) { return rel * std::max(1.0, std::abs(theta)); }

/// Central first partials of log P and Q at θ.
inline void first_partials(const FamilyMap& f, const Eigen::VectorXd& theta, const Digraph& g, double rel,
                           std::vector<Eigen::VectorXd>& dlogp, std::vector<Eigen::VectorXd>& dq) {
  const int d = static_cast<int>(theta.size());
  dlogp.assign(d, {});
  dq.assign(d, {});
  for (int i = 0; i < d; ++i) {
    double h = step(theta[i], rel);
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    if (tp[i] == theta[i]) throw Error("finite differences: step underflow");
    Sampled a = sample_family(f, tp, &g), b = sample_family(f, tm, &g);
    dlogp[i] = (a.logp - b.logp) / (tp[i] - tm[i]);
    dq[i] = (a.q - b.q) / (tp[i] - tm[i]);
  }
}

/// Central second partials ∂ᵢ∂ⱼ of log P and Q, indexed i*d+j.
inline void second_partials(const FamilyMap& f, const Eigen::VectorXd& theta, const Digraph& g, double rel,
                            std::vector<Eigen::VectorXd>& d2logp, std::vector<Eigen::VectorXd>& d2q) {
  const int d = static_cast<int>(theta.size());
  d2logp.assign(static_cast<std::size_t>(d) * d, {});
  d2q.assign(static_cast<std::size_t>(d) * d, {});
  Sampled c = sample_family(f, theta, &g);
  for (int i = 0; i < d; ++i) {
    double hi = step(theta[i], rel);
    for (int j = i; j < d; ++j) {
      double hj = step(theta[j], rel);
      Eigen::VectorXd lp, qq;
      if (i == j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[i] += hi;
        tm[i] -= hi;
        Sampled a = sample_family(f, tp, &g), b = sample_family(f, tm, &g);
        lp = (a.logp - 2 * c.logp + b.logp) / (hi * hi);
        qq = (a.q - 2 * c.q + b.q) / (hi * hi);
      } else {
        Sampled s[4];
        int k = 0;
        for (int si : {1, -1})
          for (int sj : {1, -1}) {
            Eigen::VectorXd t = theta;
            t[i] += si * hi;
            t[j] += sj * hj;
            s[k++] = sample_family(f, t, &g);
          }
        lp = (s[0].logp - s[1].logp - s[2].logp + s[3].logp) / (4 * hi * hj);
        qq = (s[0].q - s[1].q - s[2].q + s[3].q) / (4 * hi * hj);
      }
      d2logp[i * d + j] = d2logp[j * d + i] = lp;
      d2q[i * d + j] = d2q[j * d + i] = qq;
    }
  }
}

}  // namespace detail

/// g_ij = Σ Q ∂ᵢ log P ∂ⱼ log P.
inline Eigen::MatrixXd fisher_metric(const FamilyMap& f, const Eigen::VectorXd& theta, const DifferenceSteps& h = {}) {
  StochasticKernel p = f(theta);
  Eigen::VectorXd q = p.graph().vectorize(edge_measure(p).q);
  std::vector<Eigen::VectorXd> dl, dq;
  detail::first_partials(f, theta, p.graph(), h.first, dl, dq);
  const int d = static_cast<int>(theta.size());
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) g(i, j) = g(j, i) = (q.array() * dl[i].array() * dl[j].array()).sum();
  return g;
}

/// Γ_{ij,k} stored at (i*d + j)*d + k.
struct Christoffel {
  int d = 0;
  std::vector<double> data;
  double operator()(int i, int j, int k) const { return data[(static_cast<std::size_t>(i) * d + j) * d + k]; }
  double max_abs() const {
    double m = 0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }
  double max_diff(const Christoffel& o) const {
    double m = 0;
    for (std::size_t k = 0; k < data.size(); ++k) m = std::max(m, std::abs(data[k] - o.data[k]));
    return m;
  }
};

namespace detail {
inline Christoffel christoffel(const FamilyMap& f, const Eigen::VectorXd& theta, const DifferenceSteps& h, bool e_conn) {
  StochasticKernel p = f(theta);
  std::vector<Eigen::VectorXd> dl, dq, d2l, d2q;
  first_partials(f, theta, p.graph(), h.first, dl, dq);
  second_partials(f, theta, p.graph(), h.second, d2l, d2q);
  const int d = static_cast<int>(theta.size());
  Christoffel c{d, std::vector<double>(static_cast<std::size_t>(d) * d * d)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        c.data[(static_cast<std::size_t>(i) * d + j) * d + k] =
            e_conn ? d2l[i * d + j].dot(dq[k]) : d2q[i * d + j].dot(dl[k]);
  return c;
}
}  // namespace detail

/// Γ^(e)_{ij,k} = Σ ∂ᵢ∂ⱼ log P · ∂ₖQ.
inline Christoffel christoffel_e(const FamilyMap& f, const Eigen::VectorXd& theta, const DifferenceSteps& h = {}) {
  return detail::christoffel(f, theta, h, true);
}

/// Γ^(m)_{ij,k} = Σ ∂ᵢ∂ⱼ Q · ∂ₖ log P.
inline Christoffel christoffel_m(const FamilyMap& f, const Eigen::VectorXd& theta, const DifferenceSteps& h = {}) {
  return detail::christoffel(f, theta, h, false);
}

enum class GeodesicKind { e, m };

using KernelMap = std::function<StochasticKernel(const StochasticKernel&)>;

/// sup over t of ‖E(γ(t)) − γ_{E(P₀),E(P₁)}(t)‖_∞.
inline double check_geodesic_affine(const KernelMap& embed, const StochasticKernel& p0, const StochasticKernel& p1,
                                    const std::vector<double>& ts, GeodesicKind kind) {
  auto geo = [kind](const StochasticKernel& a, const StochasticKernel& b, double t) {
    return kind == GeodesicKind::e ? e_geodesic(a, b, t) : m_geodesic(a, b, t);
  };
  StochasticKernel e0 = embed(p0), e1 = embed(p1);
  double worst = 0;
  for (double t : ts) {
    Eigen::MatrixXd diff = embed(geo(p0, p1, t)).matrix() - geo(e0, e1, t).matrix();
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  return worst;
}

struct ConvexityProbe {
  double t = 0;
  std::optional<double> m_gap_first;   ///< (1−t)D(P₀‖P) + tD(P₁‖P) − D(γm(t)‖P), t ∈ (0,1)
  std::optional<double> e_gap_second;  ///< (1−t)D(P‖P₀) + tD(P‖P₁) − D(P‖γe(t)), t ∈ (0,1)
  std::optional<double> outer_gap;     ///< D(P‖γe(t)) − (1−t)D(P‖P₀) − tD(P‖P₁), |t| > 1
  double log_rho = 0;                  ///< log PF root of P₀^(1−t) ∘ P₁^t
  double identity_residual = 0;        ///< D(P‖γe(t)) − (1−t)D(P‖P₀) − tD(P‖P₁) − log ρ_t
};

inline std::vector<ConvexityProbe> kl_convexity_probes(const StochasticKernel& p, const StochasticKernel& p0,
                                                       const StochasticKernel& p1, const std::vector<double>& ts) {
  std::vector<ConvexityProbe> out;
  const double d0 = kl_rate(p, p0), d1 = kl_rate(p, p1);
  const double r0 = kl_rate(p0, p), r1 = kl_rate(p1, p);
  for (double t : ts) {
    ConvexityProbe c;
    c.t = t;
    double de = kl_rate(p, e_geodesic(p0, p1, t));
    c.log_rho = e_geodesic_log_rho(p0, p1, t);
    c.identity_residual = de - (1 - t) * d0 - t * d1 - c.log_rho;
    if (t > 0 && t < 1) {
      c.e_gap_second = (1 - t) * d0 + t * d1 - de;
      c.m_gap_first = (1 - t) * r0 + t * r1 - kl_rate(m_geodesic(p0, p1, t), p);
    }
    if (std::abs(t) > 1) c.outer_gap = de - (1 - t) * d0 - t * d1;
    out.push_back(c);
  }
  return out;
}

/// D(γm(P₀,P₁;t)‖γm(P₀',P₁';t)) − [(1−t)D(P₀‖P₀') + tD(P₁‖P₁')]; positive means joint m-convexity fails.
inline double joint_m_convexity_gap(const StochasticKernel& p0, const StochasticKernel& p0b, const StochasticKernel& p1,
                                    const StochasticKernel& p1b, double t) {
  return kl_rate(m_geodesic(p0, p1, t), m_geodesic(p0b, p1b, t)) -
         ((1 - t) * kl_rate(p0, p0b) + t * kl_rate(p1, p1b));
}

}  // namespace lumpgeo
