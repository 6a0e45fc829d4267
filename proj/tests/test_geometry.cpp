#include <gtest/gtest.h>

#include <cmath>

#include "lumpgeo/lumpgeo.hpp"

using namespace lumpgeo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double sup(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

MatrixXd two(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

MatrixXd random_function(RandomSource& rs, const Digraph& g) {
  MatrixXd f = MatrixXd::Zero(g.n(), g.n());
  for (const auto& [i, j] : g.edges()) f(i, j) = rs.normal();
  return f;
}

EFamily random_e_family(RandomSource& rs, const Digraph& g, int d) {
  std::vector<MatrixXd> gens;
  for (int i = 0; i < d; ++i) gens.push_back(random_function(rs, g));
  return EFamily(g, random_function(rs, g), gens);
}

// Memoryless binary family with rows (θ, 1−θ).
StochasticKernel bernoulli(const VectorXd& t) { return StochasticKernel::from_matrix(two(t[0], 1 - t[0], t[0], 1 - t[0])); }

double sym_min_eig(const MatrixXd& g) { return Eigen::SelfAdjointEigenSolver<MatrixXd>(g).eigenvalues().minCoeff(); }

}  // namespace

TEST(ShiftSpace, DimensionEqualsStateCount) {
  RandomSource rs(1);
  for (int trial = 0; trial < 20; ++trial) {
    Digraph g = rs.connected_graph(rs.integer(2, 6));
    EXPECT_EQ(numerical_rank(shift_basis(g)), g.n());
  }
}

TEST(ShiftSpace, IndependenceExamples) {
  RandomSource rs(2);
  Digraph g = rs.connected_graph(4, 0.6);
  VectorXd f = VectorXd::Random(4);
  MatrixXd h(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) h(i, j) = f[j] - f[i] + 0.7;
  EXPECT_FALSE(is_independent_in_G({h}, g));
  EXPECT_FALSE(is_independent_in_G({MatrixXd::Constant(4, 4, 2.0)}, g));

  const int d = static_cast<int>(g.size()) - g.n();
  std::vector<MatrixXd> fs;
  for (int i = 0; i < d; ++i) fs.push_back(random_function(rs, g));
  EXPECT_TRUE(is_independent_in_G(fs, g));
  fs.push_back(random_function(rs, g));
  EXPECT_FALSE(is_independent_in_G(fs, g));
}

TEST(ShiftSpace, LiftedIndependentFamilyStaysIndependent) {
  RandomSource rs(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rs.integer(2, 3), m = n + rs.integer(1, 3);
    Lumping k = rs.lumping(m, n);
    Digraph base = Digraph::complete(n);
    std::vector<MatrixXd> gs, lifted;
    for (int i = 0; i < static_cast<int>(base.size()) - n; ++i) gs.push_back(random_function(rs, base));
    ASSERT_TRUE(is_independent_in_G(gs, base));
    for (const auto& g : gs) {
      MatrixXd l(m, m);
      for (int y = 0; y < m; ++y)
        for (int y2 = 0; y2 < m; ++y2) l(y, y2) = g(k(y), k(y2));
      lifted.push_back(l);
    }
    EXPECT_TRUE(is_independent_in_G(lifted, Digraph::complete(m)));
  }
}

TEST(EFamily, OriginAndSingleEdgeTilt) {
  RandomSource rs(4);
  Digraph g = rs.connected_graph(4);
  MatrixXd k = random_function(rs, g);
  MatrixXd ind = MatrixXd::Zero(4, 4);
  const auto e = g.edges()[1];
  ind(e.first, e.second) = 1;
  EFamily fam(g, k, {ind});
  MatrixXd expk = MatrixXd::Zero(4, 4);
  for (const auto& [i, j] : g.edges()) expk(i, j) = std::exp(k(i, j));
  EXPECT_LE(sup(fam(vec({0})).matrix() - stochastic_rescale(expk).matrix()), 1e-12);
  MatrixXd tilted = expk;
  tilted(e.first, e.second) *= std::exp(1.3);
  EXPECT_LE(sup(eval_e_family(fam, vec({1.3})).matrix() - stochastic_rescale(tilted).matrix()), 1e-12);
  EXPECT_THROW(fam(vec({1, 2})), InvalidInput);
}

TEST(EFamily, RejectsDependentGenerators) {
  Digraph g = Digraph::complete(3);
  MatrixXd a = MatrixXd::Random(3, 3);
  EXPECT_THROW(EFamily(g, MatrixXd::Zero(3, 3), {a, 2 * a}), InvalidFamily);
  EXPECT_THROW(EFamily(g, MatrixXd::Zero(3, 3), {MatrixXd::Ones(3, 3)}), InvalidFamily);
  EXPECT_THROW(EFamily(Digraph(2, {{0, 1}, {1, 1}}), MatrixXd::Zero(2, 2), {}), IrreducibilityError);
}

TEST(EFamily, FullFamilyReachesRandomTargets) {
  RandomSource rs(5);
  for (int trial = 0; trial < 10; ++trial) {
    Digraph g = rs.connected_graph(rs.integer(2, 5));
    const int d = static_cast<int>(g.size()) - g.n();
    EFamily fam = random_e_family(rs, g, d);
    StochasticKernel target = rs.kernel(g);
    // log P − K = Σ θᵢ gᵢ + shift; solve the linear system on the edges and read off θ
    MatrixXd a = hcat(fam.generator_matrix(), shift_basis(g));
    VectorXd rhs = detail::log_on_edges(target) - g.vectorize(fam.carrier());
    VectorXd sol = a.colPivHouseholderQr().solve(rhs);
    ASSERT_LE((a * sol - rhs).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(sup(fam(sol.head(d)).matrix() - target.matrix()), 1e-8);
  }
}

TEST(MFamily, EndpointsAndOrigin) {
  RandomSource rs(6);
  StochasticKernel p0 = rs.kernel(3), p1 = rs.kernel(3);
  MatrixXd q0 = edge_measure(p0).q, q1 = edge_measure(p1).q;
  MFamily fam(Digraph::complete(3), q0, {q1 - q0});
  EXPECT_LE(sup(eval_m_family(fam, vec({0})).matrix() - p0.matrix()), 1e-12);
  EXPECT_LE(sup(fam(vec({1})).matrix() - p1.matrix()), 1e-12);
  EXPECT_LE(sup(fam(vec({0.4})).matrix() - m_geodesic(p0, p1, 0.4).matrix()), 1e-12);
}

TEST(MFamily, Validation) {
  Digraph g = Digraph::complete(2);
  MatrixXd c = two(0.25, 0.25, 0.25, 0.25);
  EXPECT_THROW(MFamily(g, 2 * c, {}), InvalidFamily);
  EXPECT_THROW(MFamily(g, c, {two(0.1, 0, 0, 0)}), InvalidFamily);
  MatrixXd f = two(0.1, -0.1, 0, 0);
  EXPECT_THROW(MFamily(g, c, {f, 2 * f}), InvalidFamily);
  MFamily unequal(g, c, {f});
  EXPECT_THROW(unequal(vec({1})), InvalidFamily);
  MFamily ok(g, c, {two(0.1, -0.1, -0.1, 0.1)});
  EXPECT_THROW(ok(vec({3})), DomainError);
}

TEST(MFamily, ReversibleMidpointStaysReversible) {
  RandomSource rs(7);
  for (int trial = 0; trial < 10; ++trial) {
    StochasticKernel a = rs.reversible_kernel(4), b = rs.reversible_kernel(4);
    StochasticKernel mid = m_geodesic(a, b, 0.5);
    EXPECT_LE(detailed_balance_gap(mid, stationary(mid)), 1e-12);
  }
}

TEST(Geodesics, Endpoints) {
  RandomSource rs(8);
  Digraph g = rs.connected_graph(4);
  StochasticKernel p0 = rs.kernel(g), p1 = rs.kernel(g);
  EXPECT_LE(sup(e_geodesic(p0, p1, 0).matrix() - p0.matrix()), 1e-12);
  EXPECT_LE(sup(e_geodesic(p0, p1, 1).matrix() - p1.matrix()), 1e-12);
  EXPECT_LE(sup(m_geodesic(p0, p1, 0).matrix() - p0.matrix()), 1e-12);
  EXPECT_LE(sup(m_geodesic(p0, p1, 1).matrix() - p1.matrix()), 1e-12);
  EXPECT_THROW(e_geodesic(p0, rs.kernel(4), 0.5), DomainError);
  EXPECT_THROW(m_geodesic(p0, rs.kernel(4), 0.5), DomainError);
}

TEST(Geodesics, MidpointStationaryIsAverage) {
  RandomSource rs(9);
  for (int trial = 0; trial < 10; ++trial) {
    Digraph g = rs.connected_graph(5);
    StochasticKernel p0 = rs.kernel(g), p1 = rs.kernel(g);
    VectorXd avg = 0.5 * (stationary(p0) + stationary(p1));
    EXPECT_LE((stationary(m_geodesic(p0, p1, 0.5)) - avg).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Geodesics, MGeodesicOutsideUnitIntervalNeedsPositivity) {
  StochasticKernel p0 = StochasticKernel::from_matrix(two(0.5, 0.5, 0.5, 0.5));
  StochasticKernel p1 = StochasticKernel::from_matrix(two(0.4, 0.6, 0.6, 0.4));
  EXPECT_NO_THROW(m_geodesic(p0, p1, 1.5));
  EXPECT_THROW(m_geodesic(p0, p1, 6), DomainError);
}

TEST(Geodesics, EGeodesicIsOneDimensionalEFamily) {
  RandomSource rs(10);
  for (int trial = 0; trial < 10; ++trial) {
    Digraph g = rs.connected_graph(4);
    StochasticKernel p0 = rs.kernel(g), p1 = rs.kernel(g);
    VectorXd l0 = detail::log_on_edges(p0);
    MatrixXd a = g.unvectorize(detail::log_on_edges(e_geodesic(p0, p1, -0.7)) - l0);
    MatrixXd b = g.unvectorize(detail::log_on_edges(e_geodesic(p0, p1, 2.2)) - l0);
    EXPECT_EQ(rank_modulo_shifts({a, b}, g), 1);
  }
}

TEST(Geodesics, KlAlongEGeodesicIdentity) {
  RandomSource rs(11);
  for (int trial = 0; trial < 10; ++trial) {
    Digraph g = rs.connected_graph(4);
    StochasticKernel p = rs.kernel(g), p0 = rs.kernel(g), p1 = rs.kernel(g);
    for (const auto& c : kl_convexity_probes(p, p0, p1, {-1.5, 0.2, 0.5, 0.8, 2, 3})) {
      EXPECT_LE(std::abs(c.identity_residual), 1e-10) << c.t;
      if (c.e_gap_second) {
        EXPECT_GE(*c.e_gap_second, -1e-12);
        EXPECT_LE(c.log_rho, 1e-12);
      }
      if (c.m_gap_first) {
        EXPECT_GE(*c.m_gap_first, -1e-12);
      }
      if (c.outer_gap) {
        EXPECT_GT(*c.outer_gap, 0);
        EXPECT_GT(c.log_rho, 0);
      }
    }
  }
}

TEST(Geodesics, EqualEndpointsGiveZeroGaps) {
  RandomSource rs(12);
  StochasticKernel p = rs.kernel(3), p0 = rs.kernel(3);
  for (const auto& c : kl_convexity_probes(p, p0, p0, {0.3, 0.6, 2})) {
    if (c.e_gap_second) {
      EXPECT_NEAR(*c.e_gap_second, 0, 1e-12);
    }
    if (c.m_gap_first) {
      EXPECT_NEAR(*c.m_gap_first, 0, 1e-12);
    }
    if (c.outer_gap) {
      EXPECT_NEAR(*c.outer_gap, 0, 1e-12);
    }
    EXPECT_NEAR(c.log_rho, 0, 1e-12);
  }
}

TEST(JointConvexity, ThreeKernelExample) {
  StochasticKernel p0 = StochasticKernel::from_matrix(two(0.5, 0.5, 0.5, 0.5));
  StochasticKernel p0b = StochasticKernel::from_matrix(two(0.25, 0.75, 0.25, 0.75));
  StochasticKernel p1 = StochasticKernel::from_matrix(two(0.125, 0.875, 0.875, 0.125));
  // with P₀' in the first slot the midpoint violates joint convexity
  EXPECT_GT(joint_m_convexity_gap(p0b, p0, p1, p1, 0.5), 1e-3);
  // with P₀ first the midpoint satisfies it, while t = 1/4 violates it
  EXPECT_LT(joint_m_convexity_gap(p0, p0b, p1, p1, 0.5), 0);
  EXPECT_GT(joint_m_convexity_gap(p0, p0b, p1, p1, 0.25), 1e-3);
  EXPECT_NEAR(joint_m_convexity_gap(p0, p0b, p1, p1, 0), 0, 1e-15);
  EXPECT_NEAR(joint_m_convexity_gap(p0, p0b, p1, p1, 1), 0, 1e-15);
}

TEST(Fisher, BernoulliOracle) {
  for (double t : {0.1, 0.3, 0.5, 0.8}) {
    MatrixXd g = fisher_metric(bernoulli, vec({t}));
    EXPECT_NEAR(g(0, 0), 1 / (t * (1 - t)), 1e-6 / (t * (1 - t)));
  }
}

TEST(Fisher, SecondOrderConvergence) {
  const double t = 0.3, exact = 1 / (t * (1 - t));
  double e1 = std::abs(fisher_metric(bernoulli, vec({t}), {2e-2, 1e-4})(0, 0) - exact);
  double e2 = std::abs(fisher_metric(bernoulli, vec({t}), {1e-2, 1e-4})(0, 0) - exact);
  EXPECT_GE(e1 / e2, 3.0);
}

TEST(Fisher, SymmetricPositiveDefinite) {
  RandomSource rs(13);
  for (int trial = 0; trial < 10; ++trial) {
    Digraph g = rs.connected_graph(4);
    EFamily fam = random_e_family(rs, g, 3);
    VectorXd th = 0.5 * VectorXd::Random(3);
    MatrixXd m = fisher_metric([&](const VectorXd& x) { return fam(x); }, th);
    EXPECT_LE(sup(m - m.transpose()), 1e-12);
    EXPECT_GT(sym_min_eig(m), 1e-8);
  }
}

TEST(Fisher, ReparametrizationCovariance) {
  RandomSource rs(14);
  Digraph g = rs.connected_graph(4);
  EFamily fam = random_e_family(rs, g, 2);
  auto f = [&](const VectorXd& x) { return fam(x); };
  // θ = (η₀ + η₁², sinh η₁)
  auto chart = [](const VectorXd& e) { return vec({e[0] + e[1] * e[1], std::sinh(e[1])}); };
  VectorXd eta = vec({0.2, -0.4});
  MatrixXd jac(2, 2);
  jac << 1, 2 * eta[1], 0, std::cosh(eta[1]);
  MatrixXd g0 = fisher_metric(f, chart(eta));
  MatrixXd g1 = fisher_metric([&](const VectorXd& e) { return fam(chart(e)); }, eta);
  EXPECT_LE(sup(g1 - jac.transpose() * g0 * jac), 1e-6 * sup(g0));
}

TEST(Christoffel, FlatCoordinates) {
  RandomSource rs(15);
  for (int trial = 0; trial < 5; ++trial) {
    Digraph g = rs.connected_graph(4);
    EFamily ef = random_e_family(rs, g, 2);
    Christoffel ce = christoffel_e([&](const VectorXd& x) { return ef(x); }, 0.3 * VectorXd::Random(2));
    EXPECT_LE(ce.max_abs(), 1e-6);

    StochasticKernel a = rs.kernel(g), b = rs.kernel(g), c = rs.kernel(g);
    MatrixXd qa = edge_measure(a).q;
    MFamily mf(g, qa, {edge_measure(b).q - qa, edge_measure(c).q - qa});
    Christoffel cm = christoffel_m([&](const VectorXd& x) { return mf(x); }, vec({0.2, 0.3}));
    EXPECT_LE(cm.max_abs(), 1e-6);
  }
}

TEST(Christoffel, SymmetricInFirstPair) {
  RandomSource rs(16);
  Digraph g = rs.connected_graph(4);
  StochasticKernel a = rs.kernel(g), b = rs.kernel(g);
  EFamily ef = random_e_family(rs, g, 2);
  // a curved family: e-family composed with a nonlinear chart
  auto f = [&](const VectorXd& x) { return ef(vec({std::sin(x[0]) + x[1], x[0] * x[1]})); };
  VectorXd th = vec({0.4, -0.3});
  for (const Christoffel& c : {christoffel_e(f, th), christoffel_m(f, th)}) {
    EXPECT_GT(c.max_abs(), 1e-3);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(c(i, j, k), c(j, i, k), 1e-8);
  }
}

TEST(Isometry, MarkovEmbeddingPreservesGeometry) {
  RandomSource rs(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = rs.integer(2, 3), m = n + rs.integer(1, 4);
    Lumping k = rs.lumping(m, n);
    Digraph g = Digraph::complete(n);
    EFamily ef = random_e_family(rs, g, 2);
    MarkovEmbedding e = rs.markov_embedding(k);
    auto base = [&](const VectorXd& x) { return ef(vec({x[0] + 0.3 * x[1] * x[1], x[1]})); };
    auto lifted = [&](const VectorXd& x) { return embed_markov(e, base(x)); };
    VectorXd th = 0.5 * VectorXd::Random(2);
    EXPECT_LE(sup(fisher_metric(base, th) - fisher_metric(lifted, th)), 1e-7);
    EXPECT_LE(christoffel_e(base, th).max_diff(christoffel_e(lifted, th)), 1e-7);
    EXPECT_LE(christoffel_m(base, th).max_diff(christoffel_m(lifted, th)), 1e-7);
  }
}
