#include <gtest/gtest.h>

#include <cmath>

#include "lumpgeo/lumpgeo.hpp"

using namespace lumpgeo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const Lumping kWeatherKappa(2, {0, 1, 1});

double sup(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

// Tangent dimension of the lumpable kernels on e: edge functions with zero row sums and
// equal block sums across each block, counted as |ℰ| minus the constraint rank.
int tangent_dim_oracle(const Lumping& k, const Digraph& e) {
  std::vector<VectorXd> rows;
  const int m = k.m();
  for (int y = 0; y < m; ++y) {
    VectorXd r = VectorXd::Zero(static_cast<Eigen::Index>(e.size()));
    for (int y2 : e.successors(y)) r[e.edge_index(y, y2)] = 1;
    rows.push_back(r);
  }
  for (int x = 0; x < k.n(); ++x) {
    const auto& b = k.block(x);
    for (std::size_t i = 1; i < b.size(); ++i)
      for (int x2 = 0; x2 < k.n(); ++x2) {
        VectorXd r = VectorXd::Zero(static_cast<Eigen::Index>(e.size()));
        for (int y2 : k.block(x2)) {
          if (e.has_edge(b[i], y2)) r[e.edge_index(b[i], y2)] += 1;
          if (e.has_edge(b[0], y2)) r[e.edge_index(b[0], y2)] -= 1;
        }
        rows.push_back(r);
      }
  }
  MatrixXd c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(e.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return static_cast<int>(e.size()) - numerical_rank(c);
}

// 1-parameter model: base graph on 2 states without the (1,1) edge
struct OneParameterModel {
  Lumping kappa{2, {0, 1, 1}};
  Digraph graph{3, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}}};
  LeafFamily leaf;
  explicit OneParameterModel(std::uint64_t seed) {
    RandomSource rs(seed);
    leaf = leaf_family(rs.lumpable_kernel(kappa, graph), kappa);
  }
};

}  // namespace

TEST(Foliate, KernelOnItsBasePointIsItsOwnRepresentative) {
  RandomSource rs(1);
  for (int trial = 0; trial < 10; ++trial) {
    Lumping k = rs.lumping(rs.integer(3, 6), 2);
    StochasticKernel p = rs.lumpable_kernel(k);
    StochasticKernel base = lump(p, k);
    LeafCoordinates c = foliate(p, base, k);
    EXPECT_LE(sup(c.leaf_rep.matrix() - p.matrix()), 1e-12);
    EXPECT_LE(sup(c.within_leaf.matrix() - base.matrix()), 0.0);
  }
}

TEST(Foliate, RoundTripAndIdempotence) {
  RandomSource rs(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rs.integer(2, 4), m = n + rs.integer(1, 5);
    Lumping k = rs.lumping(m, n);
    StochasticKernel p = rs.lumpable_kernel(k);
    StochasticKernel base = rs.kernel(n);
    LeafCoordinates c = foliate(p, base, k);
    ASSERT_LE(sup(lump(c.leaf_rep, k).matrix() - base.matrix()), 1e-12);
    StochasticKernel back = reconstruct(c, k);
    EXPECT_LE(sup(back.matrix() - p.matrix()), 1e-12);
    LeafCoordinates again = foliate(back, base, k);
    EXPECT_LE(sup(again.leaf_rep.matrix() - c.leaf_rep.matrix()), 1e-12);
    EXPECT_LE(sup(again.within_leaf.matrix() - c.within_leaf.matrix()), 1e-12);
  }
  EXPECT_THROW(foliate(rs.kernel(3), rs.kernel(2), kWeatherKappa), LumpabilityError);
}

TEST(Foliate, SameLeafKernelsShareAnEGeodesic) {
  RandomSource rs(3);
  for (int trial = 0; trial < 10; ++trial) {
    Lumping k = rs.lumping(5, 2);
    MarkovEmbedding e = rs.markov_embedding(k);
    StochasticKernel a = embed_markov(e, rs.kernel(2)), b = embed_markov(e, rs.kernel(2));
    StochasticKernel base = rs.kernel(2);
    ASSERT_LE(sup(foliate(a, base, k).leaf_rep.matrix() - foliate(b, base, k).leaf_rep.matrix()), 1e-12);
    for (double t : {-0.5, 0.25, 1.5}) {
      StochasticKernel g = e_geodesic(a, b, t);
      ASSERT_TRUE(is_lumpable(g, k));
      EXPECT_LE(sup(canonical_embedding(g, k).lambda() - e.lambda()), 1e-12);
      EXPECT_LE(sup(lump(g, k).matrix() - e_geodesic(lump(a, k), lump(b, k), t).matrix()), 1e-12);
    }
  }
}

TEST(LeafFamily, OriginAndParametersReproduceMembers) {
  RandomSource rs(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rs.integer(2, 3), m = n + rs.integer(1, 4);
    Lumping k = rs.lumping(m, n);
    StochasticKernel rep = rs.lumpable_kernel(k);
    LeafFamily lf = leaf_family(rep, k);
    EXPECT_EQ(lf.family.dim(), n * n - n);
    EXPECT_LE(sup(lf.family(VectorXd::Zero(lf.family.dim())).matrix() - rep.matrix()), 1e-12);
    EXPECT_LE(sup(lf.family(lf.theta_of(lf.base_point)).matrix() - rep.matrix()), 1e-12);
    StochasticKernel pbar = rs.kernel(n);
    StochasticKernel member = lf.family(lf.theta_of(pbar));
    EXPECT_LE(sup(member.matrix() - lf.member(pbar).matrix()), 1e-10);
    StochasticKernel any = lf.family(VectorXd::Random(lf.family.dim()));
    EXPECT_TRUE(is_lumpable(any, k));
    EXPECT_LE(sup(canonical_embedding(any, k).lambda() - lf.embedding.lambda()), 1e-10);
  }
}

TEST(LeafFamily, WeatherDimensions) {
  RandomSource rs(5);
  StochasticKernel rep = rs.lumpable_kernel(kWeatherKappa);
  LeafFamily lf = leaf_family(rep, kWeatherKappa);
  EXPECT_EQ(lf.family.dim(), 2);
  EXPECT_EQ(reduce_constraints(leaf_constraints(lf.base_point, kWeatherKappa, Digraph::complete(3))).feasible_dim(), 3);
}

TEST(LeafFamily, SparseGraphsBuildIndependentGenerators) {
  RandomSource rs(6);
  int built = 0;
  for (int trial = 0; trial < 60 && built < 15; ++trial) {
    const int n = rs.integer(2, 4), m = n + rs.integer(1, 3);
    Lumping k = rs.lumping(m, n);
    Digraph g = rs.connected_graph(m, 0.6);
    if (!is_compatible(k, g)) continue;
    Digraph d = lumped_edge_set(k, g);
    StochasticKernel rep = rs.lumpable_kernel(k, g);
    LeafFamily lf = leaf_family(rep, k);
    EXPECT_EQ(lf.family.dim(), static_cast<int>(d.size()) - n);
    EXPECT_EQ(lf.anchor_edges.size(), static_cast<std::size_t>(n));
    ++built;
  }
  EXPECT_GE(built, 5);
}

TEST(LeafFamily, AnchorEdgesAreEdges) {
  Digraph d(3, {{0, 1}, {1, 2}, {2, 0}, {2, 2}});
  auto a = anchor_edges(d);
  ASSERT_EQ(a.size(), 3u);
  for (const auto& [x, x2] : a) EXPECT_TRUE(d.has_edge(x, x2));
}

TEST(Dimensions, LeafPlusBaseEqualsLumpableKernels) {
  RandomSource rs(7);
  for (auto [m, n] : {std::pair{3, 2}, {4, 2}, {5, 3}}) {
    Lumping k = rs.lumping(m, n);
    Digraph e = Digraph::complete(m);
    StochasticKernel rep = rs.lumpable_kernel(k);
    const int dim_j = leaf_family(rep, k).family.dim();
    const int dim_l = reduce_constraints(leaf_constraints(lump(rep, k), k, e)).feasible_dim();
    EXPECT_EQ(dim_l + dim_j, dim_lumpable_kernels(k, e));
    EXPECT_EQ(dim_lumpable_kernels(k, e), tangent_dim_oracle(k, e));
    EXPECT_EQ(dim_lumpable_kernels(k, e), numerical_rank([&] {
                LumpableBasis b = lumpable_basis(k, e);
                MatrixXd v(static_cast<Eigen::Index>(e.size()), static_cast<Eigen::Index>(b.size()));
                int c = 0;
                for (const auto& x : b.c_vectors) v.col(c++) = e.vectorize(x);
                for (const auto& x : b.f_vectors) v.col(c++) = e.vectorize(x);
                return v;
              }()) - n);
  }
}

TEST(BaseFamily, ClosedUnderMixtures) {
  RandomSource rs(8);
  for (int trial = 0; trial < 20; ++trial) {
    Lumping k = rs.lumping(rs.integer(3, 6), 2);
    StochasticKernel base = rs.kernel(2);
    StochasticKernel a = embed_markov(rs.markov_embedding(k), base), b = embed_markov(rs.markov_embedding(k), base);
    StochasticKernel mid = m_geodesic(a, b, 0.5);
    ASSERT_TRUE(is_lumpable(mid, k, 1e-10));
    EXPECT_LE(sup(lump(mid, k).matrix() - base.matrix()), 1e-10);
  }
}

TEST(Disjointness, Probe) {
  RandomSource rs(9);
  StochasticKernel base = rs.kernel(2);
  StochasticKernel r1 = embed_markov(rs.markov_embedding(kWeatherKappa), base);
  StochasticKernel r2 = embed_markov(rs.markov_embedding(kWeatherKappa), base);
  EXPECT_FALSE(leaf_disjointness_probe(r1, r1, kWeatherKappa, 10, 1));
  EXPECT_TRUE(leaf_disjointness_probe(r1, r2, kWeatherKappa, 100, 2));
  MarkovEmbedding l1 = canonical_embedding(r1, kWeatherKappa);
  for (int s = 0; s < 20; ++s) {
    StochasticKernel member = embed_markov(l1, rs.kernel(2));
    EXPECT_LE(sup(foliate(member, base, kWeatherKappa).leaf_rep.matrix() - r1.matrix()), 1e-12);
  }
}

TEST(LeafPythagorean, RandomCompliantTriples) {
  RandomSource rs(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rs.integer(2, 3), m = n + rs.integer(1, 4);
    Lumping k = rs.lumping(m, n);
    StochasticKernel base = rs.kernel(n);
    StochasticKernel p = embed_markov(rs.markov_embedding(k), base);
    StochasticKernel rep = embed_markov(rs.markov_embedding(k), base);
    StochasticKernel prime = embed_markov(canonical_embedding(rep, k), rs.kernel(n));
    LeafPythagoreanReport r = leaf_pythagorean_check(p, rep, prime, k, 20, trial);
    EXPECT_LE(std::abs(r.residual), 1e-8);
    EXPECT_GE(r.worst_leaf_margin, -1e-8);
    EXPECT_GE(r.worst_base_margin, -1e-8);
    EXPECT_TRUE(r.ok);
  }
}

TEST(LeafPythagorean, DegenerateCasesAndMembership) {
  RandomSource rs(11);
  StochasticKernel base = rs.kernel(2);
  StochasticKernel p = embed_markov(rs.markov_embedding(kWeatherKappa), base);
  StochasticKernel rep = embed_markov(rs.markov_embedding(kWeatherKappa), base);
  StochasticKernel prime = embed_markov(canonical_embedding(rep, kWeatherKappa), rs.kernel(2));
  EXPECT_NEAR(leaf_pythagorean_check(rep, rep, prime, kWeatherKappa).residual, 0, 1e-12);
  EXPECT_EQ(leaf_pythagorean_check(p, rep, rep, kWeatherKappa).residual, 0.0);
  StochasticKernel off_base = embed_markov(rs.markov_embedding(kWeatherKappa), rs.kernel(2));
  EXPECT_THROW(leaf_pythagorean_check(off_base, rep, prime, kWeatherKappa), DomainError);
  EXPECT_THROW(leaf_pythagorean_check(p, rep, p, kWeatherKappa), DomainError);
}

TEST(MarkovType, Examples) {
  Trajectory cycle{{0, 1, 2, 0, 1, 2, 0}};
  MarkovType t = markov_type(cycle, 3);
  EXPECT_EQ(t.graph, Digraph(3, {{0, 1}, {1, 2}, {2, 0}}));
  EXPECT_NEAR(t.t(0, 1), 1.0 / 3, 1e-15);
  EXPECT_NEAR(t.t(2, 0), 1.0 / 3, 1e-15);
  EXPECT_TRUE(t.marginal_consistent);
  MarkovType two = markov_type(Trajectory{{1, 0}}, 2);
  EXPECT_EQ(two.t(1, 0), 1.0);
  EXPECT_EQ(two.t.sum(), 1.0);
  EXPECT_FALSE(two.marginal_consistent);
  EXPECT_THROW(markov_type(Trajectory{{0}}, 2), InvalidInput);
  EXPECT_THROW(markov_type(Trajectory{{0, 3}}, 2), InvalidInput);
}

TEST(MarkovType, LongTrajectoryApproachesEdgeMeasure) {
  RandomSource rs(12);
  StochasticKernel p = rs.kernel(4);
  MarkovType t = markov_type(sample_trajectory(p, stationary(p), 100000, 5), 4);
  EXPECT_LE(sup(t.t - edge_measure(p).q), 0.02);
  EXPECT_NEAR(t.t.sum(), 1.0, 1e-12);
}

TEST(Mle, ZeroNoiseRecoversMember) {
  OneParameterModel model(13);
  ASSERT_EQ(model.leaf.family.dim(), 1);
  VectorXd truth = VectorXd::Constant(1, 0.7);
  StochasticKernel p = model.leaf.family(truth);
  MarkovType t{p.graph(), edge_measure(p).q, 0, true};
  MleResult r = mle_embedded(t, model.leaf);
  EXPECT_FALSE(r.adjusted);
  EXPECT_NEAR(r.theta[0], truth[0], 1e-6);
  for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i)
    EXPECT_GE(r.log_likelihood_trace[i], r.log_likelihood_trace[i - 1] - 1e-15);
}

TEST(Mle, ConsistencyAndGridOracle) {
  OneParameterModel model(14);
  VectorXd truth = VectorXd::Constant(1, -0.4);
  StochasticKernel p = model.leaf.family(truth);
  MarkovType t = markov_type(sample_trajectory(p, stationary(p), 100000, 3), 3);
  MleResult r = mle_embedded(t, model.leaf);
  EXPECT_NEAR(r.theta[0], truth[0], 0.05);
  EXPECT_LE(r.adjustment_norm, 1e-4);
  for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i)
    EXPECT_GE(r.log_likelihood_trace[i], r.log_likelihood_trace[i - 1] - 1e-15);

  // Σ T log P_θ on a 10⁻³ grid
  double best = -INFINITY, arg = 0;
  for (double th = truth[0] - 1; th <= truth[0] + 1; th += 1e-3) {
    StochasticKernel k = model.leaf.family(VectorXd::Constant(1, th));
    double ll = 0;
    for (const auto& [i, j] : t.graph.edges()) ll += t.t(i, j) * std::log(k(i, j));
    if (ll > best) best = ll, arg = th;
  }
  EXPECT_NEAR(r.theta[0], arg, 1e-3);
}

TEST(Mle, RejectsTypesThatNeverLeaveAState) {
  OneParameterModel model(15);
  MarkovType t = markov_type(Trajectory{{0, 1, 0, 2}}, 3);
  double adj = 0;
  EXPECT_THROW(empirical_kernel(t, adj), IrreducibilityError);
}
