#include <gtest/gtest.h>

#include "lumpgeo/io.hpp"
#include "lumpgeo/lumpgeo.hpp"

using namespace lumpgeo;
using namespace lumpgeo::io;
using Eigen::MatrixXd;

namespace {

double sup(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Json, ParseErrorsCarryLineAndColumn) {
  std::string msg = error_of([] { parse("{\n  \"rows\": [1,\n  ]\n}", "k.json"); });
  EXPECT_NE(msg.find("k.json:3:"), std::string::npos) << msg;
  EXPECT_THROW(read_file("/nonexistent/file.json"), InvalidInput);
}

TEST(Json, KernelRoundTrip) {
  RandomSource rs(1);
  StochasticKernel p = rs.kernel(rs.connected_graph(4));
  json j = kernel_to_json(p, {"a", "b"});
  EXPECT_EQ(j["states"][0], "a");
  EXPECT_EQ(j["states"][2], "2");
  StochasticKernel back = kernel_from_json(parse(j.dump()));
  EXPECT_EQ(back.graph(), p.graph());
  EXPECT_LE(sup(back.matrix() - p.matrix()), 0.0);
}

TEST(Json, KernelSupportAndValidation) {
  StochasticKernel p = kernel_from_json(parse(R"({"states":["sun","rain"],"rows":[[0.8,0.2],[1,0]]})"));
  EXPECT_EQ(p.graph(), Digraph(2, {{0, 0}, {0, 1}, {1, 0}}));
  EXPECT_THROW(kernel_from_json(parse(R"({"rows":[[0.8,0.2],[1,0]],"edges":[[0,0],[0,1],[1,0],[1,1]]})")), InvalidInput);
  EXPECT_THROW(kernel_from_json(parse(R"({"rows":[[0.8,0.3],[1,0]]})")), InvalidInput);
  EXPECT_THROW(kernel_from_json(parse(R"({"rows":[[1,0],[0,1]]})")), IrreducibilityError);
  EXPECT_THROW(kernel_from_json(parse(R"({"rows":[[1,0,0],[0,1,0]]})")), InvalidInput);
  EXPECT_THROW(kernel_from_json(parse(R"({"rows":[[0.5,0.5],[0.5,0.5]],"states":["a"]})")), InvalidInput);
  EXPECT_THROW(kernel_from_json(parse(R"({"matrix":[[1]]})")), InvalidInput);
  std::string msg = error_of([] { kernel_from_json(parse(R"({"rows":[[0.5,0.5],[0.5,"x"]]})")); });
  EXPECT_NE(msg.find("[1][1]"), std::string::npos) << msg;
}

TEST(Json, DigraphAndLumping) {
  Digraph g = digraph_from_json(parse(R"({"n":3,"edges":[[0,1],[1,2],[2,0]]})"));
  EXPECT_EQ(digraph_from_json(digraph_to_json(g)), g);
  EXPECT_THROW(digraph_from_json(parse(R"({"n":2,"edges":[[0,2]]})")), InvalidInput);
  Lumping k = lumping_from_json(parse(R"({"m":3,"n":2,"map":[0,1,1]})"));
  EXPECT_EQ(k.map(), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(lumping_from_json(lumping_to_json(k)).map(), k.map());
  EXPECT_THROW(lumping_from_json(parse(R"({"m":3,"n":2,"map":[0,1]})")), InvalidInput);
  EXPECT_THROW(lumping_from_json(parse(R"({"m":3,"n":2,"map":[0,0,0]})")), InvalidInput);
}

TEST(Json, EmbeddingKinds) {
  const std::string kappa = R"("kappa":{"m":3,"n":2,"map":[0,1,1]})";
  StochasticKernel p = StochasticKernel::from_matrix((MatrixXd(2, 2) << 0.8, 0.2, 0.5, 0.5).finished());

  EmbeddingSpec mk = embedding_from_json(parse(
      R"({"kind":"markov",)" + kappa +
      R"(,"lambda":[[0,0,1],[0,1,0.5],[0,2,0.5],[1,0,1],[1,1,0.6],[1,2,0.4],[2,0,1],[2,1,0.4],[2,2,0.6]]})"));
  MatrixXd expect(3, 3);
  expect << 0.8, 0.1, 0.1, 0.5, 0.3, 0.2, 0.5, 0.2, 0.3;
  EXPECT_LE(sup(mk.apply(p).matrix() - expect), 1e-15);
  EmbeddingSpec again = embedding_from_json(embedding_to_json(*mk.markov));
  EXPECT_LE(sup(again.markov->lambda() - mk.markov->lambda()), 0.0);

  EmbeddingSpec ml = embedding_from_json(parse(R"({"kind":"memoryless",)" + kappa + R"(,"weights":[1,0.25,0.75]})"));
  EXPECT_NEAR(ml.apply(p)(0, 2), 0.15, 1e-15);
  EXPECT_LE(sup(embedding_from_json(embedding_to_json(*ml.memoryless)).memoryless->weights() - ml.memoryless->weights()),
            0.0);

  EmbeddingSpec ex = embedding_from_json(parse(R"({"kind":"exponential",)" + kappa +
                                               R"(,"origin":{"rows":[[0.5,0.25,0.25],[0.5,0.25,0.25],[0.5,0.25,0.25]]}})"));
  EXPECT_TRUE(is_lumpable(ex.apply(p), ex.exponential->kappa()));

  EmbeddingSpec h = embedding_from_json(parse(R"({"kind":"hudson","order":3})"));
  EXPECT_EQ(h.apply(p).n(), 8);
  EXPECT_THROW(embedding_from_json(parse(R"({"kind":"hudson","order":1})")), InvalidInput);
  EXPECT_THROW(embedding_from_json(parse(R"({"kind":"other",)" + kappa + "}")), InvalidInput);
  EXPECT_THROW(embedding_from_json(parse(R"({"kind":"markov",)" + kappa + R"(,"lambda":[[0,0,1]]})")), InvalidInput);
}

TEST(Json, Families) {
  RandomSource rs(2);
  Digraph g = rs.connected_graph(3);
  MatrixXd k = MatrixXd::Zero(3, 3), g1 = MatrixXd::Zero(3, 3);
  for (const auto& [i, j] : g.edges()) k(i, j) = rs.normal(), g1(i, j) = rs.normal();
  EFamily f(g, k, {g1});
  EFamily back = e_family_from_json(parse(e_family_to_json(f).dump()));
  Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.4);
  EXPECT_LE(sup(back(th).matrix() - f(th).matrix()), 1e-15);

  EFamily complete = e_family_from_json(parse(R"({"kind":"e","n":2,"K":[[0,0],[0,0]],"g":[[[1,0],[0,0]]]})"));
  EXPECT_EQ(complete.graph(), Digraph::complete(2));
  EXPECT_THROW(e_family_from_json(parse(R"({"kind":"e","K":[[0]],"g":[]})")), InvalidInput);
  EXPECT_THROW(e_family_from_json(parse(R"({"kind":"e","n":2,"K":[[0,0],[0,0]],"g":[[[1,0,0]]]})")), InvalidInput);

  MFamily m = m_family_from_json(
      parse(R"({"kind":"m","n":2,"C":[[0.25,0.25],[0.25,0.25]],"F":[[[0.1,-0.1],[-0.1,0.1]]]})"));
  EXPECT_EQ(m.dim(), 1);
  EXPECT_NEAR(m(Eigen::VectorXd::Constant(1, 1.0))(0, 0), 0.7, 1e-12);
}

TEST(Json, ConstraintsRoundTrip) {
  LinearConstraintSet cs = constraints_from_json(parse(R"({"n":2,"g":[[[1,0],[0,0]]],"targets":[0.3]})"));
  EXPECT_EQ(cs.size(), 1u);
  LinearConstraintSet back = constraints_from_json(constraints_to_json(cs));
  EXPECT_EQ(back.graph, cs.graph);
  EXPECT_EQ(back.targets[0], 0.3);
  EXPECT_THROW(constraints_from_json(parse(R"({"n":2,"g":[[[1,0],[0,0]]],"targets":[0.3,0.1]})")), InvalidInput);
}

TEST(Json, MarkovTypes) {
  MarkovType t = type_from_json(parse(R"({"k":4,"counts":[[0,1,1],[1,2,1],[2,0,1]]})"));
  EXPECT_EQ(t.t.rows(), 3);
  EXPECT_TRUE(t.marginal_consistent);
  EXPECT_NEAR(t.t(1, 2), 1.0 / 3, 1e-15);
  MarkovType wide = type_from_json(parse(R"({"k":2,"n":4,"counts":[[0,1,1]]})"));
  EXPECT_EQ(wide.t.rows(), 4);
  MarkovType back = type_from_json(type_to_json(t));
  EXPECT_LE(sup(back.t - t.t), 1e-15);
  EXPECT_THROW(type_from_json(parse(R"({"k":5,"counts":[[0,1,1]]})")), InvalidInput);
  EXPECT_THROW(type_from_json(parse(R"({"k":2,"counts":[[0,1,-1],[1,0,2]]})")), InvalidInput);
  EXPECT_THROW(type_from_json(parse(R"({"k":1,"counts":[]})")), InvalidInput);
}

TEST(Json, BasisExport) {
  json b = basis_to_json(lumpable_basis(Lumping(2, {0, 1, 1}), Digraph::complete(3)));
  ASSERT_EQ(b.size(), 7u);
  int c = 0, f = 0;
  for (const auto& v : b) {
    (v["kind"] == "C" ? c : f) += 1;
    EXPECT_TRUE(v["entries"].is_array());
    EXPECT_EQ(v["index"].size(), 2u);
  }
  EXPECT_EQ(c, 4);
  EXPECT_EQ(f, 3);
}
