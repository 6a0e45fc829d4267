#pragma once

// Named experiments: worked examples and counterexamples with their pass/fail thresholds.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lumpgeo/lumpgeo.hpp"
#include "lumpgeo/rational.hpp"
#include "report.hpp"

namespace lumpgeo::cli {

struct ExperimentConfig {
  std::string name;
  double p = 0.25;  ///< hudson-midpoint parameter
  int trials = 50;
  std::string kernel_file;  ///< optional input for reversiblization
};

namespace detail {

inline json rational_matrix(const Mat<Rational>& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < a.cols(); ++j) r.push_back(to_string(a(i, j)));
    rows.push_back(r);
  }
  return rows;
}

inline json violation_json(const LumpabilityViolation& v) {
  return {{"magnitude", v.magnitude}, {"x", v.x}, {"x_prime", v.x2}, {"y_high", v.y1}, {"y_low", v.y2}};
}

inline StochasticKernel two_state(double a, double b, double c, double d) {
  return StochasticKernel::from_matrix((Eigen::MatrixXd(2, 2) << a, b, c, d).finished());
}

}  // namespace detail

inline void experiment_weather(Report& r) {
  using R = Rational;
  const Lumping kappa(2, {0, 1, 1});
  Mat<R> lam(3, 3), base(2, 2), expect(3, 3);
  lam << R(1), R(1, 2), R(1, 2), R(1), R(3, 5), R(2, 5), R(1), R(2, 5), R(3, 5);
  base << R(4, 5), R(1, 5), R(1, 2), R(1, 2);
  expect << R(4, 5), R(1, 10), R(1, 10), R(1, 2), R(3, 10), R(1, 5), R(1, 2), R(1, 5), R(3, 10);
  Mat<R> embedded = embed_matrix<R>(lam, kappa, base);
  Mat<R> back = lump_matrix<R>(embedded, kappa);
  r.result["lambda"] = detail::rational_matrix(lam);
  r.result["base"] = detail::rational_matrix(base);
  r.result["embedded"] = detail::rational_matrix(embedded);
  r.result["lumped"] = detail::rational_matrix(back);
  r.check_true("embedding_matches_exactly", embedded == expect);
  r.check_true("lump_recovers_base_exactly", back == base);

  StochasticKernel p = detail::two_state(0.8, 0.2, 0.5, 0.5);
  MarkovEmbedding e = MarkovEmbedding::normalized(kappa, (Eigen::MatrixXd(3, 3) << 1, 0.5, 0.5, 1, 0.6, 0.4, 1, 0.4, 0.6).finished());
  StochasticKernel lifted = embed_markov(e, p);
  Eigen::VectorXd pi = stationary(p);
  r.result["stationary"] = io::vector_to_json(pi);
  r.result["embedded_stationary"] = io::vector_to_json(stationary(lifted));
  r.check_le("stationary_vs_5_7", std::max(std::abs(pi[0] - 5.0 / 7), std::abs(pi[1] - 2.0 / 7)), 1e-12);

  StochasticKernel p2 = detail::two_state(0.6, 0.4, 0.3, 0.7);
  double d = kl_rate(p, p2), dl = kl_rate(lifted, embed_markov(e, p2));
  r.result["kl_base"] = d;
  r.result["kl_embedded"] = dl;
  r.check_le("kl_invariance", std::abs(d - dl), 1e-12);

  RationalDistribution rat = rationalize(pi);
  BistochasticEmbedding b = embed_to_bistochastic(p, rat);
  Eigen::VectorXd cols = b.kernel.matrix().colwise().sum().transpose();
  r.result["bistochastic"] = {{"states", b.kernel.n()},
                              {"numerators", rat.numerators},
                              {"denominator", rat.denominator},
                              {"kernel", io::matrix_to_json(b.kernel.matrix())}};
  r.check_true("bistochastic_has_7_states", b.kernel.n() == 7);
  r.check_le("bistochastic_column_sums", (cols.array() - 1.0).abs().maxCoeff(), 1e-12);
  r.table = edge_table(lifted);
}

inline void experiment_hudson_midpoint(Report& r, double p) {
  HudsonMidpointReport h = hudson_midpoint_counterexample(p);
  const double expected = (1 - 2 * p) * (1 - 2 * p);
  r.result["p"] = p;
  r.result["lifted0"] = io::matrix_to_json(h.lifted0.matrix());
  r.result["lifted1"] = io::matrix_to_json(h.lifted1.matrix());
  r.result["midpoint"] = io::matrix_to_json(h.midpoint.matrix());
  r.result["closed_form"] = io::matrix_to_json(h.closed_form);
  r.result["violation"] = detail::violation_json(h.violation);
  r.result["expected_violation"] = expected;
  r.check_le("closed_form_deviation", h.closed_form_deviation, 1e-12);
  r.check_le("violation_error", std::abs(h.violation.magnitude - expected), 1e-10);
  r.check_positive("violation", h.violation.magnitude);
  r.table = edge_table(h.midpoint);
}

inline void experiment_maxent_lift(Report& r, std::uint64_t seed) {
  const Lumping kappa(2, {0, 1, 1});
  const Digraph target = Digraph::complete(3);
  StochasticKernel base = detail::two_state(0.8, 0.2, 0.5, 0.5);
  EProjection lift = max_entropy_lift(base, kappa, target);
  const double h = entropy_rate(lift.kernel);
  RandomSource rs(seed);
  double best = -INFINITY;
  for (int s = 0; s < 100; ++s) {
    double hm = entropy_rate(embed_markov(rs.markov_embedding(kappa, target), base));
    best = std::max(best, hm);
    r.table.push_back({{"member", s}, {"entropy_rate", hm}, {"margin", h - hm}});
  }
  r.result["lift"] = io::kernel_to_json(lift.kernel);
  r.result["entropy_rate"] = h;
  r.result["best_member_entropy_rate"] = best;
  r.result["lambda"] = io::vector_to_json(lift.dual.lambda);
  r.check_positive("entropy_margin", h - best);
  r.check_le("dual_gradient", lift.dual.grad_norm(), 1e-7);
  r.check_le("lumps_to_base", (lump(lift.kernel, kappa, 1e-6).matrix() - base.matrix()).cwiseAbs().maxCoeff(), 1e-8);

  double complete = 0;
  for (int n = 2; n <= 6; ++n)
    complete = std::max(complete, std::abs(entropy_rate(max_entropy_kernel(Digraph::complete(n))) - std::log(n)));
  r.check_le("complete_graph_entropy", complete, 1e-12);
  Digraph golden(2, {{0, 0}, {0, 1}, {1, 0}});
  Eigen::EigenSolver<Eigen::MatrixXd> es(golden.indicator());
  const double rho = es.eigenvalues().real().maxCoeff();
  const double hg = entropy_rate(max_entropy_kernel(golden));
  r.result["golden_entropy_rate"] = hg;
  r.check_le("golden_vs_eigensolve", std::abs(hg - std::log(rho)), 1e-10);
  r.check_le("golden_vs_log_phi", std::abs(hg - std::log(std::numbers::phi)), 1e-10);
}

inline void experiment_reversiblization(Report& r, int trials, std::uint64_t seed, const StochasticKernel* given) {
  RandomSource rs(seed);
  double contraction = -INFINITY, lump_contraction = -INFINITY, pythagorean = 0, four = INFINITY;
  for (int t = 0; t < trials; ++t) {
    const int n = given ? given->n() : rs.integer(2, 5);
    StochasticKernel p = given ? *given : rs.kernel(n), p2 = rs.kernel(n);
    StochasticKernel pp = additive_reversiblization(p), pp2 = additive_reversiblization(p2);
    const double dpp = kl_rate(p, p2), dplus = kl_rate(pp, pp2);
    contraction = std::max(contraction, dplus - dpp);
    StochasticKernel rev = rs.reversible_kernel(n);
    double pyth = pythagorean_residual(p, pp, rev, ConvexKind::e_convex);
    pythagorean = std::max(pythagorean, std::abs(pyth));
    FourPointResult f = four_point_check(p, p2, {multiplicative_reversiblization(p2)}, pp);
    four = std::min(four, f.worst_margin);

    const int m = rs.integer(3, 6), nb = rs.integer(2, m - 1);
    Lumping k = rs.lumping(m, nb);
    StochasticKernel a = rs.lumpable_kernel(k), b = rs.lumpable_kernel(k);
    const double dab = kl_rate(a, b), dl = kl_rate(lump(a, k), lump(b, k));
    lump_contraction = std::max(lump_contraction, dl - dab);
    r.table.push_back({{"trial", t},
                       {"kl", dpp},
                       {"kl_reversiblized", dplus},
                       {"pythagorean_residual", pyth},
                       {"four_point_margin", f.worst_margin},
                       {"kl_lumpable", dab},
                       {"kl_lumped", dl}});
  }
  if (given) {
    r.result["kernel"] = io::kernel_to_json(*given);
    r.result["additive"] = io::kernel_to_json(additive_reversiblization(*given));
    r.result["kl_to_additive"] = kl_rate(*given, additive_reversiblization(*given));
  }
  r.result["trials"] = trials;
  r.check_le("reversiblization_contraction_excess", contraction, 1e-12);
  r.check_le("lumping_contraction_excess", lump_contraction, 1e-12);
  r.check_le("pythagorean_residual", pythagorean, 1e-10);
  r.check_ge("four_point_margin", four, 1e-12);
}

/// The three kernels as stated. The swapped assignment and the t-scan are reported for reference only.
inline void experiment_joint_convexity(Report& r) {
  StochasticKernel p0 = detail::two_state(0.5, 0.5, 0.5, 0.5);
  StochasticKernel p0b = detail::two_state(0.25, 0.75, 0.25, 0.75);
  StochasticKernel p1 = detail::two_state(0.125, 0.875, 0.875, 0.125);
  auto as_given = [&](double t) { return joint_m_convexity_gap(p0, p0b, p1, p1, t); };
  auto swapped = [&](double t) { return joint_m_convexity_gap(p0b, p0, p1, p1, t); };
  double best_given = -INFINITY, best_t = 0;
  for (int k = 1; k < 20; ++k) {
    const double t = k / 20.0;
    const double g = as_given(t), s = swapped(t);
    if (g > best_given) best_given = g, best_t = t;
    r.table.push_back({{"t", t}, {"gap_as_given", g}, {"gap_swapped", s}});
  }
  const double g = as_given(0.5), s = swapped(0.5);
  r.result["P0"] = io::matrix_to_json(p0.matrix());
  r.result["P0_prime"] = io::matrix_to_json(p0b.matrix());
  r.result["P1"] = io::matrix_to_json(p1.matrix());
  r.result["gap_at_half"] = {{"as_given", g}, {"swapped", s}};
  r.result["gap_as_given_max"] = {{"t", best_t}, {"gap", best_given}};
  r.result["note"] =
      "gap = D(gamma_m(P0,P1)(t) || gamma_m(P0',P1')(t)) - (1-t) D(P0||P0') - t D(P1||P1'); 'swapped' exchanges "
      "P0 and P0', which reverses the divergence arguments";
  r.check_positive("violation_at_half", g);
}

inline void experiment_cyclic(Report& r) {
  Eigen::VectorXd mu(4);
  mu << 0.4, 0.3, 0.2, 0.1;
  StochasticKernel p = make_cyclic_kernel(mu);
  HudsonEmbedding h(p.graph(), 2);
  Lumping diff = cyclic_difference_lumping(h, 4);
  StochasticKernel c = composite_lump(p, 2, diff);
  double dev = 0;
  for (int d = 0; d < 4; ++d)
    for (int d2 = 0; d2 < 4; ++d2) dev = std::max(dev, std::abs(c(d, d2) - mu[d2]));
  r.result["mu"] = io::vector_to_json(mu);
  r.result["kernel"] = io::kernel_to_json(p);
  r.result["difference_chain"] = io::kernel_to_json(c);
  r.check_le("difference_chain_is_memoryless", dev, 1e-12);
  r.check_le("uniform_stationary", (stationary(p).array() - 0.25).abs().maxCoeff(), 1e-12);
  r.table = edge_table(c);
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"weather",         "hudson-midpoint", "maxent-lift",
                                              "reversiblization", "joint-convexity", "cyclic"};
  return names;
}

inline void run_experiment(Report& r, const ExperimentConfig& c, std::uint64_t seed) {
  r.result["experiment"] = c.name;
  if (c.name == "weather") return experiment_weather(r);
  if (c.name == "hudson-midpoint") return experiment_hudson_midpoint(r, c.p);
  if (c.name == "maxent-lift") return experiment_maxent_lift(r, seed);
  if (c.name == "joint-convexity") return experiment_joint_convexity(r);
  if (c.name == "cyclic") return experiment_cyclic(r);
  if (c.name == "reversiblization") {
    if (c.kernel_file.empty()) return experiment_reversiblization(r, c.trials, seed, nullptr);
    StochasticKernel k = io::kernel_from_json(io::read_file(c.kernel_file));
    return experiment_reversiblization(r, c.trials, seed, &k);
  }
  throw InvalidInput("experiment: unknown name \"" + c.name + "\"");
}

}  // namespace lumpgeo::cli
