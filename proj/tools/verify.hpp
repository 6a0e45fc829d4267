#pragma once

// Randomized property suites behind `lumpgeo verify`.

#include <cmath>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lumpgeo/lumpgeo.hpp"
#include "report.hpp"

namespace lumpgeo::cli {

struct TrialCheck {
  std::string name;
  double value;
  double threshold;
  bool pass;
};


namespace detail {

inline TrialCheck le(std::string name, double v, double t) { return {std::move(name), v, t, v <= t}; }

inline Eigen::MatrixXd random_function(RandomSource& rs, const Digraph& g) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(g.n(), g.n());
  for (const auto& [i, j] : g.edges()) f(i, j) = rs.normal();
  return f;
}

}  // namespace detail

/// KL, Fisher metric and both Christoffel arrays before and after a random Markov embedding.
inline std::vector<TrialCheck> invariance_trial(RandomSource& rs, double tol_kl, double tol_geo) {
  const int n = rs.integer(2, 5), m = rs.integer(n + 1, 12);
  Lumping k = rs.lumping(m, n);
  StochasticKernel p = rs.kernel(n), p2 = rs.kernel(n);
  MarkovEmbedding e = rs.markov_embedding(k);
  const double kl = std::abs(kl_rate(embed_markov(e, p), embed_markov(e, p2)) - kl_rate(p, p2));

  const Digraph g = Digraph::complete(n);
  EFamily fam(g, detail::random_function(rs, g), {detail::random_function(rs, g), detail::random_function(rs, g)});
  FamilyMap base = [&](const Eigen::VectorXd& x) { return fam(x); };
  FamilyMap lifted = [&](const Eigen::VectorXd& x) { return embed_markov(e, fam(x)); };
  Eigen::VectorXd th(2);
  th << rs.uniform(-0.5, 0.5), rs.uniform(-0.5, 0.5);
  const double fisher = (fisher_metric(base, th) - fisher_metric(lifted, th)).cwiseAbs().maxCoeff();
  const double ce = christoffel_e(base, th).max_diff(christoffel_e(lifted, th));
  const double cm = christoffel_m(base, th).max_diff(christoffel_m(lifted, th));
  return {detail::le("kl_invariance", kl, tol_kl), detail::le("fisher_invariance", fisher, tol_geo),
          detail::le("christoffel_e_invariance", ce, tol_geo), detail::le("christoffel_m_invariance", cm, tol_geo)};
}

/// e-projection onto a random feasible constraint set, leaf Pythagorean triple, reversible projection.
inline std::vector<TrialCheck> pythagorean_trial(RandomSource& rs, std::uint64_t seed, double tol, double tol_constraints,
                                                 double tol_eproj) {
  const int n = rs.integer(2, 4);
  const Digraph g = Digraph::complete(n);
  StochasticKernel p = rs.kernel(n), feasible = rs.kernel(n);
  LinearConstraintSet cs{g, {}, {}};
  const int d = rs.integer(1, 2);
  cs.targets.resize(d);
  Eigen::MatrixXd q = edge_measure(feasible).q;
  for (int i = 0; i < d; ++i) {
    cs.functions.push_back(detail::random_function(rs, g));
    cs.targets[i] = q.cwiseProduct(cs.functions.back()).sum();
  }
  EProjection ep = e_projection(p, cs);
  const double eres = std::abs(pythagorean_residual(p, ep.kernel, feasible, ConvexKind::m_convex));

  const int nb = rs.integer(2, 3), m = nb + rs.integer(1, 4);
  Lumping k = rs.lumping(m, nb);
  StochasticKernel base = rs.kernel(nb);
  StochasticKernel member = embed_markov(rs.markov_embedding(k), base);
  StochasticKernel rep = embed_markov(rs.markov_embedding(k), base);
  StochasticKernel prime = embed_markov(canonical_embedding(rep, k), rs.kernel(nb));
  LeafPythagoreanReport leaf = leaf_pythagorean_check(member, rep, prime, k, 20, seed);

  StochasticKernel r = rs.kernel(n);
  const double rev = std::abs(
      pythagorean_residual(r, m_projection_reversible(r), rs.reversible_kernel(n), ConvexKind::e_convex));
  return {detail::le("e_projection_constraints", constraint_residual(ep.kernel, cs), tol_constraints),
          detail::le("e_projection_pythagorean", eres, tol_eproj),
          detail::le("leaf_pythagorean", std::abs(leaf.residual), tol),
          detail::le("leaf_minimality", -std::min(leaf.worst_leaf_margin, leaf.worst_base_margin), tol),
          detail::le("reversible_pythagorean", rev, tol)};
}

/// Round trip, dimension count and disjointness for a random lumpable kernel.
inline std::vector<TrialCheck> foliation_trial(RandomSource& rs, std::uint64_t seed) {
  const int n = rs.integer(2, 3), m = n + rs.integer(1, 3);
  Lumping k = rs.lumping(m, n);
  Digraph e = Digraph::complete(m);
  StochasticKernel p = rs.lumpable_kernel(k, e);
  StochasticKernel base = rs.kernel(lumped_edge_set(k, e));
  LeafCoordinates c = foliate(p, base, k);
  const double round = (reconstruct(c, k).matrix() - p.matrix()).cwiseAbs().maxCoeff();

  LinearConstraintSet cs = leaf_constraints(base, k, e);
  const int dim_l = reduce_constraints(cs).feasible_dim();
  const Digraph d = lumped_edge_set(k, e);
  const int dim_j = static_cast<int>(d.size()) - n;
  const int expect = dim_lumpable_kernels(k, e);

  StochasticKernel other = rs.lumpable_kernel(k, e);
  bool disjoint = leaf_disjointness_probe(c.leaf_rep, embed_markov(canonical_embedding(other, k), base), k, 20, seed);
  return {detail::le("round_trip", round, 1e-12),
          {"dimension_count", static_cast<double>(std::abs(dim_l + dim_j - expect)), 0.0,
           dim_l + dim_j == expect},
          {"leaf_disjointness", disjoint ? 1.0 : 0.0, 1.0, disjoint}};
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"invariance", "pythagorean", "foliation"};
  return names;
}

/// Runs `trials` seeded trials per suite, logs every check, and records the first failure.
inline void run_verify(Report& r, const std::string& suite, int trials, std::uint64_t seed, std::optional<double> tol) {
  std::vector<std::string> suites;
  if (suite == "all") suites = suite_names();
  else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end()) suites = {suite};
  else throw InvalidInput("verify: unknown suite \"" + suite + "\"");
  if (trials < 1) throw InvalidInput("verify: trials must be positive");

  const double kl_tol = r.threshold("kl_invariance", 1e-9);
  const double geo_tol = r.threshold("geometry_invariance", 1e-6);
  const double pyth_tol = r.threshold("pythagorean", 1e-8);
  const double cons_tol = r.threshold("e_projection_constraints", 1e-8);
  const double eproj_tol = r.threshold("e_projection_pythagorean", 1e-7);
  json failure;
  int failed = 0, total = 0;
  for (const auto& s : suites) {
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ts = seed + static_cast<std::uint64_t>(t);
      RandomSource rs(ts);
      std::vector<TrialCheck> checks;
      try {
        if (s == "invariance") checks = invariance_trial(rs, kl_tol, geo_tol);
        else if (s == "pythagorean") checks = pythagorean_trial(rs, ts, pyth_tol, cons_tol, eproj_tol);
        else checks = foliation_trial(rs, ts);
      } catch (const Error& e) {
        checks = {{"error: " + std::string(e.what()), NAN, 0.0, false}};
      }
      for (const auto& c : checks) {
        ++total;
        r.table.push_back({{"suite", s},
                           {"trial", t},
                           {"seed", ts},
                           {"check", c.name},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"pass", c.pass}});
        if (c.pass) continue;
        ++failed;
        if (failure.is_null())
          failure = {{"suite", s},
                     {"trial", t},
                     {"check", c.name},
                     {"value", c.value},
                     {"threshold", c.threshold},
                     {"reproduce", "lumpgeo verify " + s + " --seed " + std::to_string(ts) + " --trials 1" +
                                       (tol ? " --tol " + json(*tol).dump() : "")}};
      }
    }
  }
  r.result["suites"] = suites;
  r.result["trials"] = trials;
  r.result["checks_run"] = total;
  r.result["checks_failed"] = failed;
  r.result["first_failure"] = failure;
  r.check_true("all_checks", failed == 0);
}

}  // namespace lumpgeo::cli
