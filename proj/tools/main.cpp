// lumpgeo: batch front end for lumpable Markov kernels and their geometry.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "experiments.hpp"
#include "lumpgeo/io.hpp"
#include "lumpgeo/lumpgeo.hpp"
#include "report.hpp"
#include "verify.hpp"

using namespace lumpgeo;
using namespace lumpgeo::cli;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kInputError = 2, kNoConvergence = 3 };

StochasticKernel load_kernel(const std::string& path) { return io::kernel_from_json(io::read_file(path)); }
Lumping load_lumping(const std::string& path) { return io::lumping_from_json(io::read_file(path)); }

void require_domain(const Lumping& k, const StochasticKernel& p, const char* who) {
  if (k.m() != p.n())
    throw InvalidInput(std::string(who) + ": lumping has " + std::to_string(k.m()) + " states but the kernel has " +
                       std::to_string(p.n()));
}

double sup(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

/// Random reversible kernel on a symmetric support.
StochasticKernel random_reversible_on(const Digraph& g, RandomSource& rs) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n(), g.n());
  for (const auto& [i, j] : g.edges())
    if (i <= j) w(i, j) = w(j, i) = rs.uniform(0.05, 1.0);
  return StochasticKernel::normalized(g, std::move(w));
}

/// An embedding as a kernel map, with the lumping that undoes it.
struct EmbeddingView {
  Lumping kappa;
  KernelMap apply;
  bool isometric = true;
};

EmbeddingView view_of(const io::EmbeddingSpec& s, const Digraph& base_graph) {
  if (s.kind == "markov") return {s.markov->kappa(), [e = *s.markov](const StochasticKernel& p) { return embed_markov(e, p); }};
  if (s.kind == "memoryless")
    return {s.memoryless->kappa(), [e = *s.memoryless](const StochasticKernel& p) { return embed_memoryless(e, p); }};
  if (s.kind == "exponential")
    return {s.exponential->kappa(), [e = *s.exponential](const StochasticKernel& p) { return embed_exponential(e, p); },
            false};
  HudsonEmbedding h(base_graph, s.order);
  return {h.lumping(), [h](const StochasticKernel& p) { return hudson_embed(h, p); }};
}

// ---- lump ----

struct LumpArgs {
  std::string kernel, lumping;
  bool basis = false;
};

Report cmd_lump(const Globals& g, const LumpArgs& a) {
  Report r("lump", g);
  StochasticKernel p = load_kernel(a.kernel);
  Lumping k = load_lumping(a.lumping);
  require_domain(k, p, "lump");
  LumpabilityViolation v = lumpability_violation(p.matrix(), k);
  const double tol = r.threshold("lumpability_violation", kLumpTol);
  r.result["lumpable"] = v.magnitude <= tol;
  r.result["violation"] = cli::detail::violation_json(v);
  r.check_le("lumpability_violation", v.magnitude, kLumpTol);
  if (v.magnitude <= tol) {
    StochasticKernel lp = lump(p, k, tol);
    Eigen::VectorXd pibar = stationary(lp);
    r.result["lumped"] = io::kernel_to_json(lp);
    r.result["lumped_stationary"] = io::vector_to_json(pibar);
    r.result["lumped_edge_measure"] = io::matrix_to_json(edge_measure(lp).q);
    r.check_le("stationary_consistency", (lump_distribution(stationary(p), k) - pibar).cwiseAbs().maxCoeff(), 1e-10);
    r.table = edge_table(lp);
  }
  if (a.basis) {
    r.result["basis"] = io::basis_to_json(lumpable_basis(k, p.graph()));
    r.result["lumpable_space_dim"] = lumpable_space_dim(k, p.graph());
    r.result["dim_lumpable_kernels"] = dim_lumpable_kernels(k, p.graph());
  }
  return r;
}

// ---- embed ----

struct EmbedArgs {
  std::string kernel, embedding, other;
  bool bistochastic = false;
  long long max_states = 4096;
};

Report cmd_embed(const Globals& g, const EmbedArgs& a) {
  Report r("embed", g);
  StochasticKernel p = load_kernel(a.kernel);
  if (a.bistochastic) {
    Eigen::VectorXd pi = stationary(p);
    RationalDistribution rat = rationalize(pi, a.max_states);
    if (rat.error > 1e-12)
      throw InvalidInput("embed: stationary distribution has no rational form with denominator <= " +
                         std::to_string(a.max_states) + " (best error " + std::to_string(rat.error) + ")");
    BistochasticEmbedding b = embed_to_bistochastic(p, rat, a.max_states);
    Eigen::VectorXd cols = b.kernel.matrix().colwise().sum().transpose();
    r.result["numerators"] = rat.numerators;
    r.result["denominator"] = rat.denominator;
    r.result["embedding"] = io::embedding_to_json(b.embedding);
    r.result["embedded"] = io::kernel_to_json(b.kernel);
    r.check_le("column_sums", (cols.array() - 1.0).abs().maxCoeff(), 1e-12);
    r.check_le("lump_back", sup(lump(b.kernel, b.kappa).matrix() - p.matrix()), 1e-12);
    if (is_reversible(p)) r.check_le("symmetric", sup(b.kernel.matrix() - b.kernel.matrix().transpose()), 1e-12);
    r.table = edge_table(b.kernel);
    return r;
  }
  if (a.embedding.empty()) throw InvalidInput("embed: give --embedding or --bistochastic");
  io::EmbeddingSpec spec = io::embedding_from_json(io::read_file(a.embedding));
  EmbeddingView view = view_of(spec, p.graph());
  StochasticKernel lifted = view.apply(p);
  r.result["kind"] = spec.kind;
  r.result["embedded"] = io::kernel_to_json(lifted);
  r.result["embedded_stationary"] = io::vector_to_json(stationary(lifted));

  StochasticKernel lumped = lump(lifted, view.kappa, 1e-6);
  StochasticKernel expected = spec.kind == "exponential"
                                  ? stochastic_rescale(spec.exponential->origin_lump().matrix().cwiseProduct(p.matrix()))
                                  : p;
  r.check_le("lump_back", sup(lumped.matrix() - expected.matrix()), 1e-10);

  RandomSource rs(g.seed);
  StochasticKernel p2 = a.other.empty() ? rs.kernel(p.graph()) : load_kernel(a.other);
  const double d = kl_rate(p, p2), dl = kl_rate(lifted, view.apply(p2));
  r.result["kl_base"] = d;
  r.result["kl_embedded"] = dl;
  if (view.isometric) {
    r.check_le("congruency_residual", std::abs(dl - d), 1e-9);
  } else {
    const double dist = exponential_distortion(*spec.exponential, p, p2);
    r.result["distortion"] = dist;
    r.check_ge("distortion", dist, 1e-12);
  }
  r.table = edge_table(lifted);
  return r;
}

// ---- geodesic ----

struct GeodesicArgs {
  std::string p0, p1, kind = "e", embedding;
  std::vector<double> ts{0, 0.25, 0.5, 0.75, 1};
};

Report cmd_geodesic(const Globals& g, const GeodesicArgs& a) {
  Report r("geodesic", g);
  StochasticKernel p0 = load_kernel(a.p0), p1 = load_kernel(a.p1);
  const GeodesicKind kind = a.kind == "m" ? GeodesicKind::m : GeodesicKind::e;
  json points = json::array();
  for (double t : a.ts) {
    StochasticKernel pt = kind == GeodesicKind::e ? e_geodesic(p0, p1, t) : m_geodesic(p0, p1, t);
    json pj = {{"t", t}, {"kernel", io::kernel_to_json(pt)}};
    table_json row = {{"t", t}, {"kl_p0", kl_rate(p0, pt)}, {"kl_p1", kl_rate(p1, pt)}, {"entropy_rate", entropy_rate(pt)}};
    if (kind == GeodesicKind::e) {
      const double lr = e_geodesic_log_rho(p0, p1, t);
      pj["log_rho"] = lr;
      row["log_rho"] = lr;
    }
    points.push_back(pj);
    r.table.push_back(row);
  }
  r.result["kind"] = a.kind;
  r.result["points"] = points;
  if (!a.embedding.empty()) {
    io::EmbeddingSpec spec = io::embedding_from_json(io::read_file(a.embedding));
    EmbeddingView view = view_of(spec, p0.graph());
    const double dev = check_geodesic_affine(view.apply, p0, p1, a.ts, kind);
    r.result["embedding_kind"] = spec.kind;
    r.check_le("affinity_deviation", dev, 1e-8);
  }
  return r;
}

// ---- project ----

struct ProjectArgs {
  std::string kernel, constraints, family, embedding, reference;
  bool reversible = false;
};

Report cmd_project(const Globals& g, const ProjectArgs& a) {
  Report r("project", g);
  StochasticKernel p = load_kernel(a.kernel);
  const int modes = !a.constraints.empty() + !a.family.empty() + !a.embedding.empty() + a.reversible;
  if (modes != 1) throw InvalidInput("project: give exactly one of --constraints, --family, --embedding, --reversible");
  RandomSource rs(g.seed);

  if (!a.constraints.empty()) {
    LinearConstraintSet cs = io::constraints_from_json(io::read_file(a.constraints));
    EProjection ep = e_projection(p, cs);
    r.result["mode"] = "e-projection";
    r.result["projection"] = io::kernel_to_json(ep.kernel);
    r.result["lambda_star"] = io::vector_to_json(ep.dual.lambda);
    r.result["psi"] = ep.dual.psi;
    r.result["divergence"] = ep.dual.dual_value;
    r.result["iterations"] = ep.dual.iterations;
    r.result["kept_constraints"] = ep.reduction.kept;
    r.result["dropped_constraints"] = ep.reduction.dropped;
    r.check_le("constraint_residual", constraint_residual(ep.kernel, cs), 1e-8);
    r.check_le("dual_gradient", ep.dual.grad_norm(), 1e-7);
    if (!a.reference.empty()) {
      StochasticKernel ref = load_kernel(a.reference);
      r.check_le("reference_feasible", constraint_residual(ref, cs), 1e-8);
      r.check_le("pythagorean_residual", std::abs(pythagorean_residual(p, ep.kernel, ref, ConvexKind::m_convex)), 1e-7);
    }
    r.table = edge_table(ep.kernel);
  } else if (!a.family.empty()) {
    EFamily fam = io::e_family_from_json(io::read_file(a.family));
    MProjection mp = m_projection_numeric(p, fam, Eigen::VectorXd::Zero(fam.dim()), g.seed);
    Eigen::VectorXd off = mp.theta;
    for (int k = 0; k < off.size(); ++k) off[k] += rs.normal();
    StochasticKernel member = fam(off);
    r.result["mode"] = "m-projection";
    r.result["theta"] = io::vector_to_json(mp.theta);
    r.result["projection"] = io::kernel_to_json(mp.kernel);
    r.result["divergence"] = mp.divergence;
    r.result["restarts"] = mp.restarts;
    r.check_le("gradient_norm", mp.grad_norm, 1e-7);
    r.check_le("pythagorean_residual", std::abs(pythagorean_residual(p, mp.kernel, member, ConvexKind::e_convex)), 1e-6);
    for (std::size_t k = 0; k < mp.trace.size(); ++k) r.table.push_back({{"iteration", k}, {"divergence", mp.trace[k]}});
  } else if (a.reversible) {
    StochasticKernel pp = m_projection_reversible(p);
    StochasticKernel rev = random_reversible_on(pp.graph(), rs);
    r.result["mode"] = "reversible";
    r.result["projection"] = io::kernel_to_json(pp);
    r.result["divergence"] = kl_rate(p, pp);
    r.check_le("detailed_balance_gap", detailed_balance_gap(pp, stationary(pp)), 1e-12);
    r.check_le("pythagorean_residual", std::abs(pythagorean_residual(p, pp, rev, ConvexKind::e_convex)), 1e-10);
    r.table = edge_table(pp);
  } else {
    io::EmbeddingSpec spec = io::embedding_from_json(io::read_file(a.embedding));
    MarkovEmbedding e;
    if (spec.kind == "markov") e = *spec.markov;
    else if (spec.kind == "memoryless") e = spec.memoryless->to_markov(lumped_edge_set(spec.memoryless->kappa(), p.graph()));
    else throw InvalidInput("project: closed-form projection needs a markov or memoryless embedding");
    StochasticKernel proj = m_projection_closed(p, e);
    StochasticKernel other = rs.kernel(e.base_graph());
    r.result["mode"] = "embedding-image";
    r.result["projection"] = io::kernel_to_json(proj);
    r.result["lumped"] = io::kernel_to_json(lump(p, e.kappa()));
    r.result["divergence"] = kl_rate(p, proj);
    r.check_le("pythagorean_residual", std::abs(closed_projection_residual(p, e, other)), 1e-9);
    r.table = edge_table(proj);
  }
  return r;
}

// ---- maxent ----

struct MaxentArgs {
  std::string graph, base, lumping;
};

Report cmd_maxent(const Globals& g, const MaxentArgs& a) {
  Report r("maxent", g);
  Digraph gr = io::digraph_from_json(io::read_file(a.graph));
  if (a.base.empty() != a.lumping.empty()) throw InvalidInput("maxent: --base and --lumping go together");
  if (a.base.empty()) {
    StochasticKernel u = max_entropy_kernel(gr);
    const double h = entropy_rate(u), rho = pf_pair(gr.indicator()).rho;
    r.result["kernel"] = io::kernel_to_json(u);
    r.result["entropy_rate"] = h;
    r.result["log_rho"] = std::log(rho);
    r.check_le("entropy_equals_log_rho", std::abs(h - std::log(rho)), 1e-10);
    r.table = edge_table(u);
    return r;
  }
  StochasticKernel base = load_kernel(a.base);
  Lumping k = load_lumping(a.lumping);
  if (k.m() != gr.n()) throw InvalidInput("maxent: lumping domain differs from the graph size");
  EProjection lift = max_entropy_lift(base, k, gr);
  r.result["kernel"] = io::kernel_to_json(lift.kernel);
  r.result["entropy_rate"] = entropy_rate(lift.kernel);
  r.result["lambda_star"] = io::vector_to_json(lift.dual.lambda);
  r.result["leaf_dim"] = lift.reduction.feasible_dim();
  r.check_le("dual_gradient", lift.dual.grad_norm(), 1e-7);
  r.check_le("lumps_to_base", sup(lump(lift.kernel, k, 1e-6).matrix() - base.matrix()), 1e-8);
  r.table = edge_table(lift.kernel);
  return r;
}

// ---- foliate ----

struct FoliateArgs {
  std::string kernel, lumping, base;
};

Report cmd_foliate(const Globals& g, const FoliateArgs& a) {
  Report r("foliate", g);
  StochasticKernel p = load_kernel(a.kernel);
  Lumping k = load_lumping(a.lumping);
  require_domain(k, p, "foliate");
  Digraph d = lumped_edge_set(k, p.graph());
  StochasticKernel base = a.base.empty() ? max_entropy_kernel(d) : load_kernel(a.base);
  LeafCoordinates c = foliate(p, base, k);
  StochasticKernel back = reconstruct(c, k);
  r.result["base_point"] = io::kernel_to_json(c.base_point);
  r.result["leaf_representative"] = io::kernel_to_json(c.leaf_rep);
  r.result["within_leaf"] = io::kernel_to_json(c.within_leaf);
  r.result["leaf_dim"] = static_cast<int>(d.size()) - d.n();
  r.result["base_family_dim"] = reduce_constraints(leaf_constraints(base, k, p.graph())).feasible_dim();
  r.result["reconstruction_residual"] = sup(back.matrix() - p.matrix());
  r.check_le("reconstruction_residual", sup(back.matrix() - p.matrix()), 1e-12);
  return r;
}

// ---- mle ----

struct MleArgs {
  std::string type, rep, lumping;
};

Report cmd_mle(const Globals& g, const MleArgs& a) {
  Report r("mle", g);
  MarkovType t = io::type_from_json(io::read_file(a.type));
  StochasticKernel rep = load_kernel(a.rep);
  Lumping k = load_lumping(a.lumping);
  require_domain(k, rep, "mle");
  if (t.t.rows() != rep.n()) throw InvalidInput("mle: type and representative have different state counts");
  LeafFamily leaf = leaf_family(rep, k);
  MleResult m = mle_embedded(t, leaf, g.seed);
  r.result["theta"] = io::vector_to_json(m.theta);
  r.result["generator_edges"] = io::edges_to_json(leaf.generator_edges);
  r.result["kernel"] = io::kernel_to_json(m.kernel);
  r.result["empirical"] = io::kernel_to_json(m.empirical);
  r.result["adjusted"] = m.adjusted;
  r.result["adjustment_norm"] = m.adjustment_norm;
  double worst_drop = 0;
  for (std::size_t s = 0; s < m.log_likelihood_trace.size(); ++s) {
    if (s > 0) worst_drop = std::max(worst_drop, m.log_likelihood_trace[s - 1] - m.log_likelihood_trace[s]);
    r.table.push_back({{"iteration", s}, {"log_likelihood", m.log_likelihood_trace[s]}});
  }
  r.check_le("log_likelihood_decrease", worst_drop, 1e-12);
  return r;
}

int finish(const Report& r, const Globals& g) {
  emit(r, g);
  return r.passed() ? kOk : kCheckFailed;
}

std::string context;

int error(const std::string& what, int code) {
  std::cerr << "lumpgeo: error: " << context << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lumpable Markov kernels: embeddings, geodesics, projections, foliation"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  double tol = 0;
  app.add_option("--tol", tol, "Override every check threshold");
  app.add_option("--seed", g.seed, "Seed for all random draws")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Write <verb>.<format> here instead of stdout");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  LumpArgs la;
  auto* lump_cmd = app.add_subcommand("lump", "Lumpability verdict and lumped kernel");
  lump_cmd->add_option("--kernel", la.kernel, "Kernel JSON")->required();
  lump_cmd->add_option("--lumping", la.lumping, "Lumping JSON")->required();
  lump_cmd->add_flag("--basis", la.basis, "Export the lumpable-matrix basis");

  EmbedArgs ea;
  auto* embed_cmd = app.add_subcommand("embed", "Apply an embedding, or build the bistochastic one");
  embed_cmd->add_option("--kernel", ea.kernel, "Kernel JSON")->required();
  embed_cmd->add_option("--embedding", ea.embedding, "Embedding JSON");
  embed_cmd->add_option("--other", ea.other, "Second kernel for the congruency check");
  embed_cmd->add_flag("--bistochastic", ea.bistochastic, "Memoryless embedding onto a doubly stochastic kernel");
  embed_cmd->add_option("--max-states", ea.max_states, "State budget for --bistochastic")->capture_default_str();

  GeodesicArgs ga;
  auto* geo_cmd = app.add_subcommand("geodesic", "Sample an e- or m-geodesic");
  geo_cmd->add_option("--p0", ga.p0, "Start kernel JSON")->required();
  geo_cmd->add_option("--p1", ga.p1, "End kernel JSON")->required();
  geo_cmd->add_option("--kind", ga.kind, "Connection")->check(CLI::IsMember({"e", "m"}))->capture_default_str();
  geo_cmd->add_option("--t", ga.ts, "Parameter values")->delimiter(',');
  geo_cmd->add_option("--embedding", ga.embedding, "Check affinity of this embedding along the geodesic");

  ProjectArgs pa;
  auto* proj_cmd = app.add_subcommand("project", "e-projection, m-projection, reversible or closed-form projection");
  proj_cmd->add_option("--kernel", pa.kernel, "Kernel JSON")->required();
  proj_cmd->add_option("--constraints", pa.constraints, "Linear constraints JSON (e-projection)");
  proj_cmd->add_option("--reference", pa.reference, "Feasible kernel for the Pythagorean check");
  proj_cmd->add_option("--family", pa.family, "e-family JSON (m-projection)");
  proj_cmd->add_option("--embedding", pa.embedding, "Markov or memoryless embedding JSON (image projection)");
  proj_cmd->add_flag("--reversible", pa.reversible, "Projection onto reversible kernels");

  MaxentArgs ma;
  auto* maxent_cmd = app.add_subcommand("maxent", "Maximum entropy rate kernel or lift");
  maxent_cmd->add_option("--graph", ma.graph, "Digraph JSON")->required();
  maxent_cmd->add_option("--base", ma.base, "Base kernel JSON for the lift");
  maxent_cmd->add_option("--lumping", ma.lumping, "Lumping JSON for the lift");

  FoliateArgs fa;
  auto* fol_cmd = app.add_subcommand("foliate", "Leaf coordinates of a lumpable kernel");
  fol_cmd->add_option("--kernel", fa.kernel, "Kernel JSON")->required();
  fol_cmd->add_option("--lumping", fa.lumping, "Lumping JSON")->required();
  fol_cmd->add_option("--base", fa.base, "Base point JSON (default: maximum entropy kernel on the lumped graph)");

  MleArgs mla;
  auto* mle_cmd = app.add_subcommand("mle", "Maximum likelihood within a leaf");
  mle_cmd->add_option("--type", mla.type, "Markov type JSON")->required();
  mle_cmd->add_option("--rep", mla.rep, "Leaf representative kernel JSON")->required();
  mle_cmd->add_option("--lumping", mla.lumping, "Lumping JSON")->required();

  ExperimentConfig xc;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a named experiment");
  exp_cmd->add_option("name", xc.name, "Experiment")->required()->check(CLI::IsMember(experiment_names()));
  exp_cmd->add_option("--p", xc.p, "hudson-midpoint parameter")->capture_default_str();
  exp_cmd->add_option("--trials", xc.trials, "Random trials")->capture_default_str();
  exp_cmd->add_option("--kernel", xc.kernel_file, "Input kernel for reversiblization");

  std::string suite = "all";
  int trials = 50;
  auto* ver_cmd = app.add_subcommand("verify", "Randomized property suites");
  ver_cmd->add_option("suite", suite, "Suite")->check(CLI::IsMember({"invariance", "pythagorean", "foliation", "all"}))
      ->capture_default_str();
  ver_cmd->add_option("--trials", trials, "Trials per suite")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  if (app.count("--tol")) {
    if (!(tol >= 0)) return error("--tol must be nonnegative", kInputError);
    g.tol = tol;
  }

  try {
    if (*lump_cmd) return finish(cmd_lump(g, la), g);
    if (*embed_cmd) return finish(cmd_embed(g, ea), g);
    if (*geo_cmd) return finish(cmd_geodesic(g, ga), g);
    if (*proj_cmd) return finish(cmd_project(g, pa), g);
    if (*maxent_cmd) return finish(cmd_maxent(g, ma), g);
    if (*fol_cmd) return finish(cmd_foliate(g, fa), g);
    if (*mle_cmd) return finish(cmd_mle(g, mla), g);
    if (*exp_cmd) {
      Report r("experiment-" + xc.name, g);
      context = "experiment " + xc.name + ": ";
      run_experiment(r, xc, g.seed);
      return finish(r, g);
    }
    Report r("verify-" + suite, g);
    run_verify(r, suite, trials, g.seed, g.tol);
    return finish(r, g);
  } catch (const InfeasibleConstraints& e) {
    return error(e.what(), kInputError);
  } catch (const ConvergenceError& e) {
    return error(e.what(), kNoConvergence);
  } catch (const OptimizationError& e) {
    return error(e.what(), kNoConvergence);
  } catch (const Error& e) {
    return error(e.what(), kInputError);
  }
}
