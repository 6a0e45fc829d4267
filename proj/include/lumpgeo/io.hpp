#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embeddings.hpp"
#include "foliation.hpp"
#include "geometry.hpp"
#include "lumping.hpp"
#include "projections.hpp"

namespace lumpgeo::io {

using json = nlohmann::json;

/// Parses a JSON document; syntax errors are reported with line and column.
inline json parse(const std::string& text, const std::string& origin = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidInput(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot write file");
  out << text;
}

namespace detail {
inline const json& field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string(what) + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InvalidInput(where + ": expected a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw InvalidInput(where + ": expected an integer");
  return v.get<int>();
}
}  // namespace detail

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(what + ": expected a nonempty array of rows");
  const int n = static_cast<int>(j.size());
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0));
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != a.cols())
      throw InvalidInput(what + ": row " + std::to_string(i) + " has the wrong length");
    for (int k = 0; k < a.cols(); ++k)
      a(i, k) = detail::number(j[i][k], what + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return a;
}

inline json matrix_to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < a.cols(); ++k) r.push_back(a(i, k));
    rows.push_back(r);
  }
  return rows;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidInput(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = detail::number(j[i], what + "[" + std::to_string(i) + "]");
  return v;
}

/// [[i,j,v],…] into an n×n matrix.
inline Eigen::MatrixXd sparse_from_json(const json& j, int n, const std::string& what) {
  if (!j.is_array()) throw InvalidInput(what + ": expected a list of [i,j,v] entries");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < j.size(); ++k) {
    const json& e = j[k];
    std::string where = what + " entry " + std::to_string(k);
    if (!e.is_array() || e.size() != 3) throw InvalidInput(where + ": expected [i,j,v]");
    int r = detail::integer(e[0], where), c = detail::integer(e[1], where);
    if (r < 0 || c < 0 || r >= n || c >= n) throw InvalidInput(where + ": index out of range");
    a(r, c) = detail::number(e[2], where);
  }
  return a;
}

inline json sparse_to_json(const Eigen::MatrixXd& a) {
  json out = json::array();
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k)
      if (a(i, k) != 0) out.push_back({i, k, a(i, k)});
  return out;
}

inline std::vector<Edge> edges_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidInput(what + ": expected a list of [i,j] pairs");
  std::vector<Edge> e;
  for (std::size_t k = 0; k < j.size(); ++k) {
    std::string where = what + " edge " + std::to_string(k);
    if (!j[k].is_array() || j[k].size() != 2) throw InvalidInput(where + ": expected [i,j]");
    e.emplace_back(detail::integer(j[k][0], where), detail::integer(j[k][1], where));
  }
  return e;
}

inline json edges_to_json(const std::vector<Edge>& e) {
  json out = json::array();
  for (const auto& [i, k] : e) out.push_back({i, k});
  return out;
}

inline Digraph digraph_from_json(const json& j) {
  int n = detail::integer(detail::field(j, "n", "digraph"), "digraph n");
  return Digraph(n, edges_from_json(detail::field(j, "edges", "digraph"), "digraph"));
}

inline json digraph_to_json(const Digraph& g) { return {{"n", g.n()}, {"edges", edges_to_json(g.edges())}}; }

inline StochasticKernel kernel_from_json(const json& j) {
  Eigen::MatrixXd rows = matrix_from_json(detail::field(j, "rows", "kernel"), "kernel rows");
  if (rows.rows() != rows.cols()) throw InvalidInput("kernel: rows do not form a square matrix");
  if (j.contains("states") && (!j["states"].is_array() || static_cast<Eigen::Index>(j["states"].size()) != rows.rows()))
    throw InvalidInput("kernel: \"states\" length differs from the number of rows");
  if (j.contains("edges"))
    return StochasticKernel(Digraph(static_cast<int>(rows.rows()), edges_from_json(j["edges"], "kernel")), rows);
  return StochasticKernel::from_matrix(rows);
}

inline json kernel_to_json(const StochasticKernel& p, const std::vector<std::string>& names = {}) {
  json states = json::array();
  for (int i = 0; i < p.n(); ++i)
    states.push_back(i < static_cast<int>(names.size()) ? names[i] : std::to_string(i));
  return {{"states", states}, {"rows", matrix_to_json(p.matrix())}, {"edges", edges_to_json(p.graph().edges())}};
}

inline Lumping lumping_from_json(const json& j) {
  int m = detail::integer(detail::field(j, "m", "lumping"), "lumping m");
  int n = detail::integer(detail::field(j, "n", "lumping"), "lumping n");
  const json& map = detail::field(j, "map", "lumping");
  if (!map.is_array() || static_cast<int>(map.size()) != m) throw InvalidInput("lumping: map length differs from m");
  std::vector<int> v;
  for (std::size_t y = 0; y < map.size(); ++y) v.push_back(detail::integer(map[y], "lumping map[" + std::to_string(y) + "]"));
  return Lumping(n, std::move(v));
}

inline json lumping_to_json(const Lumping& k) { return {{"m", k.m()}, {"n", k.n()}, {"map", k.map()}}; }

inline json basis_to_json(const LumpableBasis& b) {
  json out = json::array();
  for (std::size_t k = 0; k < b.c_vectors.size(); ++k)
    out.push_back({{"kind", "C"}, {"index", {b.c_index[k].first, b.c_index[k].second}}, {"entries", sparse_to_json(b.c_vectors[k])}});
  for (std::size_t k = 0; k < b.f_vectors.size(); ++k)
    out.push_back({{"kind", "F"}, {"index", {b.f_index[k].first, b.f_index[k].second}}, {"entries", sparse_to_json(b.f_vectors[k])}});
  return out;
}

/// One of the four embedding kinds, as read from an embedding file.
struct EmbeddingSpec {
  std::string kind;
  std::optional<MarkovEmbedding> markov;
  std::optional<MemorylessEmbedding> memoryless;
  std::optional<ExponentialEmbedding> exponential;
  int order = 2;

  StochasticKernel apply(const StochasticKernel& p) const {
    if (kind == "markov") return embed_markov(*markov, p);
    if (kind == "memoryless") return embed_memoryless(*memoryless, p);
    if (kind == "exponential") return embed_exponential(*exponential, p);
    return hudson_embed(HudsonEmbedding(p.graph(), order), p);
  }
};

inline EmbeddingSpec embedding_from_json(const json& j) {
  EmbeddingSpec s;
  const json& kind = detail::field(j, "kind", "embedding");
  if (!kind.is_string()) throw InvalidInput("embedding: \"kind\" must be a string");
  s.kind = kind.get<std::string>();
  if (s.kind == "hudson") {
    s.order = j.contains("order") ? detail::integer(j["order"], "embedding order") : 2;
    if (s.order < 2) throw InvalidInput("embedding: hudson order must be at least 2");
    return s;
  }
  Lumping kappa = lumping_from_json(detail::field(j, "kappa", "embedding"));
  if (s.kind == "markov")
    s.markov = MarkovEmbedding(kappa, sparse_from_json(detail::field(j, "lambda", "embedding"), kappa.m(), "embedding lambda"));
  else if (s.kind == "memoryless")
    s.memoryless = MemorylessEmbedding(kappa, vector_from_json(detail::field(j, "weights", "embedding"), "embedding weights"));
  else if (s.kind == "exponential")
    s.exponential = ExponentialEmbedding(kernel_from_json(detail::field(j, "origin", "embedding")), kappa);
  else
    throw InvalidInput("embedding: unknown kind \"" + s.kind + "\"");
  return s;
}

inline json embedding_to_json(const MarkovEmbedding& e) {
  return {{"kind", "markov"}, {"kappa", lumping_to_json(e.kappa())}, {"lambda", sparse_to_json(e.lambda())}};
}

inline json embedding_to_json(const MemorylessEmbedding& e) {
  return {{"kind", "memoryless"}, {"kappa", lumping_to_json(e.kappa())}, {"weights", vector_to_json(e.weights())}};
}

namespace detail {
inline Digraph family_graph(const json& j, const char* what) {
  if (j.contains("graph")) return digraph_from_json(j["graph"]);
  if (j.contains("n")) return Digraph::complete(integer(j["n"], std::string(what) + " n"));
  throw InvalidInput(std::string(what) + ": needs \"graph\" or \"n\"");
}

inline std::vector<Eigen::MatrixXd> matrix_list(const json& j, const char* key, const char* what, int n) {
  const json& list = field(j, key, what);
  if (!list.is_array()) throw InvalidInput(std::string(what) + ": \"" + key + "\" must be a list of matrices");
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    Eigen::MatrixXd a = matrix_from_json(list[k], std::string(what) + " " + key + "[" + std::to_string(k) + "]");
    if (a.rows() != n || a.cols() != n) throw InvalidInput(std::string(what) + ": " + key + "[" + std::to_string(k) + "] has the wrong size");
    out.push_back(std::move(a));
  }
  return out;
}
}  // namespace detail

/// {"kind":"e","graph"|"n",…,"K":…,"g":[…]}
inline EFamily e_family_from_json(const json& j) {
  Digraph g = detail::family_graph(j, "e-family");
  Eigen::MatrixXd k = matrix_from_json(detail::field(j, "K", "e-family"), "e-family K");
  return EFamily(g, k, detail::matrix_list(j, "g", "e-family", g.n()));
}

/// {"kind":"m","graph"|"n",…,"C":…,"F":[…]}
inline MFamily m_family_from_json(const json& j) {
  Digraph g = detail::family_graph(j, "m-family");
  Eigen::MatrixXd c = matrix_from_json(detail::field(j, "C", "m-family"), "m-family C");
  return MFamily(g, c, detail::matrix_list(j, "F", "m-family", g.n()));
}

inline json e_family_to_json(const EFamily& f) {
  json g = json::array();
  for (const auto& m : f.generators()) g.push_back(matrix_to_json(m));
  return {{"kind", "e"}, {"graph", digraph_to_json(f.graph())}, {"K", matrix_to_json(f.carrier())}, {"g", g}};
}

/// {"graph"|"n",…,"g":[…],"targets":[…]}
inline LinearConstraintSet constraints_from_json(const json& j) {
  LinearConstraintSet cs;
  cs.graph = detail::family_graph(j, "constraints");
  cs.functions = detail::matrix_list(j, "g", "constraints", cs.graph.n());
  cs.targets = vector_from_json(detail::field(j, "targets", "constraints"), "constraints targets");
  if (cs.targets.size() != static_cast<Eigen::Index>(cs.functions.size()))
    throw InvalidInput("constraints: target count differs from function count");
  return cs;
}

inline json constraints_to_json(const LinearConstraintSet& cs) {
  json g = json::array();
  for (const auto& m : cs.functions) g.push_back(matrix_to_json(m));
  return {{"graph", digraph_to_json(cs.graph)}, {"g", g}, {"targets", vector_to_json(cs.targets)}};
}

/// {"k": int, "counts": [[i,j,c],…]}, optional "n".
inline MarkovType type_from_json(const json& j) {
  int k = detail::integer(detail::field(j, "k", "type"), "type k");
  if (k < 2) throw InvalidInput("type: k must be at least 2");
  const json& counts = detail::field(j, "counts", "type");
  int n = 0;
  if (j.contains("n")) {
    n = detail::integer(j["n"], "type n");
  } else {
    for (const auto& e : counts)
      if (e.is_array() && e.size() == 3 && e[0].is_number_integer() && e[1].is_number_integer())
        n = std::max({n, e[0].get<int>() + 1, e[1].get<int>() + 1});
  }
  if (n <= 0) throw InvalidInput("type: no states");
  Eigen::MatrixXd c = sparse_from_json(counts, n, "type counts");
  if ((c.array() < 0).any()) throw InvalidInput("type: negative count");
  if (std::abs(c.sum() - (k - 1)) > 1e-9) throw InvalidInput("type: counts must sum to k-1");
  MarkovType t;
  t.k = static_cast<std::size_t>(k);
  t.t = c / static_cast<double>(k - 1);
  t.graph = Digraph::support(t.t);
  t.marginal_consistent = (t.t.rowwise().sum() - t.t.colwise().sum().transpose()).cwiseAbs().maxCoeff() <= 1e-12;
  return t;
}

inline json type_to_json(const MarkovType& t) {
  return {{"k", t.k}, {"n", t.t.rows()}, {"counts", sparse_to_json(t.t * static_cast<double>(t.k - 1))}};
}

}  // namespace lumpgeo::io
