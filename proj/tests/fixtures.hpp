#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "switchstab/circuit_synth.hpp"
#include "switchstab/lyap_cert.hpp"
#include "switchstab/switch_graph.hpp"

namespace switchstab::testing {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

/// The five planar modes and their complete-with-loops transition graph.
inline std::vector<Edge> planar_edges() {
  return {{1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 1}, {2, 3}, {2, 4}, {2, 5},
          {3, 1}, {3, 2}, {3, 3}, {3, 4}, {3, 5}, {4, 1}, {4, 2}, {4, 3},
          {4, 4}, {4, 5}, {5, 1}, {5, 2}, {5, 3}, {5, 4}, {5, 5}};
}

inline std::map<ModeId, Matrix> planar_matrices() {
  return {{1, mat2(0.4, 0.8, -0.7, 0.6)},
          {2, mat2(0.3, 0.6, 0.1, 0.4)},
          {3, mat2(1.0, 0.0, 0.0, 0.5)},
          {4, mat2(1.2, 0.7, 1.6, 0.1)},
          {5, mat2(1.0, 0.1, 0.1, 1.0)}};
}

inline TransitionGraph planar_graph() {
  return TransitionGraph({1, 2, 3, 4, 5}, planar_edges());
}

inline SwitchedSystem planar_system() {
  std::vector<SubsystemMatrix> modes;
  for (const auto& [id, a] : planar_matrices()) modes.emplace_back(id, a);
  return SwitchedSystem(std::move(modes), planar_graph());
}

/// Two modes, one stable and one unstable, with log-gains given directly.
inline TransitionGraph two_cycle_graph() { return TransitionGraph({1, 2}, {{1, 2}, {2, 1}}); }

inline GainTable two_cycle_gains() {
  return GainTable::from_logs(two_cycle_graph(), {{1, -0.2}, {2, 1.6}},
                              {{{1, 2}, -1.5}, {{2, 1}, 1.8}});
}

/// Random directed graph on `n` vertices with at most `max_edges` edges,
/// some of them self-loops, plus random log-gains.
struct RandomInstance {
  TransitionGraph graph;
  std::map<ModeId, double> log_lambda;
  std::map<Edge, double> log_mu;
  GainTable gains;
};

inline RandomInstance random_instance(std::mt19937_64& rng, int n, std::size_t max_edges) {
  std::vector<Edge> all;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) all.push_back({i, j});
  }
  std::shuffle(all.begin(), all.end(), rng);
  std::uniform_int_distribution<std::size_t> count(1, std::min(max_edges, all.size()));
  std::vector<Edge> edges(all.begin(), all.begin() + static_cast<long>(count(rng)));
  std::sort(edges.begin(), edges.end());

  std::vector<ModeId> vertices;
  for (int i = 1; i <= n; ++i) vertices.push_back(i);
  std::uniform_real_distribution<double> lam(-1.5, 1.5);
  std::uniform_real_distribution<double> mu(-1.0, 2.0);
  std::bernoulli_distribution marginal(0.1);
  std::map<ModeId, double> log_lambda;
  for (ModeId v : vertices) log_lambda[v] = marginal(rng) ? 0.0 : lam(rng);
  std::map<Edge, double> log_mu;
  for (const Edge& e : edges) log_mu[e] = e.is_self_loop() ? 0.0 : mu(rng);

  TransitionGraph g(vertices, edges);
  GainTable gains = GainTable::from_logs(g, log_lambda, log_mu);
  return {std::move(g), std::move(log_lambda), std::move(log_mu), std::move(gains)};
}

/// Brute force over every edge subset: a non-empty subset that is balanced
/// and weakly connected is the edge set of a circuit, whose ratio is
/// sum(n_e) / sum(d_e). Uses only the raw log-gains.
struct SubsetOracle {
  bool found = false;
  double best_ratio = std::numeric_limits<double>::infinity();
};

inline SubsetOracle subset_oracle(const std::vector<Edge>& edges,
                                  const std::map<ModeId, double>& log_lambda,
                                  const std::map<Edge, double>& log_mu, double epsilon) {
  SubsetOracle out;
  const std::size_t m = edges.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    std::map<ModeId, int> balance;
    std::map<ModeId, ModeId> parent;
    std::function<ModeId(ModeId)> find = [&](ModeId v) {
      return parent[v] == v ? v : parent[v] = find(parent[v]);
    };
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mask >> k & 1)) continue;
      const Edge& e = edges[k];
      ++balance[e.from];
      --balance[e.to];
      parent.try_emplace(e.from, e.from);
      parent.try_emplace(e.to, e.to);
      parent[find(e.from)] = find(e.to);
      num += log_mu.at(e);
      const double l = log_lambda.at(e.from);
      if (l > 0.0) num += l;
      if (l < 0.0) den += -l;
    }
    bool ok = true;
    for (const auto& [v, b] : balance) ok = ok && b == 0;
    std::set<ModeId> roots;
    for (const auto& [v, _] : parent) roots.insert(find(v));
    if (!ok || roots.size() != 1 || den <= 0.0) continue;
    out.best_ratio = std::min(out.best_ratio, num / den);
    if (num <= (1.0 - epsilon) * den) out.found = true;
  }
  return out;
}

}  // namespace switchstab::testing
