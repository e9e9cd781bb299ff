#include "switchstab/circuit_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace switchstab {

const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Feasible:
      return "feasible";
    case FeasibilityStatus::Infeasible:
      return "infeasible";
    case FeasibilityStatus::Undecided:
      return "undecided";
  }
  return "unknown";
}

const char* to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Success:
      return "success";
    case SynthesisStatus::Infeasible:
      return "infeasible";
    case SynthesisStatus::Undecided:
      return "undecided";
  }
  return "unknown";
}

bool EdgeFlow::is_integral(double tol) const {
  return std::all_of(f.begin(), f.end(), [tol](double v) {
    return std::abs(v) <= tol || std::abs(v - 1.0) <= tol;
  });
}

std::vector<Edge> EdgeFlow::support(const TransitionGraph& g) const {
  std::vector<Edge> out;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] > 0.5) out.push_back(g.edges()[k]);
  }
  return out;
}

EdgeFlow EdgeFlow::indicator(const TransitionGraph& g,
                             const std::vector<Edge>& edges) {
  EdgeFlow flow{std::vector<double>(g.num_edges(), 0.0)};
  for (const Edge& e : edges) {
    auto k = g.edge_index(e);
    if (!k) throw InputError("flow edge " + to_string(e) + " is not in the graph");
    flow.f[*k] = 1.0;
  }
  return flow;
}

double FlowLp::ratio_row(const EdgeFlow& flow) const {
  double s = 0.0;
  for (std::size_t k = 0; k < flow.f.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    s += (numerator(i) - (1.0 - epsilon) * denominator(i)) * flow.f[k];
  }
  return s;
}

bool FlowLp::satisfied_by(const EdgeFlow& flow, double tol) const {
  if (flow.f.size() != graph.num_edges()) return false;
  const Vector x = Eigen::Map<const Vector>(flow.f.data(),
                                            static_cast<Eigen::Index>(flow.f.size()));
  if ((incidence.entries.cast<double>() * x).lpNorm<Eigen::Infinity>() > tol) {
    return false;
  }
  if ((x.array() < -tol).any() || (x.array() > 1.0 + tol).any()) return false;
  if (ratio_row(flow) > tol) return false;
  return x.sum() >= 1.0 - tol;
}

FlowLp build_lp(const TransitionGraph& g, const GainTable& gains,
                double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InputError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
  const bool any_stable = std::any_of(
      g.vertices().begin(), g.vertices().end(), [&](ModeId j) {
        return gains.cls(j) == StabilityClass::AsymptoticallyStable;
      });
  if (!any_stable) {
    throw InfeasibleError(
        "no asymptotically stable mode: the ratio denominator is identically "
        "zero");
  }

  FlowLp lp{g, incidence_matrix(g), Vector(), Vector(), epsilon, LpProblem{}};
  const auto n = static_cast<Eigen::Index>(g.num_edges());
  lp.numerator = Vector::Zero(n);
  lp.denominator = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Edge& e = g.edges()[static_cast<std::size_t>(k)];
    lp.numerator(k) = gains.log_mu(e);
    switch (gains.cls(e.from)) {
      case StabilityClass::Unstable:
        lp.numerator(k) += std::abs(gains.log_lambda(e.from));
        break;
      case StabilityClass::AsymptoticallyStable:
        lp.denominator(k) = std::abs(gains.log_lambda(e.from));
        break;
      case StabilityClass::MarginallyStable:
        break;
    }
  }

  const Eigen::Index m_inc = lp.incidence.entries.rows();
  LpProblem& p = lp.problem;
  p.a = Matrix::Zero(m_inc + 2, n);
  p.a.topRows(m_inc) = lp.incidence.entries.cast<double>();
  p.a.row(m_inc) = (lp.numerator - (1.0 - epsilon) * lp.denominator).transpose();
  p.a.row(m_inc + 1).setOnes();
  p.b = Vector::Zero(m_inc + 2);
  p.b(m_inc + 1) = 1.0;
  p.sense.assign(static_cast<std::size_t>(m_inc), RowSense::Equal);
  p.sense.push_back(RowSense::LessEqual);
  p.sense.push_back(RowSense::GreaterEqual);
  p.c = -Vector::Ones(n);
  p.upper = Vector::Ones(n);
  return lp;
}

std::optional<ModeId> trivial_case_check(const TransitionGraph& g,
                                         const GainTable& gains) {
  for (ModeId j : g.vertices()) {
    if (g.has_self_loop(j) &&
        gains.cls(j) == StabilityClass::AsymptoticallyStable) {
      return j;
    }
  }
  return std::nullopt;
}

bool meets_margin(const RatioReport& r, double epsilon) {
  return r.denominator > 0.0 && r.ratio <= 1.0 - epsilon + 1e-12;
}

Walk hierholzer(const TransitionGraph& g, const std::vector<Edge>& edges) {
  if (edges.empty()) throw InputError("hierholzer: empty edge set");
  std::map<ModeId, std::vector<ModeId>> out;
  std::map<ModeId, long> balance;
  for (const Edge& e : edges) {
    out[e.from].push_back(e.to);
    ++balance[e.from];
    --balance[e.to];
  }
  for (const auto& [v, b] : balance) {
    if (b != 0) {
      throw InputError("hierholzer: vertex " + std::to_string(v) +
                       " has unequal in- and out-degree");
    }
  }
  std::map<ModeId, std::size_t> next;
  std::vector<ModeId> stack{edges.front().from};
  std::vector<ModeId> tour;
  while (!stack.empty()) {
    const ModeId v = stack.back();
    auto& succ = out[v];
    std::size_t& i = next[v];
    if (i < succ.size()) {
      stack.push_back(succ[i++]);
    } else {
      tour.push_back(v);
      stack.pop_back();
    }
  }
  std::reverse(tour.begin(), tour.end());
  if (tour.size() != edges.size() + 1) {
    throw InputError("hierholzer: edge set is not connected");
  }
  return Walk(g, std::move(tour));
}

std::vector<std::vector<Edge>> edge_components(const TransitionGraph& g,
                                               const std::vector<Edge>& edges) {
  // Union-find over the vertices touched by `edges`.
  std::map<ModeId, ModeId> parent;
  auto find = [&](ModeId v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const Edge& e : edges) {
    parent.try_emplace(e.from, e.from);
    parent.try_emplace(e.to, e.to);
  }
  for (const Edge& e : edges) parent[find(e.from)] = find(e.to);

  std::vector<Edge> ordered = edges;
  std::sort(ordered.begin(), ordered.end(), [&](const Edge& a, const Edge& b) {
    return g.edge_index(a).value_or(0) < g.edge_index(b).value_or(0);
  });
  std::vector<std::vector<Edge>> comps;
  std::map<ModeId, std::size_t> slot;
  for (const Edge& e : ordered) {
    const ModeId root = find(e.from);
    auto [it, inserted] = slot.try_emplace(root, comps.size());
    if (inserted) comps.emplace_back();
    comps[it->second].push_back(e);
  }
  return comps;
}

namespace {

// Ratio test on the LP's own coefficients: for an edge set used once each,
// N = sum n_e and D = sum d_e.
bool edges_meet_margin(const FlowLp& lp, const std::vector<Edge>& edges) {
  double num = 0.0;
  double den = 0.0;
  for (const Edge& e : edges) {
    const auto k = static_cast<Eigen::Index>(*lp.graph.edge_index(e));
    num += lp.numerator(k);
    den += lp.denominator(k);
  }
  return den > 0.0 && num / den <= 1.0 - lp.epsilon + 1e-12;
}

bool balanced(const std::vector<Edge>& edges) {
  std::map<ModeId, long> b;
  for (const Edge& e : edges) {
    ++b[e.from];
    --b[e.to];
  }
  return std::all_of(b.begin(), b.end(), [](const auto& kv) { return kv.second == 0; });
}

RatioReport circuit_ratio(const Walk& circuit, const GainTable& gains) {
  return theorem1_ratio(closed_walk_stats(circuit), gains);
}

// Simple cycles obtained by repeatedly walking unused edges (lowest edge
// index first) until a vertex repeats. Edges on dead ends are discarded.
std::vector<std::vector<Edge>> greedy_cycle_decomposition(
    const TransitionGraph& g, const std::vector<Edge>& edges) {
  std::set<std::size_t> remaining;
  for (const Edge& e : edges) remaining.insert(*g.edge_index(e));
  std::vector<std::vector<Edge>> cycles;
  while (!remaining.empty()) {
    std::vector<std::size_t> path{*remaining.begin()};
    std::map<ModeId, std::size_t> seen{{g.edges()[path[0]].from, 0}};
    bool closed = false;
    while (!closed) {
      const ModeId head = g.edges()[path.back()].to;
      if (auto it = seen.find(head); it != seen.end()) {
        std::vector<Edge> cycle;
        for (std::size_t i = it->second; i < path.size(); ++i) {
          cycle.push_back(g.edges()[path[i]]);
        }
        for (std::size_t i = it->second; i < path.size(); ++i) remaining.erase(path[i]);
        cycles.push_back(std::move(cycle));
        closed = true;
        break;
      }
      seen[head] = path.size();
      std::optional<std::size_t> step;
      for (std::size_t k : g.out_edges(head)) {
        if (remaining.contains(k) &&
            std::find(path.begin(), path.end(), k) == path.end()) {
          step = k;
          break;
        }
      }
      if (!step) {
        remaining.erase(path.back());
        break;
      }
      path.push_back(*step);
    }
  }
  return cycles;
}

// First candidate edge set (a component of `support`, or a simple cycle of
// it) whose circuit meets the margin.
std::optional<std::vector<Edge>> first_good_subset(
    const FlowLp& lp, const std::vector<Edge>& support) {
  const TransitionGraph& g = lp.graph;
  std::vector<std::vector<Edge>> candidates;
  if (balanced(support)) candidates = edge_components(g, support);
  for (auto& c : greedy_cycle_decomposition(g, support)) {
    candidates.push_back(std::move(c));
  }
  for (const auto& c : candidates) {
    if (edges_meet_margin(lp, c)) return c;
  }
  return std::nullopt;
}

}  // namespace

OracleSearch exhaustive_circuit_search(const TransitionGraph& g,
                                       const GainTable& gains, double epsilon,
                                       std::size_t max_circuits) {
  const TransitionGraph loop_free = g.without_self_loops();
  OracleSearch out;
  if (loop_free.num_edges() == 0) return out;
  const CircuitEnumeration all =
      enumerate_circuits(loop_free, loop_free.num_edges(), max_circuits);
  out.truncated = all.truncated;
  for (const Walk& c : all.circuits) {
    ++out.examined;
    if (meets_margin(circuit_ratio(c, gains), epsilon)) {
      out.circuit = c;
      return out;
    }
  }
  return out;
}

FeasibilityOutcome solve_feasibility(const FlowLp& lp,
                                     const FeasibilityOptions& opts) {
  FeasibilityOutcome out;
  const LpResult res = solve_lp(lp.problem, opts.simplex);
  switch (res.status) {
    case LpStatus::Infeasible:
      out.status = FeasibilityStatus::Infeasible;
      out.diagnostic = "LP infeasible";
      return out;
    case LpStatus::IterationLimit:
    case LpStatus::Unbounded:
      out.status = FeasibilityStatus::Undecided;
      out.diagnostic = std::string("simplex stopped: ") + to_string(res.status);
      return out;
    case LpStatus::Optimal:
      break;
  }

  EdgeFlow vertex{std::vector<double>(res.x.data(), res.x.data() + res.x.size())};
  out.lp_vertex = vertex;
  out.lp_vertex_integral = vertex.is_integral();

  // Rounding at 0.5 is exact for an integral vertex.
  const std::vector<Edge> support = vertex.support(lp.graph);
  if (!support.empty()) {
    if (balanced(support) &&
        lp.satisfied_by(EdgeFlow::indicator(lp.graph, support))) {
      for (const auto& comp : edge_components(lp.graph, support)) {
        if (edges_meet_margin(lp, comp)) {
          out.status = FeasibilityStatus::Feasible;
          out.flow = EdgeFlow::indicator(lp.graph, support);
          out.repaired = !out.lp_vertex_integral;
          return out;
        }
      }
    }
    if (auto good = first_good_subset(lp, support)) {
      out.status = FeasibilityStatus::Feasible;
      out.flow = EdgeFlow::indicator(lp.graph, *good);
      out.repaired = true;
      return out;
    }
  }

  const std::size_t loop_free_edges = lp.graph.num_edges() - lp.graph.num_self_loops();
  if (loop_free_edges > opts.max_oracle_edges) {
    out.status = FeasibilityStatus::Undecided;
    out.diagnostic = "LP vertex could not be repaired into a satisfying circuit and "
                     "the graph exceeds the exhaustive-search limit";
    return out;
  }
  out.oracle_fallback = true;
  const TransitionGraph loop_free = lp.graph.without_self_loops();
  CircuitEnumeration all;
  if (loop_free.num_edges() > 0) {
    all = enumerate_circuits(loop_free, loop_free.num_edges(), opts.max_oracle_circuits);
  }
  for (const Walk& c : all.circuits) {
    if (edges_meet_margin(lp, c.edges())) {
      out.status = FeasibilityStatus::Feasible;
      out.flow = EdgeFlow::indicator(lp.graph, c.edges());
      return out;
    }
  }
  if (all.truncated) {
    out.status = FeasibilityStatus::Undecided;
    out.diagnostic = "exhaustive circuit search truncated";
  } else {
    out.status = FeasibilityStatus::Infeasible;
    out.diagnostic = "LP relaxation feasible, but no circuit meets the margin";
  }
  return out;
}

CircuitExtraction extract_circuit(const EdgeFlow& flow, const TransitionGraph& g,
                                  const GainTable& gains, double epsilon) {
  if (flow.f.size() != g.num_edges()) {
    throw InputError("extract_circuit: flow size does not match the graph");
  }
  if (!flow.is_integral()) throw InputError("extract_circuit: flow is not integral");
  const std::vector<Edge> support = flow.support(g);
  if (support.empty()) throw InputError("extract_circuit: flow is zero");
  if (!balanced(support)) {
    throw InputError("extract_circuit: flow violates conservation");
  }
  CircuitExtraction out;
  const auto comps = edge_components(g, support);
  out.components = comps.size();
  for (const auto& comp : comps) {
    Walk c = canonical_rotation(hierholzer(g, comp));
    RatioReport r = circuit_ratio(c, gains);
    out.component_ratios.push_back(r.ratio);
    if (meets_margin(r, epsilon) && out.circuit.empty()) {
      out.circuit = std::move(c);
      out.ratio = r;
    }
  }
  if (out.circuit.empty()) {
    std::ostringstream msg;
    msg << "support decomposed into " << comps.size()
        << " component(s); none satisfies the ratio condition (ratios:";
    for (double r : out.component_ratios) msg << ' ' << r;
    msg << ')';
    throw ExtractionError(msg.str(), out.component_ratios);
  }
  return out;
}

SynthesisOutcome synthesize(const TransitionGraph& g, const GainTable& gains,
                            const SynthesisOptions& opts) {
  SynthesisOutcome out;
  SynthesisResult res;

  if (opts.prefer_trivial_case) {
    if (auto j = trivial_case_check(g, gains)) {
      res.trivial_case = j;
      res.circuit = Walk(g, {*j, *j});
      res.ratio = circuit_ratio(res.circuit, gains);
      res.signal = SwitchingSignal::periodic({*j});
      res.components = 1;
      const AsymptoticVerdict v = asymptotic_check(res.signal, gains);
      if (!v.trivial_case) {
        throw std::logic_error("trivial-case signal failed its own verification");
      }
      out.status = SynthesisStatus::Success;
      out.result = std::move(res);
      return out;
    }
  }

  std::optional<FlowLp> lp;
  try {
    lp = build_lp(g, gains, opts.epsilon);
  } catch (const InfeasibleError& e) {
    out.status = SynthesisStatus::Infeasible;
    out.diagnostic = e.what();
    return out;
  }

  FeasibilityOptions fopts;
  fopts.simplex = opts.simplex;
  fopts.max_oracle_edges = opts.max_oracle_edges;
  const FeasibilityOutcome feas = solve_feasibility(*lp, fopts);
  out.diagnostic = feas.diagnostic;
  if (feas.status != FeasibilityStatus::Feasible) {
    out.status = feas.status == FeasibilityStatus::Infeasible
                     ? SynthesisStatus::Infeasible
                     : SynthesisStatus::Undecided;
    return out;
  }

  const CircuitExtraction ext = extract_circuit(*feas.flow, g, gains, opts.epsilon);
  res.flow = feas.flow;
  res.circuit = ext.circuit;
  res.components = ext.components;
  res.lp_vertex_integral = feas.lp_vertex_integral;
  res.repaired = feas.repaired;
  res.oracle_fallback = feas.oracle_fallback;
  res.signal = SwitchingSignal::from_circuit(ext.circuit);

  // Final gate, independent of the LP arithmetic.
  res.ratio = theorem1_ratio(prefix_stats(res.signal, res.circuit.length()), gains);
  const AsymptoticVerdict v = asymptotic_check(res.signal, gains);
  if (!res.ratio.satisfied || !v.condition12 || !v.condition13) {
    throw std::logic_error("synthesized circuit failed re-verification (ratio " +
                           std::to_string(res.ratio.ratio) + ")");
  }
  out.status = SynthesisStatus::Success;
  out.result = std::move(res);
  return out;
}

SynthesisOutcome synthesize(const SwitchedSystem& system,
                            const SynthesisOptions& opts) {
  const auto certs = certify_all(system);
  return synthesize(system.graph(), build_gain_table(system.graph(), certs), opts);
}

}  // namespace switchstab
