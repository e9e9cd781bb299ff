#include "switchstab/switch_graph.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <sstream>

namespace switchstab {

std::string to_string(const Edge& e) {
  return "(" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
}

TransitionGraph::TransitionGraph(std::vector<ModeId> vertices,
                                 std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
  if (vertices_.empty()) throw InputError("transition graph has no vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertex_pos_.emplace(vertices_[i], i).second) {
      throw InputError("duplicate vertex " + std::to_string(vertices_[i]));
    }
  }
  out_.resize(vertices_.size());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (!has_vertex(e.from) || !has_vertex(e.to)) {
      throw InputError("edge " + to_string(e) + " has an undeclared endpoint");
    }
    if (!edge_pos_.emplace(e, k).second) {
      throw InputError("duplicate edge " + to_string(e));
    }
    out_[vertex_pos_.at(e.from)].push_back(k);
  }
}

std::optional<std::size_t> TransitionGraph::vertex_index(ModeId v) const {
  auto it = vertex_pos_.find(v);
  if (it == vertex_pos_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> TransitionGraph::edge_index(const Edge& e) const {
  auto it = edge_pos_.find(e);
  if (it == edge_pos_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& TransitionGraph::out_edges(ModeId v) const {
  auto idx = vertex_index(v);
  if (!idx) throw InputError("unknown vertex " + std::to_string(v));
  return out_[*idx];
}

std::size_t TransitionGraph::num_self_loops() const {
  return static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(), [](const Edge& e) { return e.is_self_loop(); }));
}

TransitionGraph TransitionGraph::without_self_loops() const {
  std::vector<Edge> kept;
  std::copy_if(edges_.begin(), edges_.end(), std::back_inserter(kept),
               [](const Edge& e) { return !e.is_self_loop(); });
  return TransitionGraph(vertices_, std::move(kept));
}

IncidenceMatrix incidence_matrix(const TransitionGraph& g) {
  IncidenceMatrix inc;
  for (ModeId v : g.vertices()) inc.rows.push_back({v, false});
  std::map<ModeId, std::size_t> aux_row;
  for (ModeId v : g.vertices()) {
    if (g.has_self_loop(v)) {
      aux_row[v] = inc.rows.size();
      inc.rows.push_back({v, true});
    }
  }
  inc.columns = g.edges();
  inc.entries = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(inc.rows.size()),
                                      static_cast<Eigen::Index>(g.num_edges()));
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const Edge& e = g.edges()[k];
    const auto col = static_cast<Eigen::Index>(k);
    inc.entries(static_cast<Eigen::Index>(*g.vertex_index(e.from)), col) = 1;
    const std::size_t head =
        e.is_self_loop() ? aux_row.at(e.to) : *g.vertex_index(e.to);
    inc.entries(static_cast<Eigen::Index>(head), col) = -1;
  }
  return inc;
}

Walk::Walk(const TransitionGraph& g, std::vector<ModeId> vertices)
    : vertices_(std::move(vertices)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!g.has_vertex(vertices_[i])) {
      throw InputError("walk position " + std::to_string(i) +
                       ": unknown vertex " + std::to_string(vertices_[i]));
    }
    if (i + 1 < vertices_.size() && !g.has_edge(edge(i))) {
      throw InputError("walk position " + std::to_string(i) +
                       ": transition " + to_string(edge(i)) +
                       " is not admissible");
    }
  }
}

std::vector<Edge> Walk::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < length(); ++i) out.push_back(edge(i));
  return out;
}

bool Walk::is_trail() const {
  std::set<Edge> seen;
  for (std::size_t i = 0; i < length(); ++i) {
    if (!seen.insert(edge(i)).second) return false;
  }
  return true;
}

Walk Walk::rotated(std::size_t offset) const {
  if (!closed()) throw std::logic_error("only closed walks can be rotated");
  const std::size_t n = length();
  Walk w;
  if (n == 0) return *this;
  for (std::size_t i = 0; i <= n; ++i) {
    w.vertices_.push_back(vertices_[(offset + i) % n]);
  }
  return w;
}

Walk canonical_rotation(const Walk& closed_walk) {
  Walk best = closed_walk;
  for (std::size_t k = 1; k < closed_walk.length(); ++k) {
    Walk r = closed_walk.rotated(k);
    if (r.vertices() < best.vertices()) best = std::move(r);
  }
  return best;
}

SwitchingSignal SwitchingSignal::explicit_prefix(std::vector<ModeId> values) {
  SwitchingSignal s;
  s.prelude_ = std::move(values);
  return s;
}

SwitchingSignal SwitchingSignal::periodic(std::vector<ModeId> cycle,
                                          std::vector<ModeId> prelude) {
  if (cycle.empty()) throw InputError("periodic signal needs a nonempty cycle");
  SwitchingSignal s;
  s.cycle_ = std::move(cycle);
  s.prelude_ = std::move(prelude);
  return s;
}

SwitchingSignal SwitchingSignal::from_circuit(const Walk& circuit) {
  if (!circuit.closed() || circuit.length() == 0) {
    throw InputError("a periodic signal needs a closed walk of length >= 1");
  }
  std::vector<ModeId> cycle(circuit.vertices().begin(),
                            circuit.vertices().end() - 1);
  return periodic(std::move(cycle));
}

std::size_t SwitchingSignal::available() const {
  return is_periodic() ? std::numeric_limits<std::size_t>::max()
                       : prelude_.size();
}

ModeId SwitchingSignal::at(std::size_t t) const {
  if (t < prelude_.size()) return prelude_[t];
  if (!is_periodic()) {
    throw std::out_of_range("signal prefix has " +
                            std::to_string(prelude_.size()) +
                            " values; requested t = " + std::to_string(t));
  }
  return cycle_[(t - prelude_.size()) % cycle_.size()];
}

std::vector<ModeId> SwitchingSignal::values(std::size_t count) const {
  std::vector<ModeId> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) out.push_back(at(t));
  return out;
}

void SwitchingSignal::validate(const TransitionGraph& g) const {
  const std::size_t n = is_periodic() ? prelude_.size() + cycle_.size()
                                      : prelude_.size();
  for (std::size_t t = 0; t < n; ++t) {
    const ModeId v = at(t);
    if (!g.has_vertex(v)) {
      throw InputError("signal at t = " + std::to_string(t) +
                       ": unknown mode " + std::to_string(v));
    }
    if (t + 1 < n || is_periodic()) {
      const Edge e{v, at(t + 1)};
      if (!g.has_edge(e)) {
        throw InputError("signal at t = " + std::to_string(t) +
                         ": transition " + to_string(e) +
                         " is not admissible");
      }
    }
  }
}

Walk signal_to_walk(const TransitionGraph& g, std::span<const ModeId> prefix) {
  return Walk(g, std::vector<ModeId>(prefix.begin(), prefix.end()));
}

SwitchingSignal walk_to_signal(const Walk& w) {
  return SwitchingSignal::explicit_prefix(w.vertices());
}

WalkStats walk_stats(const Walk& w) {
  WalkStats s;
  for (std::size_t i = 0; i < w.length(); ++i) {
    const Edge e = w.edge(i);
    ++s.rho[e];
    ++s.kappa[e.from];
  }
  s.open_boundary = !w.empty() && !w.closed();
  return s;
}

namespace {

class CircuitSearch {
 public:
  CircuitSearch(const TransitionGraph& g, std::size_t max_len,
                std::size_t max_circuits)
      : g_(g), max_len_(max_len), max_circuits_(max_circuits) {}

  CircuitEnumeration run() {
    std::vector<ModeId> starts = g_.vertices();
    std::sort(starts.begin(), starts.end());
    for (ModeId s : starts) {
      if (result_.truncated) break;
      start_ = s;
      path_.assign(1, s);
      extend(0);
    }
    return std::move(result_);
  }

 private:
  void extend(std::uint64_t used) {
    if (result_.truncated || path_.size() > max_len_) return;
    const ModeId u = path_.back();
    for (std::size_t k : g_.out_edges(u)) {
      const std::uint64_t bit = std::uint64_t{1} << k;
      if (used & bit) continue;
      const ModeId v = g_.edges()[k].to;
      // Canonical rotations start at their smallest vertex.
      if (v < start_) continue;
      path_.push_back(v);
      if (v == start_) emit_if_canonical();
      extend(used | bit);
      path_.pop_back();
      if (result_.truncated) return;
    }
  }

  void emit_if_canonical() {
    Walk w(g_, path_);
    if (canonical_rotation(w) != w) return;
    if (result_.circuits.size() >= max_circuits_) {
      result_.truncated = true;
      return;
    }
    result_.circuits.push_back(std::move(w));
  }

  const TransitionGraph& g_;
  std::size_t max_len_;
  std::size_t max_circuits_;
  ModeId start_{};
  std::vector<ModeId> path_;
  CircuitEnumeration result_;
};

}  // namespace

CircuitEnumeration enumerate_circuits(const TransitionGraph& g,
                                      std::size_t max_len,
                                      std::size_t max_circuits) {
  if (max_len < 1) throw InputError("max_len must be at least 1");
  if (g.num_edges() > 64) {
    throw InputError("circuit enumeration supports at most 64 edges, got " +
                     std::to_string(g.num_edges()));
  }
  return CircuitSearch(g, max_len, max_circuits).run();
}

}  // namespace switchstab
