#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "switchstab/types.hpp"

namespace switchstab {

/// Directed graph of admissible mode transitions.
///
/// Vertices and edges keep their construction order; the edge order is the
/// column order of the incidence matrix and of every edge-flow vector.
class TransitionGraph {
 public:
  /// Throws InputError on an empty vertex list, duplicate vertices, an edge
  /// with an undeclared endpoint, or a duplicate edge.
  TransitionGraph(std::vector<ModeId> vertices, std::vector<Edge> edges);

  const std::vector<ModeId>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  bool has_vertex(ModeId v) const { return vertex_pos_.contains(v); }
  bool has_edge(const Edge& e) const { return edge_pos_.contains(e); }
  bool has_self_loop(ModeId v) const { return has_edge({v, v}); }

  std::optional<std::size_t> vertex_index(ModeId v) const;
  std::optional<std::size_t> edge_index(const Edge& e) const;

  /// Indices (into edges()) of the edges leaving `v`, in edge order.
  const std::vector<std::size_t>& out_edges(ModeId v) const;

  std::size_t num_self_loops() const;

  /// Copy of this graph with all self-loops dropped.
  TransitionGraph without_self_loops() const;

 private:
  std::vector<ModeId> vertices_;
  std::vector<Edge> edges_;
  std::map<ModeId, std::size_t> vertex_pos_;
  std::map<Edge, std::size_t> edge_pos_;
  std::vector<std::vector<std::size_t>> out_;
};

/// Vertex-by-edge +1/-1 matrix of a transition graph.
///
/// Rows are the graph vertices in order followed by one auxiliary row per
/// self-loop (in vertex order). A self-loop (j,j) is represented as an edge
/// from j to its auxiliary vertex j'.
struct IncidenceMatrix {
  struct RowLabel {
    ModeId vertex;
    bool auxiliary;
  };

  std::vector<RowLabel> rows;
  std::vector<Edge> columns;
  Eigen::MatrixXi entries;
};

IncidenceMatrix incidence_matrix(const TransitionGraph& g);

/// Walk v0, v1, ..., vL on a transition graph. Length is the number of edges.
class Walk {
 public:
  Walk() = default;

  /// Validates every consecutive pair against `g`; throws InputError naming
  /// the first position whose transition is not an edge.
  Walk(const TransitionGraph& g, std::vector<ModeId> vertices);

  const std::vector<ModeId>& vertices() const { return vertices_; }
  std::size_t length() const {
    return vertices_.empty() ? 0 : vertices_.size() - 1;
  }
  bool empty() const { return vertices_.empty(); }
  bool closed() const {
    return !vertices_.empty() && vertices_.front() == vertices_.back();
  }

  /// Edge traversed at step i, i < length().
  Edge edge(std::size_t i) const { return {vertices_[i], vertices_[i + 1]}; }
  std::vector<Edge> edges() const;

  bool is_trail() const;
  bool is_circuit() const { return closed() && length() >= 1 && is_trail(); }

  /// Closed walk with the same edge cycle, started at step `offset`.
  Walk rotated(std::size_t offset) const;

  friend bool operator==(const Walk&, const Walk&) = default;

 private:
  std::vector<ModeId> vertices_;
};

/// Rotation of a closed walk whose vertex sequence is lexicographically
/// smallest.
Walk canonical_rotation(const Walk& closed_walk);

/// Mode sequence sigma(0), sigma(1), ...
///
/// Either an explicit finite prefix, or a finite prelude followed by a cycle
/// repeated forever. The cycle is stored without the repeated endpoint, so the
/// circuit 3,1,2,1,3,2,3 is the cycle {3,1,2,1,3,2}.
class SwitchingSignal {
 public:
  static SwitchingSignal explicit_prefix(std::vector<ModeId> values);
  static SwitchingSignal periodic(std::vector<ModeId> cycle,
                                  std::vector<ModeId> prelude = {});
  /// Signal generated by repeating a circuit.
  static SwitchingSignal from_circuit(const Walk& circuit);

  bool is_periodic() const { return !cycle_.empty(); }
  const std::vector<ModeId>& prelude() const { return prelude_; }
  const std::vector<ModeId>& cycle() const { return cycle_; }
  std::size_t period() const { return cycle_.size(); }

  /// Number of defined values; unbounded (SIZE_MAX) for periodic signals.
  std::size_t available() const;

  /// sigma(t); throws std::out_of_range past the end of an explicit prefix.
  ModeId at(std::size_t t) const;

  /// sigma(0..count-1).
  std::vector<ModeId> values(std::size_t count) const;

  /// Throws InputError naming the first t whose value is not a vertex or
  /// whose transition sigma(t) -> sigma(t+1) is not an edge. Periodic signals
  /// are checked including the wrap-around transition.
  void validate(const TransitionGraph& g) const;

  friend bool operator==(const SwitchingSignal&,
                         const SwitchingSignal&) = default;

 private:
  std::vector<ModeId> prelude_;
  std::vector<ModeId> cycle_;
};

/// sigma(0..T) -> walk sigma(0),(sigma(0),sigma(1)),...,sigma(T).
Walk signal_to_walk(const TransitionGraph& g, std::span<const ModeId> prefix);

/// Walk -> explicit signal with sigma(t) = v_t.
SwitchingSignal walk_to_signal(const Walk& w);

struct WalkStats {
  std::map<Edge, long> rho;     ///< traversals per edge
  std::map<ModeId, long> kappa; ///< outgoing traversals per vertex
  /// Set for open walks: the final vertex has no outgoing edge, so its
  /// activation count is one short of its visit count.
  bool open_boundary = false;
};

WalkStats walk_stats(const Walk& w);

struct CircuitEnumeration {
  std::vector<Walk> circuits;
  bool truncated = false;
};

/// All circuits (closed trails) of length <= max_len, each in canonical
/// rotation, one per rotation class. Stops and sets `truncated` after
/// `max_circuits` results. Requires at most 64 edges.
CircuitEnumeration enumerate_circuits(const TransitionGraph& g,
                                      std::size_t max_len,
                                      std::size_t max_circuits = 1'000'000);

}  // namespace switchstab
