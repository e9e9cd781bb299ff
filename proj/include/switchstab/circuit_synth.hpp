#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "switchstab/lyap_cert.hpp"
#include "switchstab/simplex.hpp"
#include "switchstab/stability_check.hpp"
#include "switchstab/switch_graph.hpp"

namespace switchstab {

/// Slack that turns the strict ratio condition into the LP row
/// N(f) <= (1 - epsilon) D(f).
inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr std::size_t kDefaultMaxOracleEdges = 20;

/// No stabilizing circuit can exist (for instance, there is no asymptotically
/// stable mode at all).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An integral flow whose components all fail the ratio condition.
class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(const std::string& what, std::vector<double> ratios)
      : std::runtime_error(what), component_ratios(std::move(ratios)) {}
  std::vector<double> component_ratios;
};

/// Flow value per edge of a transition graph, in graph edge order.
struct EdgeFlow {
  std::vector<double> f;

  bool is_integral(double tol = 1e-6) const;
  /// Edges with f > 0.5.
  std::vector<Edge> support(const TransitionGraph& g) const;
  static EdgeFlow indicator(const TransitionGraph& g, const std::vector<Edge>& edges);
};

/// Circuit-feasibility LP over the self-loop-augmented incidence matrix.
///
/// Rows: incidence * f = 0; ratio row sum_e (n_e - (1 - eps) d_e) f_e <= 0;
/// sum_e f_e >= 1; bounds 0 <= f <= 1. Here n_e = ln mu_e plus |ln lambda|
/// of an unstable tail and d_e = |ln lambda| of a stable tail, which counts
/// each activation of a vertex through its outgoing edge. The objective
/// maximizes sum_e f_e.
struct FlowLp {
  TransitionGraph graph;
  IncidenceMatrix incidence;
  Vector numerator;    ///< n_e
  Vector denominator;  ///< d_e
  double epsilon = kDefaultEpsilon;
  LpProblem problem;

  double ratio_row(const EdgeFlow& flow) const;
  /// Equality rows to 1e-8, bounds, ratio row, and cardinality row.
  bool satisfied_by(const EdgeFlow& flow, double tol = 1e-8) const;
};

/// Throws InfeasibleError if no mode is asymptotically stable, InputError for
/// epsilon outside (0, 1) or missing gains.
FlowLp build_lp(const TransitionGraph& g, const GainTable& gains, double epsilon);

/// First asymptotically stable vertex (in vertex order) with a self-loop.
std::optional<ModeId> trivial_case_check(const TransitionGraph& g,
                                         const GainTable& gains);

/// ratio <= 1 - epsilon with a positive denominator: the LP row's
/// acceptance rule applied to a single closed walk.
bool meets_margin(const RatioReport& r, double epsilon);

enum class FeasibilityStatus { Feasible, Infeasible, Undecided };
const char* to_string(FeasibilityStatus s);

struct FeasibilityOptions {
  SimplexOptions simplex;
  std::size_t max_oracle_edges = kDefaultMaxOracleEdges;
  std::size_t max_oracle_circuits = 1'000'000;
};

struct FeasibilityOutcome {
  FeasibilityStatus status = FeasibilityStatus::Undecided;
  std::optional<EdgeFlow> flow;  ///< integral, balanced, zero on self-loops
  std::optional<EdgeFlow> lp_vertex;
  bool lp_vertex_integral = false;
  bool repaired = false;        ///< fractional vertex rounded and repaired
  bool oracle_fallback = false; ///< decided by exhaustive circuit search
  std::string diagnostic;
};

/// Solves the LP to a basic solution. An integral vertex is returned as is
/// when one of its components meets the margin. A fractional vertex is
/// rounded at 0.5 and repaired by circuit decomposition; when that fails the
/// exhaustive circuit search decides (for graphs of at most
/// max_oracle_edges non-loop edges), otherwise the outcome is Undecided.
FeasibilityOutcome solve_feasibility(const FlowLp& lp,
                                     const FeasibilityOptions& opts = {});

/// Eulerian circuit through the given edges (directed Hierholzer). The edges
/// must form one weakly connected, balanced subgraph. The result starts at
/// the tail of the first edge.
Walk hierholzer(const TransitionGraph& g, const std::vector<Edge>& edges);

/// Weakly connected components of an edge set, each in graph edge order,
/// ordered by their first edge.
std::vector<std::vector<Edge>> edge_components(const TransitionGraph& g,
                                               const std::vector<Edge>& edges);

struct CircuitExtraction {
  Walk circuit;  ///< canonical rotation
  RatioReport ratio;
  std::size_t components = 0;
  std::vector<double> component_ratios;
};

/// Circuit over the flow support. A support that splits into several
/// components yields the first component meeting the margin; throws
/// ExtractionError when none does, and InputError for a non-integral or
/// unbalanced flow.
CircuitExtraction extract_circuit(const EdgeFlow& flow, const TransitionGraph& g,
                                  const GainTable& gains, double epsilon);

/// First circuit (in enumeration order) meeting the margin, by exhaustive
/// search over the graph without self-loops.
struct OracleSearch {
  std::optional<Walk> circuit;
  bool truncated = false;
  std::size_t examined = 0;
};
OracleSearch exhaustive_circuit_search(const TransitionGraph& g,
                                       const GainTable& gains, double epsilon,
                                       std::size_t max_circuits = 1'000'000);

struct SynthesisOptions {
  double epsilon = kDefaultEpsilon;
  std::size_t max_oracle_edges = kDefaultMaxOracleEdges;
  bool prefer_trivial_case = true;
  SimplexOptions simplex;
};

struct SynthesisResult {
  std::optional<EdgeFlow> flow;  ///< empty for the trivial case
  Walk circuit;
  RatioReport ratio;
  SwitchingSignal signal;
  std::optional<ModeId> trivial_case;
  bool lp_vertex_integral = false;
  bool repaired = false;
  bool oracle_fallback = false;
  std::size_t components = 0;
};

enum class SynthesisStatus { Success, Infeasible, Undecided };
const char* to_string(SynthesisStatus s);

struct SynthesisOutcome {
  SynthesisStatus status = SynthesisStatus::Undecided;
  std::optional<SynthesisResult> result;
  std::string diagnostic;
};

/// trivial case -> LP -> integral flow -> circuit -> repeated signal. The
/// circuit is re-verified with prefix statistics and the asymptotic check;
/// a failure there throws std::logic_error.
SynthesisOutcome synthesize(const TransitionGraph& g, const GainTable& gains,
                            const SynthesisOptions& opts = {});

/// Certificates (Q = I unless overridden) and gains, then synthesis.
SynthesisOutcome synthesize(const SwitchedSystem& system,
                            const SynthesisOptions& opts = {});

}  // namespace switchstab
