#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "switchstab/circuit_synth.hpp"

using namespace switchstab;
using switchstab::testing::planar_graph;
using switchstab::testing::planar_system;
using switchstab::testing::two_cycle_gains;
using switchstab::testing::two_cycle_graph;

namespace {

GainTable planar_gains() {
  const auto sys = planar_system();
  return build_gain_table(sys.graph(), certify_all(sys));
}

std::set<Edge> as_set(const std::vector<Edge>& v) { return {v.begin(), v.end()}; }

const std::set<Edge> kPublishedSupport{{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}};

}  // namespace

TEST_SUITE("circuit_synth") {

TEST_CASE("LP layout") {
  const FlowLp lp = build_lp(planar_graph(), planar_gains(), 1e-3);
  // 5 vertex rows + 3 auxiliary rows + ratio row + cardinality row.
  CHECK(lp.problem.a.rows() == 10);
  CHECK(lp.problem.a.cols() == 23);
  // d_e is |ln lambda| of a stable tail; n_e adds |ln lambda| of an unstable tail.
  const auto gains = planar_gains();
  const auto k12 = static_cast<Eigen::Index>(*lp.graph.edge_index({1, 2}));
  CHECK(lp.denominator(k12) == doctest::Approx(-gains.log_lambda(1)));
  CHECK(lp.numerator(k12) == doctest::Approx(gains.log_mu({1, 2})));
  const auto k41 = static_cast<Eigen::Index>(*lp.graph.edge_index({4, 1}));
  CHECK(lp.denominator(k41) == 0.0);
  CHECK(lp.numerator(k41) == doctest::Approx(gains.log_mu({4, 1}) + gains.log_lambda(4)));
  const auto k33 = static_cast<Eigen::Index>(*lp.graph.edge_index({3, 3}));
  CHECK(lp.numerator(k33) == 0.0);
  CHECK(lp.denominator(k33) == 0.0);
}

TEST_CASE("published flow is LP-feasible") {
  const FlowLp lp = build_lp(planar_graph(), planar_gains(), 1e-3);
  const std::vector<double> published{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0,
                                      0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(lp.satisfied_by(EdgeFlow{published}));
  CHECK(as_set(EdgeFlow{published}.support(lp.graph)) == kPublishedSupport);
  // With a one percent margin the published circuit (ratio 0.99695) is cut off.
  const FlowLp strict = build_lp(planar_graph(), planar_gains(), 0.01);
  CHECK_FALSE(strict.satisfied_by(EdgeFlow{published}));
}

TEST_CASE("feasibility on the planar system") {
  const FlowLp lp = build_lp(planar_graph(), planar_gains(), 1e-3);
  const FeasibilityOutcome out = solve_feasibility(lp);
  REQUIRE(out.status == FeasibilityStatus::Feasible);
  REQUIRE(out.flow);
  CHECK(out.flow->is_integral());
  CHECK(as_set(out.flow->support(lp.graph)) == kPublishedSupport);
  CHECK(lp.satisfied_by(*out.flow));
  CHECK_FALSE(out.oracle_fallback);
}

TEST_CASE("synthesis on the planar system") {
  const SynthesisOutcome out = synthesize(planar_system());
  REQUIRE(out.status == SynthesisStatus::Success);
  const SynthesisResult& r = *out.result;
  CHECK(r.circuit.vertices() == std::vector<ModeId>{1, 2, 1, 3, 2, 3, 1});
  CHECK(r.signal.cycle() == std::vector<ModeId>{1, 2, 1, 3, 2, 3});
  CHECK(std::abs(r.ratio.ratio - 0.99) <= 0.01);
  CHECK_FALSE(r.trivial_case);
  // The published circuit 3,1,2,1,3,2,3 is a rotation of ours.
  const Walk published(planar_graph(), {3, 1, 2, 1, 3, 2, 3});
  CHECK(canonical_rotation(published) == r.circuit);
}

TEST_CASE("infeasible two-mode alternation") {
  const SynthesisOutcome out = synthesize(two_cycle_graph(), two_cycle_gains());
  CHECK(out.status == SynthesisStatus::Infeasible);
  CHECK_FALSE(out.result);
}

TEST_CASE("no stable mode") {
  const TransitionGraph g({1, 2}, {{1, 2}, {2, 1}});
  const auto gains = GainTable::from_logs(g, {{1, 0.1}, {2, 0.0}}, {{{1, 2}, -3}, {{2, 1}, -3}});
  CHECK_THROWS_AS(build_lp(g, gains, 1e-3), InfeasibleError);
  CHECK(synthesize(g, gains).status == SynthesisStatus::Infeasible);
}

TEST_CASE("epsilon must lie in (0, 1)") {
  for (double eps : {0.0, 1.0, -0.1, 2.0}) {
    CHECK_THROWS_AS(build_lp(planar_graph(), planar_gains(), eps), InputError);
  }
}

TEST_CASE("trivial case") {
  const TransitionGraph g({1, 2}, {{1, 2}, {2, 1}, {2, 2}});
  const auto gains = GainTable::from_logs(g, {{1, 0.4}, {2, -0.1}}, {{{1, 2}, 5}, {{2, 1}, 5}});
  CHECK(trivial_case_check(g, gains) == std::optional<ModeId>(2));
  const SynthesisOutcome out = synthesize(g, gains);
  REQUIRE(out.status == SynthesisStatus::Success);
  CHECK(out.result->trivial_case == std::optional<ModeId>(2));
  CHECK(out.result->signal.cycle() == std::vector<ModeId>{2});
  CHECK_FALSE(out.result->flow);
  SynthesisOptions opts;
  opts.prefer_trivial_case = false;
  // The LP ignores self-loops and the 2-cycle is hopeless.
  CHECK(synthesize(g, gains, opts).status == SynthesisStatus::Infeasible);
}

TEST_CASE("hierholzer") {
  const auto g = planar_graph();
  const Walk w = hierholzer(g, {{1, 2}, {2, 1}, {1, 3}, {3, 1}});
  CHECK(w.is_circuit());
  CHECK(w.length() == 4);
  CHECK(w.vertices().front() == 1);
  CHECK_THROWS_AS(hierholzer(g, {{1, 2}}), InputError);
  CHECK_THROWS_AS(hierholzer(g, {{1, 2}, {2, 1}, {4, 5}, {5, 4}}), InputError);
  CHECK_THROWS_AS(hierholzer(g, {}), InputError);
}

TEST_CASE("edge components") {
  const auto g = planar_graph();
  const auto comps = edge_components(g, {{4, 5}, {1, 2}, {5, 4}, {2, 1}});
  REQUIRE(comps.size() == 2);
  CHECK(comps[0] == std::vector<Edge>{{1, 2}, {2, 1}});
  CHECK(comps[1] == std::vector<Edge>{{4, 5}, {5, 4}});
}

TEST_CASE("extraction from a disconnected support") {
  const auto g = planar_graph();
  const auto gains = planar_gains();
  // The 4-5 cycle has no stable mode; the 1-2-1-3-2-3 part is good.
  const EdgeFlow flow = EdgeFlow::indicator(
      g, {{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}, {4, 5}, {5, 4}});
  const CircuitExtraction ext = extract_circuit(flow, g, gains, 1e-3);
  CHECK(ext.components == 2);
  CHECK(ext.circuit.vertices() == std::vector<ModeId>{1, 2, 1, 3, 2, 3, 1});
  REQUIRE(ext.component_ratios.size() == 2);
  CHECK(std::isinf(ext.component_ratios[1]));

  const EdgeFlow bad = EdgeFlow::indicator(g, {{4, 5}, {5, 4}});
  CHECK_THROWS_AS(extract_circuit(bad, g, gains, 1e-3), ExtractionError);
  CHECK_THROWS_AS(extract_circuit(EdgeFlow::indicator(g, {{1, 2}}), g, gains, 1e-3), InputError);
  EdgeFlow half = EdgeFlow::indicator(g, {{1, 2}, {2, 1}});
  half.f[0] = 0.5;
  CHECK_THROWS_AS(extract_circuit(half, g, gains, 1e-3), InputError);
}

TEST_CASE("exhaustive search") {
  const OracleSearch planar = exhaustive_circuit_search(planar_graph(), planar_gains(), 1e-3);
  REQUIRE(planar.circuit);
  CHECK(planar.circuit->is_circuit());
  CHECK(meets_margin(theorem1_ratio(closed_walk_stats(*planar.circuit), planar_gains()), 1e-3));
  const OracleSearch none = exhaustive_circuit_search(two_cycle_graph(), two_cycle_gains(), 1e-3);
  CHECK_FALSE(none.circuit);
  CHECK(none.examined == 1);
}

TEST_CASE("relaxation satisfied only by a flow without stable time") {
  // A marginal 3-4 cycle with negative gains satisfies the ratio row with a
  // zero denominator; the only circuit through a stable mode is 1-2-1, whose
  // ratio is 2. No circuit meets the margin.
  const TransitionGraph g({1, 2, 3, 4}, {{1, 2}, {2, 1}, {3, 4}, {4, 3}});
  const auto gains = GainTable::from_logs(
      g, {{1, -0.5}, {2, -0.5}, {3, 0.0}, {4, 0.0}},
      {{{1, 2}, 1.0}, {{2, 1}, 1.0}, {{3, 4}, -5.0}, {{4, 3}, -5.0}});
  const FlowLp lp = build_lp(g, gains, 1e-3);

  FeasibilityOptions no_oracle;
  no_oracle.max_oracle_edges = 0;
  const FeasibilityOutcome undecided = solve_feasibility(lp, no_oracle);
  CHECK(undecided.status == FeasibilityStatus::Undecided);
  CHECK_FALSE(undecided.oracle_fallback);

  const FeasibilityOutcome decided = solve_feasibility(lp);
  CHECK(decided.status == FeasibilityStatus::Infeasible);
  CHECK(decided.oracle_fallback);

  SynthesisOptions sopts;
  sopts.max_oracle_edges = 0;
  CHECK(synthesize(g, gains, sopts).status == SynthesisStatus::Undecided);
  CHECK(synthesize(g, gains).status == SynthesisStatus::Infeasible);
}

}  // TEST_SUITE

TEST_SUITE("circuit_synth.invariants") {

TEST_CASE("LP agrees with exhaustive circuit enumeration") {
  std::mt19937_64 rng(2024);
  const double eps = 1e-3;
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = switchstab::testing::random_instance(rng, 2 + trial % 4, 12);
    CAPTURE(trial);
    bool any_good = false;
    for (const Walk& c : enumerate_circuits(inst.graph, inst.graph.num_edges()).circuits) {
      // Augmented incidence forces zero flow on self-loops.
      const auto& ce = c.edges();
      if (std::any_of(ce.begin(), ce.end(), [](const Edge& e) { return e.is_self_loop(); })) continue;
      any_good = any_good || meets_margin(theorem1_ratio(closed_walk_stats(c), inst.gains), eps);
    }
    bool has_stable = false;
    for (ModeId v : inst.graph.vertices()) {
      has_stable = has_stable || inst.gains.cls(v) == StabilityClass::AsymptoticallyStable;
    }
    if (!has_stable) {
      CHECK_FALSE(any_good);
      continue;
    }
    const FlowLp lp = build_lp(inst.graph, inst.gains, eps);
    const FeasibilityOutcome out = solve_feasibility(lp);
    CHECK((out.status == FeasibilityStatus::Feasible) == any_good);
    if (!out.flow) continue;
    const EdgeFlow& f = *out.flow;
    // Conservation: balanced support, nothing on self-loops.
    const IncidenceMatrix inc = incidence_matrix(inst.graph);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.f.data(), static_cast<Eigen::Index>(f.f.size()));
    CHECK((inc.entries.cast<double>() * x).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t k = 0; k < f.f.size(); ++k) {
      if (inst.graph.edges()[k].is_self_loop()) CHECK(f.f[k] == 0.0);
    }
    if (out.lp_vertex) {
      for (std::size_t k = 0; k < f.f.size(); ++k) {
        if (inst.graph.edges()[k].is_self_loop()) CHECK(std::abs(out.lp_vertex->f[k]) <= 1e-9);
      }
    }
    // Extraction: closed trail over the support (or one of its components),
    // whose ratio matches the LP coefficients.
    const CircuitExtraction ext = extract_circuit(f, inst.graph, inst.gains, eps);
    CHECK(ext.circuit.is_circuit());
    std::set<Edge> support = as_set(f.support(inst.graph));
    for (const Edge& e : ext.circuit.edges()) CHECK(support.contains(e));
    if (ext.components == 1) CHECK(as_set(ext.circuit.edges()) == support);
    double num = 0.0;
    double den = 0.0;
    for (const Edge& e : ext.circuit.edges()) {
      const auto k = static_cast<Eigen::Index>(*inst.graph.edge_index(e));
      num += lp.numerator(k);
      den += lp.denominator(k);
    }
    CHECK(ext.ratio.numerator == doctest::Approx(num).epsilon(1e-9));
    CHECK(ext.ratio.denominator == doctest::Approx(den).epsilon(1e-9));
  }
}

TEST_CASE("synthesized circuits keep their ratio when repeated") {
  std::mt19937_64 rng(77);
  int successes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = switchstab::testing::random_instance(rng, 3 + trial % 3, 12);
    const SynthesisOutcome out = synthesize(inst.graph, inst.gains);
    if (out.status != SynthesisStatus::Success) continue;
    ++successes;
    const auto& r = *out.result;
    for (std::size_t k = 1; k <= 5; ++k) {
      const RatioReport rk =
          theorem1_ratio(prefix_stats(r.signal, k * r.circuit.length()), inst.gains);
      if (r.trivial_case) {
        CHECK(rk.ratio == 0.0);
      } else {
        CHECK(rk.ratio == doctest::Approx(r.ratio.ratio).epsilon(1e-12));
        CHECK(rk.ratio <= 1.0 - 1e-3 + 1e-12);
      }
    }
  }
  CHECK(successes > 20);
}

}  // TEST_SUITE
