// Acceptance checks, one line per criterion. Usage:
//   switchstab_acceptance [path-to-unit-test-binary]
// The unit test binary runs the invariant groups of criterion 7.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "switchstab/circuit_synth.hpp"
#include "switchstab/lyap_cert.hpp"
#include "switchstab/sim_engine.hpp"
#include "switchstab/stability_check.hpp"

using namespace switchstab;
namespace fx = switchstab::testing;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << ": "
            << detail << '\n';
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void criterion1() {
  const auto start = std::chrono::steady_clock::now();
  const auto certs = certify_all(fx::planar_system());
  // ||A4||^2 = lambda_max([[4, 1], [1, 0.5]]) = 2.25 + sqrt(1.75^2 + 1).
  const double norm4 = std::sqrt(2.25 + std::sqrt(1.75 * 1.75 + 1.0));
  const double lam4 = 1.0 + 2.0 * norm4;
  const Matrix& p1 = certs[0].p;
  bool ok = std::abs(certs[0].lambda - 0.8269) <= 1e-3 &&
            std::abs(certs[1].lambda - 0.5026) <= 1e-3 && certs[2].lambda == 1.0 &&
            std::abs(certs[3].lambda - 5.1306) <= 1e-3 &&
            std::abs(certs[3].lambda - lam4) <= 1e-12 &&
            std::abs(certs[4].lambda - 3.2000) <= 1e-3 &&
            std::abs(p1(0, 0) - 4.7545) <= 1e-3 && std::abs(p1(0, 1) + 0.5804) <= 1e-3 &&
            std::abs(p1(1, 0) + 0.5804) <= 1e-3 && std::abs(p1(1, 1) - 5.4464) <= 1e-3;
  report(1, "certificate reproduction", ok,
         "lambda = (" + fmt(certs[0].lambda) + ", " + fmt(certs[1].lambda) + ", " +
             fmt(certs[2].lambda) + ", " + fmt(certs[3].lambda) + ", " + fmt(certs[4].lambda) +
             "), P1 = [" + fmt(p1(0, 0), 5) + " " + fmt(p1(0, 1), 4) + "; " + fmt(p1(1, 0), 4) +
             " " + fmt(p1(1, 1), 5) + "], " + fmt(elapsed_ms(start), 3) + " ms");
}

void criterion2() {
  const auto start = std::chrono::steady_clock::now();
  const auto sys = fx::planar_system();
  const GainTable gains = build_gain_table(sys.graph(), certify_all(sys));
  const double m31 = gains.mu({3, 1});
  const double m21 = gains.mu({2, 1});
  const double m12 = gains.mu({1, 2});
  const double m32 = gains.mu({3, 2});
  bool ok = std::abs(m31 - 5.7761) <= 5e-3 && std::abs(m21 - 5.2823) <= 5e-3 &&
            std::abs(m12 - 0.4185) <= 5e-3 && std::abs(m32 - 2.0103) <= 5e-3;
  for (const Edge& e : sys.graph().edges()) {
    if (e.is_self_loop()) ok = ok && std::abs(gains.mu(e) - 1.0) <= 1e-12;
  }
  report(2, "gain reproduction", ok,
         "mu31 = " + fmt(m31) + ", mu21 = " + fmt(m21) + ", mu12 = " + fmt(m12) +
             ", mu32 = " + fmt(m32) + ", self-loops = 1, " + fmt(elapsed_ms(start), 3) + " ms");
}

void criterion3() {
  const auto start = std::chrono::steady_clock::now();
  const auto sys = fx::planar_system();
  const GainTable gains = build_gain_table(sys.graph(), certify_all(sys));
  const FlowLp lp = build_lp(sys.graph(), gains, kDefaultEpsilon);
  const FeasibilityOutcome feas = solve_feasibility(lp);
  const SynthesisOutcome out = synthesize(sys.graph(), gains);
  const double ms = elapsed_ms(start);
  const std::set<Edge> expected{{1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}};
  bool ok = feas.status == FeasibilityStatus::Feasible && feas.flow &&
            feas.flow->is_integral() && out.status == SynthesisStatus::Success && ms < 1000.0;
  std::string detail = std::string("LP ") + to_string(feas.status);
  if (ok) {
    const auto support = feas.flow->support(lp.graph);
    const std::set<Edge> got(support.begin(), support.end());
    const std::vector<double> published{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0,
                                        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    const double ratio = out.result->ratio.ratio;
    ok = got == expected && feas.flow->f == published && std::abs(ratio - 0.99) <= 0.01;
    std::ostringstream circ;
    for (ModeId v : out.result->circuit.vertices()) circ << v << ' ';
    detail += ", support " + std::string(got == expected ? "matches" : "differs") +
              " the published f, circuit " + circ.str() + "ratio " + fmt(ratio);
  }
  report(3, "synthesis reproduction", ok, detail + ", " + fmt(ms, 3) + " ms");
}

void criterion4() {
  const GainTable gains = fx::two_cycle_gains();
  const SynthesisOutcome out = synthesize(fx::two_cycle_graph(), gains);
  const AsymptoticVerdict v = asymptotic_check(SwitchingSignal::periodic({1, 2}), gains);
  // Exact arithmetic: (-1.5 + 1.8 + 1.6) / 0.2.
  const double ratio = v.period.ratio;
  const bool ok = out.status == SynthesisStatus::Infeasible && std::abs(ratio - 9.5) <= 1e-9 &&
                  !v.condition13;
  report(4, "negative case", ok,
         std::string("synthesis ") + to_string(out.status) + ", alternating period ratio " +
             fmt(ratio, 12));
}

void criterion5() {
  const auto sys = fx::planar_system();
  const auto certs = certify_all(sys);
  const GainTable gains = build_gain_table(sys.graph(), certs);
  const SynthesisOutcome out = synthesize(sys.graph(), gains);
  bool ok = out.status == SynthesisStatus::Success;
  std::string detail;
  if (ok) {
    for (const auto& x : {std::pair{-1000.0, 1000.0}, std::pair{1200.0, -500.0}}) {
      Vector x0(2);
      x0 << x.first, x.second;
      const Trajectory t = simulate(sys, out.result->signal, x0, 120, certs);
      const double rel = t.norms[120] / t.norms[0];
      const EnvelopeCheck env = verify_envelope(t, certs, gains, out.result->signal, 1e-6);
      ok = ok && rel < 1e-6 && env.ok;
      detail += "x0 = (" + fmt(x.first) + ", " + fmt(x.second) + "): |x(120)|/|x0| = " +
                fmt(rel, 3) + ", envelope " + (env.ok ? "holds" : "violated") + "; ";
    }
  }
  report(5, "trajectory convergence", ok, detail);
}

void criterion6() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  const double eps = kDefaultEpsilon;
  int graphs = 0;
  int feasible = 0;
  int disagreements = 0;
  int fallbacks = 0;
  int lp_decided = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto inst = fx::random_instance(rng, 2 + trial % 5, 12);
    ++graphs;
    const fx::SubsetOracle oracle =
        fx::subset_oracle(inst.graph.edges(), inst.log_lambda, inst.log_mu, eps);
    const SynthesisOutcome out = synthesize(inst.graph, inst.gains);
    const bool success = out.status == SynthesisStatus::Success;
    if (success != oracle.found || out.status == SynthesisStatus::Undecided) ++disagreements;
    if (oracle.found) ++feasible;
    if (success && out.result->oracle_fallback) ++fallbacks;
    if (success && !out.result->oracle_fallback && !out.result->trivial_case) ++lp_decided;
  }
  const double ms = elapsed_ms(start);
  report(6, "oracle equivalence", disagreements == 0 && graphs >= 200 && ms < 30000.0,
         std::to_string(graphs) + " graphs, " + std::to_string(feasible) + " feasible, " +
             std::to_string(disagreements) + " disagreements, " + std::to_string(lp_decided) +
             " decided by the LP, " + std::to_string(fallbacks) + " by exhaustive fallback, " +
             fmt(ms / 1000.0, 3) + " s");
}

void criterion7(const char* unit_tests) {
  if (unit_tests == nullptr) {
    report(7, "invariant suites", false, "unit test binary not given");
    return;
  }
  const std::vector<std::string> groups{"lyap_cert.invariants", "switch_graph.invariants",
                                        "stability_check.invariants", "circuit_synth.invariants",
                                        "sim_engine.invariants", "system_io.invariants"};
  bool ok = true;
  std::string detail;
  for (const std::string& g : groups) {
    const std::string cmd = std::string("\"") + unit_tests + "\" -ts=" + g + " >/dev/null 2>&1";
    const bool pass = std::system(cmd.c_str()) == 0;
    ok = ok && pass;
    detail += g + (pass ? " ok" : " FAILED") + "; ";
  }
  report(7, "invariant suites", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const auto guarded = [](auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      std::cout << "FAIL  unexpected exception: " << e.what() << '\n';
      ++failures;
    }
  };
  guarded(criterion1);
  guarded(criterion2);
  guarded(criterion3);
  guarded(criterion4);
  guarded(criterion5);
  guarded(criterion6);
  guarded([&] { criterion7(argc > 1 ? argv[1] : nullptr); });
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " failed") << '\n';
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
