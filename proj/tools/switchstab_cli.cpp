#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchstab/circuit_synth.hpp"
#include "switchstab/lyap_cert.hpp"
#include "switchstab/sim_engine.hpp"
#include "switchstab/stability_check.hpp"
#include "switchstab/system_io.hpp"

namespace ss = switchstab;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kInfeasible = 3,
  kUndecided = 4,
};

struct Options {
  std::string system_path;
  std::string signal_path;
  std::string report_path;
  std::string signal_out;
  std::string output_path;
  std::optional<double> epsilon;
  std::size_t max_oracle_edges = ss::kDefaultMaxOracleEdges;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> stride;
  std::string x0;
  std::vector<std::string> q_overrides;
  std::uint64_t seed = 1;
  std::size_t samples = 0;
  std::size_t max_circuits = 1'000'000;
  bool json = false;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ss::InputError("cannot write " + path);
  out << text;
}

// "ID:[[...],[...]]"
void apply_q_overrides(ss::SystemDescription& d, const std::vector<std::string>& specs) {
  for (const std::string& spec : specs) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw ss::InputError("--q-matrix expects ID:[[row],...], got \"" + spec + "\"");
    }
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(spec.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw ss::InputError("--q-matrix: bad mode id in \"" + spec + "\"");
    }
    ss::Json j;
    try {
      j = ss::Json::parse(spec.substr(colon + 1));
    } catch (const ss::Json::parse_error&) {
      throw ss::InputError("--q-matrix: malformed matrix in \"" + spec + "\"");
    }
    d.q[id] = ss::matrix_from_json(j, "--q-matrix " + std::to_string(id));
  }
}

ss::SystemDescription load_system(const Options& o) {
  ss::SystemDescription d = ss::read_system_file(o.system_path);
  apply_q_overrides(d, o.q_overrides);
  return d;
}

double epsilon_of(const Options& o, const ss::SystemDescription& d) {
  return o.epsilon.value_or(d.epsilon.value_or(ss::kDefaultEpsilon));
}

std::vector<ss::SubsystemCertificate> certify_if_possible(const ss::SystemDescription& d) {
  if (!d.has_matrices()) return {};
  return ss::certify_all(d.system());
}

Eigen::VectorXd parse_x0(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw ss::InputError("--x0: cannot parse \"" + item + "\" as a real number");
    }
  }
  if (values.empty()) throw ss::InputError("--x0 is empty");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void print_gain_table(std::ostream& out, const ss::TransitionGraph& g,
                      const ss::GainTable& gains,
                      std::span<const ss::SubsystemCertificate> certs) {
  out << "mode  class                  lambda          ln lambda\n";
  for (int j : g.vertices()) {
    out << std::left << std::setw(6) << j << std::setw(23) << ss::to_string(gains.cls(j))
        << std::setw(16) << num(gains.lambda(j)) << num(gains.log_lambda(j)) << '\n';
  }
  for (const auto& c : certs) {
    out << "P" << c.id << " =";
    for (Eigen::Index i = 0; i < c.p.rows(); ++i) {
      out << (i ? "; " : " [");
      for (Eigen::Index k = 0; k < c.p.cols(); ++k) out << (k ? " " : "") << num(c.p(i, k));
    }
    out << "]\n";
  }
  out << "\nedge      mu              ln mu\n";
  for (const ss::Edge& e : g.edges()) {
    out << std::left << std::setw(10) << ss::to_string(e) << std::setw(16)
        << num(gains.mu(e)) << num(gains.log_mu(e)) << '\n';
  }
  out << std::right;
}

int cmd_certify(const Options& o) {
  const ss::SystemDescription d = load_system(o);
  const auto certs = certify_if_possible(d);
  const ss::GainTable gains = ss::gains_for(d, certs);
  ss::Json report = {{"certificates", ss::certificates_to_json(certs)},
                     {"gains", ss::gains_to_json(d.graph(), gains)}};

  std::optional<ss::SampledCheck> sampled;
  if (o.samples > 0 && d.has_matrices()) {
    sampled = ss::sample_certificates(d.system(), certs, ss::build_gain_table(d.graph(), certs),
                                      o.samples, o.seed);
    ss::Json sj = {{"samples", sampled->samples}, {"seed", sampled->seed},
                   {"ok", sampled->ok()}};
    for (const auto& [id, r] : sampled->decay_ratio) sj["decay_ratio"].push_back({id, r});
    for (const auto& [e, r] : sampled->gain_ratio) {
      sj["gain_ratio"].push_back({e.from, e.to, r});
    }
    report["sampled_check"] = std::move(sj);
  }

  if (o.json) {
    std::cout << report.dump(2) << '\n';
  } else {
    print_gain_table(std::cout, d.graph(), gains, certs);
    if (sampled) {
      std::cout << "\nsampled check (" << sampled->samples << " states, seed "
                << sampled->seed << "): " << (sampled->ok() ? "ok" : "FAILED") << '\n';
    }
  }
  if (!o.report_path.empty()) write_file(o.report_path, report.dump(2) + "\n");
  if (sampled && !sampled->ok()) {
    std::cerr << "error: sampled states violate a certificate inequality\n";
    return kFailure;
  }
  return kOk;
}

int cmd_synthesize(const Options& o) {
  const ss::SystemDescription d = load_system(o);
  const auto certs = certify_if_possible(d);
  const ss::GainTable gains = ss::gains_for(d, certs);
  ss::SynthesisOptions opts;
  opts.epsilon = epsilon_of(o, d);
  opts.max_oracle_edges = o.max_oracle_edges;
  const ss::SynthesisOutcome outcome = ss::synthesize(d.graph(), gains, opts);
  const ss::Json report = ss::synthesis_report(d, certs, gains, outcome, opts.epsilon);
  if (!o.report_path.empty()) write_file(o.report_path, report.dump(2) + "\n");

  switch (outcome.status) {
    case ss::SynthesisStatus::Infeasible:
      std::cerr << "infeasible: " << outcome.diagnostic << '\n';
      return kInfeasible;
    case ss::SynthesisStatus::Undecided:
      std::cerr << "undecided: " << outcome.diagnostic << '\n';
      return kUndecided;
    case ss::SynthesisStatus::Success:
      break;
  }
  const ss::SynthesisResult& r = *outcome.result;
  const std::string signal = ss::format_signal(r.signal);
  if (!o.signal_out.empty()) write_file(o.signal_out, signal);
  if (o.json) {
    std::cout << report.dump(2) << '\n';
    return kOk;
  }
  std::cout << "circuit:";
  for (int v : r.circuit.vertices()) std::cout << ' ' << v;
  std::cout << "\nratio: " << num(r.ratio.ratio) << " (" << num(r.ratio.numerator) << " / "
            << num(r.ratio.denominator) << ")\n";
  if (r.trivial_case) std::cout << "trivial case: mode " << *r.trivial_case << " self-loop\n";
  if (r.oracle_fallback) std::cout << "decided by exhaustive circuit search\n";
  if (o.signal_out.empty()) std::cout << signal;
  return kOk;
}

int cmd_check(const Options& o) {
  const ss::SystemDescription d = load_system(o);
  const ss::SwitchingSignal sigma = ss::read_signal_file(o.signal_path);
  const ss::TransitionGraph g = d.graph();
  sigma.validate(g);
  const auto certs = d.gains_override ? std::vector<ss::SubsystemCertificate>{}
                                      : certify_if_possible(d);
  const ss::GainTable gains = ss::gains_for(d, certs);

  std::size_t horizon = 0;
  if (o.horizon) {
    horizon = *o.horizon;
  } else {
    horizon = sigma.is_periodic() ? 100 * sigma.period() : sigma.available() - 1;
  }
  if (horizon == 0) throw ss::InputError("--horizon must be at least 1");
  if (sigma.available() <= horizon) {
    throw ss::InputError("signal holds " + std::to_string(sigma.available()) +
                         " values; horizon " + std::to_string(horizon) + " needs " +
                         std::to_string(horizon + 1));
  }
  std::size_t stride = o.stride.value_or(sigma.is_periodic() ? sigma.period() : horizon);
  if (stride == 0) throw ss::InputError("--stride must be at least 1");

  ss::Json rows = ss::Json::array();
  if (!o.json) std::cout << "t,switches,nu,numerator,denominator,ratio,g1,g2\n";
  const std::vector<ss::GValues> gv = ss::g_series(sigma, horizon, gains);
  for (std::size_t t = stride; t <= horizon; t += stride) {
    const ss::PrefixStats st = ss::prefix_stats(sigma, t);
    const ss::RatioReport r = ss::theorem1_ratio(st, gains);
    if (o.json) {
      ss::Json row = {{"t", t}, {"switches", st.n_switches}, {"nu", st.nu}};
      row["ratio"] = ss::ratio_to_json(r);
      row["g1"] = gv[t].g1;
      row["g2"] = gv[t].g2;
      rows.push_back(std::move(row));
    } else {
      std::cout << t << ',' << st.n_switches << ',' << num(st.nu) << ','
                << num(r.numerator) << ',' << num(r.denominator) << ','
                << (std::isfinite(r.ratio) ? num(r.ratio) : "inf") << ','
                << num(gv[t].g1) << ',' << num(gv[t].g2) << '\n';
    }
  }

  ss::Json report = {{"horizon", horizon}, {"prefix", std::move(rows)}};
  if (sigma.is_periodic()) {
    const ss::AsymptoticVerdict v = ss::asymptotic_check(sigma, gains);
    report["asymptotic"] = {{"period_ratio", ss::ratio_to_json(v.period)},
                            {"condition12", v.condition12},
                            {"condition13", v.condition13},
                            {"trivial_case", v.trivial_case}};
    if (!o.json) {
      std::cout << "# period ratio: "
                << (std::isfinite(v.period.ratio) ? num(v.period.ratio) : "inf")
                << "\n# condition 12 (switching frequency): "
                << (v.condition12 ? "holds" : "fails")
                << "\n# condition 13 (ratio < 1): " << (v.condition13 ? "holds" : "fails")
                << '\n';
      if (v.trivial_case) std::cout << "# trivial case: constant stable mode\n";
    }
  }
  if (o.json) std::cout << report.dump(2) << '\n';
  if (!o.report_path.empty()) write_file(o.report_path, report.dump(2) + "\n");
  return kOk;
}

int cmd_simulate(const Options& o) {
  const ss::SystemDescription d = load_system(o);
  const ss::SwitchedSystem system = d.system();
  const ss::SwitchingSignal sigma = ss::read_signal_file(o.signal_path);
  const Eigen::VectorXd x0 = parse_x0(o.x0);
  if (x0.size() != system.dim()) {
    throw ss::InputError("--x0 has " + std::to_string(x0.size()) +
                         " entries, the system dimension is " + std::to_string(system.dim()));
  }
  std::size_t horizon = 0;
  if (o.horizon) {
    horizon = *o.horizon;
  } else if (sigma.is_periodic()) {
    horizon = 120;
  } else {
    horizon = sigma.available() - 1;
  }
  const auto certs = ss::certify_all(system);
  const ss::Trajectory traj = ss::simulate(system, sigma, x0, horizon, certs);

  std::ofstream file;
  if (!o.output_path.empty()) {
    file.open(o.output_path);
    if (!file) throw ss::InputError("cannot write " + o.output_path);
  }
  std::ostream& out = o.output_path.empty() ? std::cout : file;
  out << "t,mode";
  for (Eigen::Index i = 0; i < x0.size(); ++i) out << ",x_" << i + 1;
  out << ",norm,lyap,envelope\n";
  for (std::size_t t = 0; t <= horizon; ++t) {
    out << t << ',' << traj.modes[t];
    for (Eigen::Index i = 0; i < x0.size(); ++i) out << ',' << full(traj.states[t](i));
    out << ',' << full(traj.norms[t]) << ',' << full(traj.lyap[t]) << ','
        << full(traj.envelope[t]) << '\n';
  }
  return kOk;
}

int cmd_oracle(const Options& o) {
  const ss::SystemDescription d = load_system(o);
  const ss::TransitionGraph g = d.graph();
  const std::size_t n = g.num_edges() - g.num_self_loops();
  if (n > o.max_oracle_edges) {
    throw ss::InputError("graph has " + std::to_string(n) +
                         " non-loop edges, above --max-oracle-edges " +
                         std::to_string(o.max_oracle_edges));
  }
  const auto certs = d.gains_override ? std::vector<ss::SubsystemCertificate>{}
                                      : certify_if_possible(d);
  const ss::GainTable gains = ss::gains_for(d, certs);
  const double eps = epsilon_of(o, d);
  const ss::CircuitEnumeration all = ss::enumerate_circuits(g, g.num_edges(), o.max_circuits);

  bool found = false;
  ss::Json circuits = ss::Json::array();
  if (!o.json) std::cout << "circuit,ratio,meets_margin\n";
  for (const ss::Walk& c : all.circuits) {
    const ss::RatioReport r = ss::theorem1_ratio(ss::closed_walk_stats(c), gains);
    const bool good = ss::meets_margin(r, eps);
    found = found || good;
    if (o.json) {
      circuits.push_back({{"circuit", c.vertices()},
                          {"ratio", ss::ratio_to_json(r)},
                          {"meets_margin", good}});
    } else {
      for (std::size_t i = 0; i < c.vertices().size(); ++i) {
        std::cout << (i ? " " : "") << c.vertices()[i];
      }
      std::cout << ',' << (std::isfinite(r.ratio) ? num(r.ratio) : "inf") << ','
                << (good ? "yes" : "no") << '\n';
    }
  }
  if (!o.json && all.truncated) {
    std::cout << "# truncated after " << all.circuits.size() << " circuits\n";
  }
  if (o.json) {
    std::cout << ss::Json{{"epsilon", eps},
                          {"truncated", all.truncated},
                          {"circuits", std::move(circuits)}}
                     .dump(2)
              << '\n';
  }
  if (found) return kOk;
  return all.truncated ? kUndecided : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilizing switching signals for discrete-time switched linear systems"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("system", o.system_path, "System description (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--q-matrix", o.q_overrides,
                    "Lyapunov weight for one mode, ID:[[..],..] (repeatable)");
    sub->add_flag("--json", o.json, "Print machine-readable output");
  };

  auto* certify = app.add_subcommand("certify", "Lyapunov-like certificates and gains");
  add_common(certify);
  certify->add_option("-r,--report", o.report_path, "Write the JSON report here");
  certify->add_option("--seed", o.seed, "Seed for sampled certificate verification");
  certify->add_option("--samples", o.samples,
                      "Random states for sampled verification (0 disables)");

  auto* synth = app.add_subcommand("synthesize", "Find a stabilizing periodic signal");
  add_common(synth);
  synth->add_option("--epsilon", o.epsilon, "Ratio margin, in (0, 1)");
  synth->add_option("--max-oracle-edges", o.max_oracle_edges,
                    "Largest graph decided by exhaustive search");
  synth->add_option("-r,--report", o.report_path, "Write the JSON report here");
  synth->add_option("-s,--signal-out", o.signal_out, "Write the signal file here");

  auto* check = app.add_subcommand("check", "Switching statistics of a signal");
  add_common(check);
  check->add_option("signal", o.signal_path, "Signal file")->required()->check(CLI::ExistingFile);
  check->add_option("--horizon", o.horizon, "Last step examined");
  check->add_option("--stride", o.stride, "Steps between rows (default: the period)");
  check->add_option("-r,--report", o.report_path, "Write the JSON report here");

  auto* sim = app.add_subcommand("simulate", "Trajectory CSV");
  add_common(sim);
  sim->add_option("signal", o.signal_path, "Signal file")->required()->check(CLI::ExistingFile);
  sim->add_option("--x0", o.x0, "Initial state, comma separated")->required();
  sim->add_option("--horizon", o.horizon, "Number of steps (default 120)");
  sim->add_option("-o,--output", o.output_path, "Write the CSV here");

  auto* oracle = app.add_subcommand("oracle", "Enumerate all circuits and their ratios");
  add_common(oracle);
  oracle->add_option("--epsilon", o.epsilon, "Ratio margin, in (0, 1)");
  oracle->add_option("--max-oracle-edges", o.max_oracle_edges, "Refuse larger graphs");
  oracle->add_option("--max-circuits", o.max_circuits, "Stop after this many circuits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*certify) return cmd_certify(o);
    if (*synth) return cmd_synthesize(o);
    if (*check) return cmd_check(o);
    if (*sim) return cmd_simulate(o);
    if (*oracle) return cmd_oracle(o);
  } catch (const ss::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ss::CertificateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ss::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
