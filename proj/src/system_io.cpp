#include "switchstab/system_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace switchstab {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModeId mode_id(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw InputError(what + ": mode id must be an integer");
  return j.get<ModeId>();
}

double real(const Json& j, const std::string& what) {
  if (!j.is_number()) throw InputError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError(what + ": value is not finite");
  return v;
}

GainsOverride parse_override(const Json& j) {
  if (!j.is_object()) throw InputError("gains_override must be an object");
  GainsOverride g;
  for (const Json& e : j.value("log_lambda", Json::array())) {
    if (!e.is_array() || e.size() != 2) {
      throw InputError("gains_override.log_lambda entries are [id, value]");
    }
    const ModeId id = mode_id(e[0], "gains_override.log_lambda");
    if (!g.log_lambda.emplace(id, real(e[1], "gains_override.log_lambda")).second) {
      throw InputError("gains_override: duplicate ln lambda for mode " +
                       std::to_string(id));
    }
  }
  for (const Json& e : j.value("log_mu", Json::array())) {
    if (!e.is_array() || e.size() != 3) {
      throw InputError("gains_override.log_mu entries are [from, to, value]");
    }
    const Edge edge{mode_id(e[0], "gains_override.log_mu"),
                    mode_id(e[1], "gains_override.log_mu")};
    if (!g.log_mu.emplace(edge, real(e[2], "gains_override.log_mu")).second) {
      throw InputError("gains_override: duplicate ln mu for edge " + to_string(edge));
    }
  }
  return g;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw InputError(what + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw InputError(what + ": rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw InputError(what + ": row " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          real(j[i][k], what);
    }
  }
  return m;
}

TransitionGraph SystemDescription::graph() const {
  return TransitionGraph(vertices, edges);
}

SwitchedSystem SystemDescription::system() const {
  if (!has_matrices()) {
    throw InputError("the system file has no subsystem matrices");
  }
  return SwitchedSystem(subsystems, graph(), q);
}

SystemDescription parse_system(const Json& j) {
  if (!j.is_object()) throw InputError("system description must be an object");
  SystemDescription d;

  if (j.contains("subsystems")) {
    const Json& subs = j.at("subsystems");
    if (!subs.is_array()) throw InputError("subsystems must be an array");
    for (const Json& s : subs) {
      if (!s.is_object() || !s.contains("id") || !s.contains("A")) {
        throw InputError("each subsystem needs \"id\" and \"A\"");
      }
      const ModeId id = mode_id(s.at("id"), "subsystem");
      const std::string where = "subsystem " + std::to_string(id);
      d.subsystems.emplace_back(id, matrix_from_json(s.at("A"), where + " A"));
      if (s.contains("Q")) d.q[id] = matrix_from_json(s.at("Q"), where + " Q");
      d.vertices.push_back(id);
    }
  }

  if (!j.contains("edges") || !j.at("edges").is_array()) {
    throw InputError("system description needs an \"edges\" array");
  }
  for (const Json& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw InputError("edges are [from, to] pairs");
    d.edges.push_back({mode_id(e[0], "edge"), mode_id(e[1], "edge")});
  }

  if (j.contains("epsilon")) d.epsilon = real(j.at("epsilon"), "epsilon");
  if (j.contains("gains_override")) d.gains_override = parse_override(j.at("gains_override"));

  if (d.subsystems.empty()) {
    if (!d.gains_override) {
      throw InputError("system description needs \"subsystems\" or \"gains_override\"");
    }
    std::set<ModeId> ids;
    for (const auto& [id, _] : d.gains_override->log_lambda) ids.insert(id);
    for (const Edge& e : d.edges) {
      ids.insert(e.from);
      ids.insert(e.to);
    }
    d.vertices.assign(ids.begin(), ids.end());
  }
  // Validates vertices and edges.
  (void)d.graph();
  return d;
}

SystemDescription parse_system(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("malformed system description: ") + e.what());
  }
  return parse_system(j);
}

SystemDescription read_system_file(const std::filesystem::path& path) {
  return parse_system(read_text(path));
}

Json to_json(const SystemDescription& d) {
  Json j = Json::object();
  if (d.has_matrices()) {
    Json subs = Json::array();
    for (const auto& s : d.subsystems) {
      Json o = {{"id", s.id()}, {"A", matrix_to_json(s.a())}};
      if (auto it = d.q.find(s.id()); it != d.q.end()) o["Q"] = matrix_to_json(it->second);
      subs.push_back(std::move(o));
    }
    j["subsystems"] = std::move(subs);
  }
  Json edges = Json::array();
  for (const Edge& e : d.edges) edges.push_back({e.from, e.to});
  j["edges"] = std::move(edges);
  if (d.epsilon) j["epsilon"] = *d.epsilon;
  if (d.gains_override) {
    Json ll = Json::array();
    for (const auto& [id, v] : d.gains_override->log_lambda) ll.push_back({id, v});
    Json lm = Json::array();
    for (const auto& [e, v] : d.gains_override->log_mu) lm.push_back({e.from, e.to, v});
    j["gains_override"] = {{"log_lambda", std::move(ll)}, {"log_mu", std::move(lm)}};
  }
  return j;
}

GainTable gains_for(const SystemDescription& d,
                    std::span<const SubsystemCertificate> certs) {
  if (d.gains_override) {
    return GainTable::from_logs(d.graph(), d.gains_override->log_lambda,
                                d.gains_override->log_mu);
  }
  return build_gain_table(d.graph(), certs);
}

SwitchingSignal parse_signal(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<bool> periodic;
  std::size_t expected = 0;
  std::vector<ModeId> values;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    if (line.front() == '#') {
      if (periodic) continue;
      std::istringstream h(line.substr(1));
      std::string kind;
      long long n = -1;
      h >> kind >> n;
      if ((kind != "period" && kind != "prefix") || h.fail() || n < 1) {
        throw InputError("signal header must be \"# period N\" or \"# prefix N\" "
                         "with N >= 1 (line " + std::to_string(lineno) + ")");
      }
      periodic = kind == "period";
      expected = static_cast<std::size_t>(n);
      continue;
    }
    if (!periodic) {
      throw InputError("signal file must start with a \"# period N\" or \"# prefix N\" header");
    }
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() || v < std::numeric_limits<ModeId>::min() ||
        v > std::numeric_limits<ModeId>::max()) {
      throw InputError("signal line " + std::to_string(lineno) +
                       ": expected an integer mode id, got \"" + line + "\"");
    }
    values.push_back(static_cast<ModeId>(v));
  }
  if (!periodic) throw InputError("signal file has no header");
  if (values.size() != expected) {
    throw InputError("signal header announces " + std::to_string(expected) +
                     " values, file has " + std::to_string(values.size()));
  }
  return *periodic ? SwitchingSignal::periodic(std::move(values))
                   : SwitchingSignal::explicit_prefix(std::move(values));
}

SwitchingSignal read_signal_file(const std::filesystem::path& path) {
  return parse_signal(read_text(path));
}

std::string format_signal(const SwitchingSignal& sigma) {
  std::ostringstream out;
  std::vector<ModeId> values;
  if (sigma.is_periodic()) {
    if (!sigma.prelude().empty()) {
      throw InputError("signal files cannot hold a periodic signal with a prelude");
    }
    values = sigma.cycle();
    out << "# period " << values.size() << '\n';
  } else {
    values = sigma.prelude();
    out << "# prefix " << values.size() << '\n';
  }
  for (ModeId v : values) out << v << '\n';
  return out.str();
}

Json certificates_to_json(std::span<const SubsystemCertificate> certs) {
  Json out = Json::array();
  for (const auto& c : certs) {
    out.push_back({{"id", c.id},
                   {"class", to_string(c.cls)},
                   {"lambda", c.lambda},
                   {"log_lambda", std::log(c.lambda)},
                   {"P", matrix_to_json(c.p)}});
  }
  return out;
}

Json gains_to_json(const TransitionGraph& g, const GainTable& gains) {
  Json modes = Json::array();
  for (ModeId j : g.vertices()) {
    modes.push_back({{"id", j},
                     {"class", to_string(gains.cls(j))},
                     {"lambda", gains.lambda(j)},
                     {"log_lambda", gains.log_lambda(j)}});
  }
  Json edges = Json::array();
  for (const Edge& e : g.edges()) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"mu", gains.mu(e)},
                     {"log_mu", gains.log_mu(e)}});
  }
  return {{"modes", std::move(modes)}, {"edges", std::move(edges)}};
}

Json ratio_to_json(const RatioReport& r) {
  Json j = {{"numerator", r.numerator}, {"denominator", r.denominator}};
  // JSON has no infinity.
  j["ratio"] = std::isfinite(r.ratio) ? Json(r.ratio) : Json(nullptr);
  j["satisfied"] = r.satisfied;
  return j;
}

Json synthesis_report(const SystemDescription& d,
                      std::span<const SubsystemCertificate> certs,
                      const GainTable& gains, const SynthesisOutcome& outcome,
                      double epsilon) {
  const TransitionGraph g = d.graph();
  Json j = Json::object();
  j["status"] = to_string(outcome.status);
  j["epsilon"] = epsilon;
  j["gains_source"] = d.gains_override ? "override" : "certificates";
  if (!certs.empty()) j["certificates"] = certificates_to_json(certs);
  j["gains"] = gains_to_json(g, gains);
  if (!outcome.diagnostic.empty()) j["diagnostic"] = outcome.diagnostic;
  if (!outcome.result) return j;

  const SynthesisResult& r = *outcome.result;
  Json lp = Json::object();
  if (r.trivial_case) {
    lp["used"] = false;
    j["trivial_case_mode"] = *r.trivial_case;
  } else {
    lp["used"] = true;
    lp["vertex_integral"] = r.lp_vertex_integral;
    lp["repaired"] = r.repaired;
    lp["oracle_fallback"] = r.oracle_fallback;
    if (r.flow) {
      Json f = Json::array();
      for (double v : r.flow->f) f.push_back(static_cast<int>(std::lround(v)));
      lp["flow"] = std::move(f);
    }
    lp["components"] = r.components;
  }
  j["lp"] = std::move(lp);
  j["circuit"] = r.circuit.vertices();
  j["ratio"] = ratio_to_json(r.ratio);
  const AsymptoticVerdict v = asymptotic_check(r.signal, gains);
  j["verdicts"] = {{"condition12", v.condition12},
                   {"condition13", v.condition13},
                   {"trivial_case", v.trivial_case}};
  j["signal"] = {{"period", r.signal.period()}, {"cycle", r.signal.cycle()}};
  return j;
}

std::vector<std::string> reverify_report(const Json& report) {
  std::vector<std::string> issues;
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  try {
    std::vector<ModeId> vertices;
    std::vector<Edge> edges;
    std::map<ModeId, double> log_lambda;
    std::map<Edge, double> log_mu;
    for (const Json& m : report.at("gains").at("modes")) {
      vertices.push_back(m.at("id").get<ModeId>());
      log_lambda[vertices.back()] = m.at("log_lambda").get<double>();
    }
    for (const Json& e : report.at("gains").at("edges")) {
      const Edge edge{e.at("from").get<ModeId>(), e.at("to").get<ModeId>()};
      edges.push_back(edge);
      log_mu[edge] = e.at("log_mu").get<double>();
    }
    const TransitionGraph g(vertices, edges);
    const GainTable gains = GainTable::from_logs(g, log_lambda, log_mu);

    if (report.contains("certificates")) {
      std::vector<SubsystemCertificate> certs;
      for (const Json& c : report.at("certificates")) {
        SubsystemCertificate cert;
        cert.id = c.at("id").get<ModeId>();
        cert.p = matrix_from_json(c.at("P"), "certificate P");
        cert.lambda = c.at("lambda").get<double>();
        certs.push_back(std::move(cert));
      }
      for (const Edge& e : g.edges()) {
        if (e.is_self_loop()) continue;
        const Matrix* pf = nullptr;
        const Matrix* pt = nullptr;
        for (const auto& c : certs) {
          if (c.id == e.from) pf = &c.p;
          if (c.id == e.to) pt = &c.p;
        }
        if (!pf || !pt) {
          issues.push_back("missing certificate for edge " + to_string(e));
          continue;
        }
        const double lm = std::log(mu_gain(*pf, *pt));
        if (std::abs(lm - gains.log_mu(e)) > 1e-8) {
          issues.push_back("ln mu" + to_string(e) + " does not match the certificates");
        }
      }
    }

    if (!report.contains("circuit")) return issues;
    const Walk circuit(g, report.at("circuit").get<std::vector<ModeId>>());
    const SwitchingSignal sigma = SwitchingSignal::from_circuit(circuit);
    const RatioReport r =
        theorem1_ratio(prefix_stats(sigma, circuit.length()), gains);
    const Json& stored = report.at("ratio");
    if (!close(r.numerator, stored.at("numerator").get<double>()) ||
        !close(r.denominator, stored.at("denominator").get<double>())) {
      issues.push_back("circuit ratio does not match the stored ratio");
    }
    if (r.satisfied != stored.at("satisfied").get<bool>()) {
      issues.push_back("ratio verdict differs");
    }
    const AsymptoticVerdict v = asymptotic_check(sigma, gains);
    const Json& verdicts = report.at("verdicts");
    if (v.condition12 != verdicts.at("condition12").get<bool>()) {
      issues.push_back("condition 12 verdict differs");
    }
    if (v.condition13 != verdicts.at("condition13").get<bool>()) {
      issues.push_back("condition 13 verdict differs");
    }
    if (report.at("signal").at("cycle").get<std::vector<ModeId>>() != sigma.cycle()) {
      issues.push_back("signal cycle does not match the circuit");
    }
  } catch (const Json::exception& e) {
    issues.push_back(std::string("malformed report: ") + e.what());
  } catch (const std::exception& e) {
    issues.push_back(std::string("report does not verify: ") + e.what());
  }
  return issues;
}

}  // namespace switchstab
