#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchstab/circuit_synth.hpp"
#include "switchstab/lyap_cert.hpp"
#include "switchstab/stability_check.hpp"
#include "switchstab/switch_graph.hpp"

namespace switchstab {

using Json = nlohmann::ordered_json;

/// Log-gains given directly instead of through certificates.
struct GainsOverride {
  std::map<ModeId, double> log_lambda;
  std::map<Edge, double> log_mu;

  friend bool operator==(const GainsOverride&, const GainsOverride&) = default;
};

/// Contents of a system description file:
///
///   {
///     "subsystems": [{"id": 1, "A": [[...], ...], "Q": [[...], ...]}, ...],
///     "edges": [[1, 2], [2, 1], [2, 2]],
///     "epsilon": 0.001,
///     "gains_override": {"log_lambda": [[1, -0.2], ...],
///                        "log_mu": [[1, 2, -1.5], ...]}
///   }
///
/// "Q", "epsilon" and "gains_override" are optional. "subsystems" may be
/// omitted when "gains_override" is present.
struct SystemDescription {
  std::vector<SubsystemMatrix> subsystems;
  std::map<ModeId, Matrix> q;
  std::vector<ModeId> vertices;
  std::vector<Edge> edges;
  std::optional<double> epsilon;
  std::optional<GainsOverride> gains_override;

  bool has_matrices() const { return !subsystems.empty(); }
  TransitionGraph graph() const;
  /// Throws InputError when the file carries no matrices.
  SwitchedSystem system() const;
};

SystemDescription parse_system(const Json& j);
SystemDescription parse_system(const std::string& text);
SystemDescription read_system_file(const std::filesystem::path& path);
Json to_json(const SystemDescription& d);

/// Gains for synthesis and checking: the override when present, otherwise
/// from `certs` (which must then cover every mode).
GainTable gains_for(const SystemDescription& d,
                    std::span<const SubsystemCertificate> certs);

/// Signal file: a header line "# period N" (cycle repeated forever) or
/// "# prefix N" (finite signal), then N mode ids, one per line. Blank lines
/// and further '#' comment lines are ignored.
SwitchingSignal parse_signal(const std::string& text);
SwitchingSignal read_signal_file(const std::filesystem::path& path);
/// Periodic signals with a prelude cannot be written (throws InputError).
std::string format_signal(const SwitchingSignal& sigma);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

Json certificates_to_json(std::span<const SubsystemCertificate> certs);
Json gains_to_json(const TransitionGraph& g, const GainTable& gains);
Json ratio_to_json(const RatioReport& r);

/// Synthesis report: certificates (if any), gains, LP outcome, circuit,
/// ratio, asymptotic verdicts and the signal period.
Json synthesis_report(const SystemDescription& d,
                      std::span<const SubsystemCertificate> certs,
                      const GainTable& gains, const SynthesisOutcome& outcome,
                      double epsilon);

/// Recomputes every verdict of a synthesis report from the numbers stored
/// in it (log-gains, certificates, circuit) and compares. Returns the list
/// of mismatches; empty means the report is consistent.
std::vector<std::string> reverify_report(const Json& report);

}  // namespace switchstab
