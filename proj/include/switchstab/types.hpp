#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace switchstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Index of a subsystem (a vertex of the transition graph).
using ModeId = int;

/// Directed admissible transition `from -> to`; `from == to` is a self-loop.
struct Edge {
  ModeId from{};
  ModeId to{};

  bool is_self_loop() const { return from == to; }

  friend auto operator<=>(const Edge&, const Edge&) = default;
  friend bool operator==(const Edge&, const Edge&) = default;
};

std::string to_string(const Edge& e);

/// Malformed or inconsistent input (dimensions, ids, inadmissible transitions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mode for which no Lyapunov-like certificate could be produced.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace switchstab
