#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "twistres/cross_section.hpp"
#include "twistres/geometry.hpp"
#include "twistres/resonance_solver.hpp"
#include "twistres/twist_profile.hpp"

namespace twistres {

inline constexpr int kSchemaVersion = 1;

enum class ModeBackend { Analytic, FiniteDifference };

struct DomainSpec {
  Domain2D domain;
  ModeBackend backend = ModeBackend::Analytic;
  double h = 1.0 / 64;  // finite-difference spacing
};

struct ProfileSpec {
  ProfileFamily family = ProfileFamily::Gaussian;
  double amplitude = 1.0;
  double width = 1.0;
  double alpha = 0.0;  // 0 = family default
  TwistProfile build() const;
};

struct RunConfig {
  DomainSpec domain;
  ProfileSpec profile;
  int Q = 60;
  double cluster_tol = -1.0;  // < 0 = auto
  int q0 = 1;                 // 1-based threshold cluster index
  SolverConfig solver;
  std::vector<double> deltas{0.02, 0.04, 0.08};
  std::string out_dir = ".";
  std::string format = "both";  // json | csv | both
};

// Parse + statically validate + fill defaults.  Duplicate keys and unknown
// fields are errors; the resolved config is echoed into every artifact.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);
nlohmann::json config_to_json(const RunConfig& cfg);

// Build the mode set the config describes (analytic fast path for rectangles
// and discs, five-point finite differences otherwise).
ModeSet build_configured_modes(const RunConfig& cfg);

}  // namespace twistres
