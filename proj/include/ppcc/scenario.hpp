#pragma once

#include "ppcc/graph.hpp"
#include "ppcc/plant.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ppcc {

// A fusion step count, or "auto" = ceil(bound) + 1 from the analysis module.
struct StepCount {
  int value = 1;
  bool automatic = false;
  friend bool operator==(const StepCount&, const StepCount&) = default;
};

struct AuditSpec {
  Index target = 0;
  Index adversary = 1;
  std::vector<double> alt_pi{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<double> assumed_pi{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double force_mass = 5.0;
  Index cos_row = 2;
  Index sin_row = 3;
  int estimate_steps = 200;
};

struct Scenario {
  std::string name;
  PlantModel plant;
  CommGraph graph;
  WeightRule weight_rule = WeightRule::uniform;

  bool privacy = true;
  double epsilon = 0.1;
  std::optional<std::vector<double>> pi;  // drawn from pi_seed when absent
  std::uint64_t pi_seed = 0;

  StepCount m1{10, false};
  StepCount m2{20, false};
  double delta = 1e-3;
  int max_rounds = 10000;

  int horizon = 3000;
  VectorXd initial_state;
  VectorXd desired_state;
  NoiseSpec noise;

  std::optional<double> theta;  // Lyapunov certificate override
  double verdict_threshold = 1.0;
  double verdict_window = 0.1;  // fraction of the horizon
  double divergence_threshold = 1e8;

  std::optional<Channel> channel_addition;  // b: n x 1, c: 1 x n
  AuditSpec audit;
  std::string output_dir;

  PrivacyWeights privacy_weights() const;
  VectorXd initial_error() const { return initial_state - desired_state; }
};

// Parse errors carry line/column; validation errors name the offending field path.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
// Full JSON with every default spelled out; parse_scenario(serialize_scenario(sc)) == sc.
std::string serialize_scenario(const Scenario& sc);

// A path, or the stem of a bundled scenario (exact or unique prefix) in scenario_dir.
std::vector<std::filesystem::path> resolve_scenarios(const std::string& name_or_path,
                                                     const std::filesystem::path& scenario_dir);

}  // namespace ppcc
