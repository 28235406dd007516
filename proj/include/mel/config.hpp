#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mel/linalg.hpp"
#include "mel/material.hpp"

namespace mel {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validated run configuration. Defaults are the documented ones; file values
// override defaults, command-line flags override the file. Parsing is strict:
// unknown sections/keys and duplicate keys are rejected with their locations.
struct RunConfig {
  std::string subcommand;

  // [density]
  std::string density = "D1";
  PhaseLayout c_layout = PhaseLayout::constant(1.0);
  PhaseLayout kappa_layout = PhaseLayout::constant(1.0);
  PhaseLayout a_layout = PhaseLayout::constant(1.0);
  double p = 4.0;
  double s = 3.0;
  double mu0 = 1.0;

  // [grid]
  int n = 64;
  int n_cell_ref = 64;
  double pad = 2.0;

  // [sweep]
  std::string scenario = "S1";
  std::vector<int> eps_ladder = {4, 8, 16};  // larger ladders need larger n
  std::vector<double> delta_ladder = {1e-1, 1e-2, 1e-3};
  double alpha = 1.0;
  double eps = 0.125;
  double delta = 0.0;
  double tol = 1e-10;

  // [cell]
  std::string problem = "exchange";
  Mat3 A = Mat3::Identity();
  Vec3 nu = Vec3(0, 0, 1);

  // [energy]
  std::string functional = "Feps";

  // [stray]
  std::string m_file;
  std::string mask_file;

  // [run]
  std::string out_dir = "out";
  int threads = 0;  // 0 -> available parallelism
  std::uint64_t seed = 1;
  std::int64_t samples = 10000;
  bool timing = false;  // opt-in: wall_time_s columns break byte determinism

  std::string canonical_text() const;  // stable echo used for the config hash
  std::uint64_t hash() const;          // FNV-1a of the canonical text
  void validate() const;               // range + commensurability checks
};

// Parses the key/value tree grammar:
//   [section]
//   key = value            # comment
//   ladder = 4,8,16
//   layout = laminate(axis=1, fraction=0.5, values=[1.0, 10.0])
// Throws ConfigError with file:line locations.
void apply_config_file(RunConfig& cfg, const std::string& path);

// Single "section.key=value" assignment (used by flag overrides).
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        const std::string& where);

PhaseLayout parse_layout(const std::string& text, const std::string& where);

}  // namespace mel
