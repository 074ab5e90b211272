#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lipreach/reach.hpp"
#include "lipreach/records.hpp"

namespace lipreach {

/// One verification problem as read from a problem file. Closed-loop files
/// carry dynamics; open-loop files instead describe support-function sweeps
/// over a direction set.
struct ProblemFile {
  std::optional<LinearDynamics> dynamics;  // nullopt: open-loop problem
  std::string weight_path;                 // resolved against the problem file's directory
  Rectangle initial_set;                   // open loop: the input box
  double epsilon = 1e-2;
  int samples = 100;
  std::uint64_t seed = 0;
  int uniform_directions = 0;           // open loop: evenly spaced planar directions
  bool pca_direction_mode = false;      // open loop: also sweep the +/- PCA basis
  std::vector<HalfSpace> goal;          // final set must lie inside (empty: no check)
  std::vector<std::vector<HalfSpace>> avoid;  // regions every step must provably miss
};

/// Parses a problem file (JSON). Throws ParseError / DimensionError /
/// NonFiniteError like the weight loader.
ProblemFile load_problem(const std::string& path);

/// A named benchmark: fixture files plus the machine-checked assertions its
/// run is expected to satisfy.
struct BenchmarkSpec {
  std::string name;
  std::string problem_file;  // file name inside the fixture directory
  std::string weight_file;
  std::vector<std::string> properties;
};

BenchmarkSpec robotic_arm_spec();
BenchmarkSpec double_integrator_spec();
BenchmarkSpec quadrotor_spec();
std::vector<BenchmarkSpec> all_benchmarks();

struct BenchOptions {
  std::optional<double> epsilon;  // overrides the problem file (and the sweep)
  int threads = 1;
  bool quick = false;  // trims Monte Carlo sample counts for fast test runs
  LipschitzMethod method = LipschitzMethod::Sdp;
};

struct BenchRunResult {
  std::vector<PropertyOutcome> outcomes;
  std::optional<ReachabilityResult> reach;  // closed-loop primary run
  std::vector<DirectionBound> supports;     // open-loop direction sweep
  double epsilon = 0.0;                     // epsilon of the primary run

  bool all_passed() const {
    for (const PropertyOutcome& p : outcomes) {
      if (!p.passed) return false;
    }
    return true;
  }
};

/// Runs one benchmark against the fixtures in fixture_dir and evaluates its
/// assertion list.
BenchRunResult run_benchmark(const BenchmarkSpec& spec, const std::string& fixture_dir,
                             const BenchOptions& opts);

/// Writes every weight and problem fixture into dir (created if needed) and
/// returns the file names written. Deterministic: regeneration is
/// bit-identical. Throws NumericalError if a trained fixture misses its fit
/// or closed-loop stability checks.
std::vector<std::string> generate_fixtures(const std::string& dir);

}  // namespace lipreach
