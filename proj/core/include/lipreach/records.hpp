#pragma once

#include <string>
#include <vector>

#include "lipreach/bnb.hpp"
#include "lipreach/lipschitz.hpp"
#include "lipreach/reach.hpp"

namespace lipreach {

/// Version stamped into every structured record; bump on breaking changes.
inline constexpr int kRecordSchemaVersion = 1;

/// One machine-checked assertion attached to a benchmark run.
struct PropertyOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Single-line JSON record for a Lipschitz certificate.
std::string certificate_record(const LipschitzCertificate& cert);

/// Single-line JSON record for one branch-and-bound run (status, bounds,
/// witness, statistics).
std::string verify_record(const BnbResult& result, double epsilon);

/// Single-line JSON record for one reach direction solve.
std::string solve_record(const DirectionSolve& solve);

/// One JSON line per final partition rectangle (requires a run made with
/// collect_partition enabled; otherwise the list is empty).
std::vector<std::string> partition_records(const BnbResult& result);

/// Summary document for a reachability run: per-step rotations and bounds,
/// degenerate-rotation steps, and the configuration that produced them.
std::string reach_summary(const LinearDynamics& dyn, const ReachConfig& cfg,
                          const ReachabilityResult& result);

/// Summary document for a benchmark run and its assertion outcomes.
std::string bench_summary_record(const std::string& benchmark,
                                 const std::vector<PropertyOutcome>& outcomes);

/// Single-line JSON record for a goal/avoid polyhedral check. `certified`
/// means the property was proven (the disjointness test is sufficient only).
std::string set_check_record(const std::string& target, int step, bool certified);

/// CSV dump of sampled trajectories (header: sample,step,x0,...,x{n-1});
/// values carry full double precision.
std::string trajectories_csv(const std::vector<std::vector<Eigen::VectorXd>>& trajectories);

/// Re-parses a record emitted by this module and checks the fields its kind
/// requires. Throws ParseError on any violation.
void validate_record(const std::string& json_text);

}  // namespace lipreach
