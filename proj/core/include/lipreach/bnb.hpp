#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "lipreach/lipschitz.hpp"
#include "lipreach/network.hpp"
#include "lipreach/rectangle.hpp"

namespace lipreach {

/// One box of the search partition together with its certified bounds.
struct PartitionNode {
  Rectangle rect;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  double parent_lower = -std::numeric_limits<double>::infinity();
  int depth = 0;
  std::uint64_t seq = 0;  // creation order; breaks priority ties FIFO
};

struct BnbConfig {
  double epsilon = 1e-2;            // required optimality gap
  int branch_batch = 512;           // nodes split per iteration (k_b)
  int refine_splits = 4;            // sub-boxes per lower-bound refinement (k_v; 1 = off)
  int split_parts = 2;              // children per branched node (k_d)
  std::int64_t node_cap = 5000000;  // hard limit on created nodes
  bool verify_mode = false;         // stop at sign certificates instead of gap
  int threads = 1;                  // bound-phase parallelism (0 = hardware)
  bool prune_enabled = true;        // test hook; disabling must not change bounds
  bool collect_partition = false;   // keep leaf rectangles for rendering

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

enum class BnbStatus { Converged, VerifiedNonnegative, CounterexampleFound, NodeCapReached };

std::string to_string(BnbStatus status);

struct BnbStats {
  std::int64_t nodes_created = 0;
  std::int64_t nodes_pruned = 0;
  std::int64_t nodes_branched = 0;
  std::int64_t bound_evals = 0;
  double wall_time_s = 0.0;
};

struct SnapshotRect {
  Rectangle rect;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  bool pruned = false;
};

struct BnbResult {
  double best_lower = -std::numeric_limits<double>::infinity();  // certified BLB
  double best_upper = std::numeric_limits<double>::infinity();   // certified BUB
  BnbStatus status = BnbStatus::Converged;
  Eigen::VectorXd witness;  // point attaining best_upper
  BnbStats stats;
  std::vector<SnapshotRect> partition;  // populated when collect_partition is set
};

/// Priority structure over live nodes, ordered by (lower_bound, seq).
class ActiveSet {
 public:
  void insert(PartitionNode node);

  /// Removes and returns up to `count` nodes with the lowest lower bounds
  /// whose longest edge exceeds `min_split_diam` (point boxes never split).
  std::vector<PartitionNode> take_lowest(int count, double min_split_diam);

  /// Removes and returns every node with lower_bound > cutoff.
  std::vector<PartitionNode> prune_above(double cutoff);

  /// Smallest lower bound among live nodes; requires a nonempty set.
  double min_lower() const;

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }

  /// Ordered visit (ascending lower bound) used for snapshots.
  void for_each(const std::function<void(const PartitionNode&)>& fn) const;

 private:
  struct Cmp {
    bool operator()(const PartitionNode& a, const PartitionNode& b) const {
      if (a.lower_bound != b.lower_bound) return a.lower_bound < b.lower_bound;
      return a.seq < b.seq;
    }
  };
  std::multiset<PartitionNode, Cmp> nodes_;
};

/// Splits a box into `parts` pieces by repeated longest-edge bisection,
/// processing pieces first-in-first-out (powers of two give uniform depth).
std::vector<Rectangle> refine_partition(const Rectangle& rect, int parts);

/// Evaluates the node's bounds:
///   upper = J(center);
///   lb1   = upper - (L/2) * diam;
///   lb2   = parent_lower;
///   lb3   = min over refine_splits sub-boxes of their lb1-style bounds
///           (omitted when refine_splits == 1);
///   lower = max(lb1, lb2, lb3).
PartitionNode bound(PartitionNode node, const ObjectiveFunction& obj, double lipschitz_bound,
                    int refine_splits);

/// Selection + split step: removes up to k_b lowest-lower-bound splittable
/// nodes and returns their children (k_d slabs along each longest edge).
/// Children carry parent_lower = parent's lower_bound and fresh seq numbers;
/// their own bounds are not yet evaluated.
std::vector<PartitionNode> branch_step(ActiveSet& active, int k_b, int k_d,
                                       double min_split_diam, std::uint64_t& seq_counter,
                                       std::vector<PartitionNode>* branched_parents = nullptr);

using BranchObserver = std::function<void(const PartitionNode&)>;

/// Global minimization of the objective over the root box with certified
/// lower bound L on the objective's Lipschitz constant. Converged results
/// satisfy best_upper - best_lower <= epsilon; all results satisfy
/// best_lower <= min J <= best_upper <= J at witness.
BnbResult minimize(const ObjectiveFunction& obj, const Rectangle& root,
                   const LipschitzCertificate& cert, const BnbConfig& cfg,
                   const std::vector<Eigen::VectorXd>& warm_points = {},
                   const BranchObserver& on_branch = nullptr);

}  // namespace lipreach
