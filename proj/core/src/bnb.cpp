#include "lipreach/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <thread>

#include "lipreach/errors.hpp"

namespace lipreach {

namespace {

/// Runs fn(i) for i in [0, n) across `threads` workers over contiguous index
/// chunks. Results must be written to per-index slots so the outcome is
/// independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

}  // namespace

void BnbConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
  if (branch_batch < 1) throw std::invalid_argument("branch_batch must be at least 1");
  if (!is_power_of_two(refine_splits)) {
    throw std::invalid_argument("refine_splits must be a power of two (1 disables refinement)");
  }
  if (split_parts < 2) throw std::invalid_argument("split_parts must be at least 2");
  if (node_cap < 1) throw std::invalid_argument("node_cap must be at least 1");
  if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
}

std::string to_string(BnbStatus status) {
  switch (status) {
    case BnbStatus::Converged: return "converged";
    case BnbStatus::VerifiedNonnegative: return "verified_nonnegative";
    case BnbStatus::CounterexampleFound: return "counterexample_found";
    case BnbStatus::NodeCapReached: return "node_cap_reached";
  }
  return "converged";
}

void ActiveSet::insert(PartitionNode node) { nodes_.insert(std::move(node)); }

std::vector<PartitionNode> ActiveSet::take_lowest(int count, double min_split_diam) {
  std::vector<PartitionNode> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  auto it = nodes_.begin();
  while (it != nodes_.end() && static_cast<int>(out.size()) < count) {
    if (it->rect.longest_edge() > 0.0 && it->rect.diameter() > min_split_diam) {
      out.push_back(*it);
      it = nodes_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

std::vector<PartitionNode> ActiveSet::prune_above(double cutoff) {
  std::vector<PartitionNode> removed;
  // Nodes are ordered by lower bound, so everything past the cutoff is a tail.
  PartitionNode probe;
  probe.lower_bound = cutoff;
  probe.seq = std::numeric_limits<std::uint64_t>::max();
  auto it = nodes_.upper_bound(probe);
  for (auto x = it; x != nodes_.end(); ++x) removed.push_back(*x);
  nodes_.erase(it, nodes_.end());
  return removed;
}

double ActiveSet::min_lower() const {
  if (nodes_.empty()) throw std::logic_error("min_lower on an empty active set");
  return nodes_.begin()->lower_bound;
}

void ActiveSet::for_each(const std::function<void(const PartitionNode&)>& fn) const {
  for (const PartitionNode& n : nodes_) fn(n);
}

std::vector<Rectangle> refine_partition(const Rectangle& rect, int parts) {
  if (parts < 1) throw std::invalid_argument("refine_partition requires parts >= 1");
  std::deque<Rectangle> queue{rect};
  while (static_cast<int>(queue.size()) < parts) {
    Rectangle front = queue.front();
    queue.pop_front();
    if (front.longest_edge() == 0.0) {
      // Point boxes cannot be subdivided further; keep them as-is.
      queue.push_back(front);
      if (std::all_of(queue.begin(), queue.end(),
                      [](const Rectangle& r) { return r.longest_edge() == 0.0; })) {
        break;
      }
      continue;
    }
    auto [a, b] = front.bisect(front.longest_axis());
    queue.push_back(std::move(a));
    queue.push_back(std::move(b));
  }
  return {queue.begin(), queue.end()};
}

PartitionNode bound(PartitionNode node, const ObjectiveFunction& obj, double lipschitz_bound,
                    int refine_splits) {
  if (lipschitz_bound < 0.0 || !std::isfinite(lipschitz_bound)) {
    throw std::invalid_argument("lipschitz_bound must be finite and nonnegative");
  }
  const double upper = obj(node.rect.center());
  double lower = upper - 0.5 * lipschitz_bound * node.rect.diameter();  // lb1
  lower = std::max(lower, node.parent_lower);                           // lb2
  if (refine_splits > 1) {
    double lb3 = std::numeric_limits<double>::infinity();
    for (const Rectangle& sub : refine_partition(node.rect, refine_splits)) {
      const double v = obj(sub.center()) - 0.5 * lipschitz_bound * sub.diameter();
      lb3 = std::min(lb3, v);
    }
    lower = std::max(lower, lb3);
  }
  node.upper_bound = upper;
  node.lower_bound = lower;
  return node;
}

std::vector<PartitionNode> branch_step(ActiveSet& active, int k_b, int k_d,
                                       double min_split_diam, std::uint64_t& seq_counter,
                                       std::vector<PartitionNode>* branched_parents) {
  std::vector<PartitionNode> children;
  const std::vector<PartitionNode> batch = active.take_lowest(k_b, min_split_diam);
  children.reserve(batch.size() * static_cast<std::size_t>(k_d));
  for (const PartitionNode& parent : batch) {
    const int axis = parent.rect.longest_axis();
    for (Rectangle& piece : parent.rect.split(axis, k_d)) {
      PartitionNode child;
      child.rect = std::move(piece);
      child.parent_lower = parent.lower_bound;
      child.lower_bound = parent.lower_bound;
      child.depth = parent.depth + 1;
      child.seq = seq_counter++;
      children.push_back(std::move(child));
    }
    if (branched_parents) branched_parents->push_back(parent);
  }
  return children;
}

BnbResult minimize(const ObjectiveFunction& obj, const Rectangle& root,
                   const LipschitzCertificate& cert, const BnbConfig& cfg,
                   const std::vector<Eigen::VectorXd>& warm_points,
                   const BranchObserver& on_branch) {
  cfg.validate();
  const double L = cert.bound;
  if (L < 0.0 || !std::isfinite(L)) {
    throw std::invalid_argument("certificate bound must be finite and nonnegative");
  }
  const auto t0 = std::chrono::steady_clock::now();

  BnbResult result;
  BnbStats& stats = result.stats;

  // Splitting below this diameter cannot reduce a node's gap under epsilon
  // further; leaving such nodes intact also guarantees termination.
  const double min_split_diam =
      L > 0.0 ? 2.0 * cfg.epsilon / L : std::numeric_limits<double>::infinity();

  double bub = std::numeric_limits<double>::infinity();
  double blb = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd witness;

  for (const Eigen::VectorXd& w : warm_points) {
    const Eigen::VectorXd p = root.clamp(w);
    const double v = obj(p);
    ++stats.bound_evals;
    if (v < bub) {
      bub = v;
      witness = p;
    }
  }

  std::uint64_t seq_counter = 0;
  ActiveSet active;
  std::vector<PartitionNode> pending;
  {
    PartitionNode root_node;
    root_node.rect = root;
    root_node.seq = seq_counter++;
    pending.push_back(std::move(root_node));
  }

  const std::int64_t evals_per_bound = 1 + (cfg.refine_splits > 1 ? cfg.refine_splits : 0);

  auto finish = [&](BnbStatus status) {
    result.status = status;
    result.best_lower = blb;
    result.best_upper = bub;
    result.witness = witness;
    if (cfg.collect_partition) {
      active.for_each([&](const PartitionNode& n) {
        result.partition.push_back({n.rect, n.lower_bound, n.upper_bound, false});
      });
    }
    stats.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };

  while (true) {
    // Bound phase: evaluate the fresh nodes (data-parallel; per-index slots
    // plus ordered reduction keep the outcome thread-count independent).
    std::vector<PartitionNode> bounded(pending.size());
    parallel_for(pending.size(), cfg.threads, [&](std::size_t i) {
      bounded[i] = bound(std::move(pending[i]), obj, L, cfg.refine_splits);
    });
    pending.clear();
    stats.bound_evals += static_cast<std::int64_t>(bounded.size()) * evals_per_bound;
    stats.nodes_created += static_cast<std::int64_t>(bounded.size());
    for (PartitionNode& n : bounded) {
      if (n.upper_bound < bub) {
        bub = n.upper_bound;
        witness = n.rect.center();
      }
      active.insert(std::move(n));
    }

    if (!active.empty()) blb = std::max(blb, active.min_lower());

    if (bub - blb <= cfg.epsilon) return finish(BnbStatus::Converged);
    if (cfg.verify_mode) {
      if (blb >= 0.0) return finish(BnbStatus::VerifiedNonnegative);
      if (bub < 0.0) return finish(BnbStatus::CounterexampleFound);
    }
    if (stats.nodes_created >= cfg.node_cap) return finish(BnbStatus::NodeCapReached);

    if (cfg.prune_enabled) {
      std::vector<PartitionNode> removed = active.prune_above(bub);
      stats.nodes_pruned += static_cast<std::int64_t>(removed.size());
      if (cfg.collect_partition) {
        for (PartitionNode& n : removed) {
          result.partition.push_back({std::move(n.rect), n.lower_bound, n.upper_bound, true});
        }
      }
    }
    if (active.empty()) {
      // Everything at least bub remains; the infimum equals the incumbent.
      blb = bub;
      return finish(BnbStatus::Converged);
    }

    std::vector<PartitionNode> parents;
    pending = branch_step(active, cfg.branch_batch, cfg.split_parts, min_split_diam,
                          seq_counter, &parents);
    if (pending.empty()) {
      // All live nodes already sit at the resolution limit. Mathematically the
      // gap is within epsilon here; floating-point rounding can leave it a few
      // ulps above, so force one split to keep making progress.
      std::vector<PartitionNode> fallback = active.take_lowest(1, 0.0);
      if (fallback.empty()) {
        // Only point boxes remain: every value is known exactly.
        blb = bub;
        return finish(BnbStatus::Converged);
      }
      const PartitionNode& parent = fallback.front();
      const int axis = parent.rect.longest_axis();
      for (Rectangle& piece : parent.rect.split(axis, cfg.split_parts)) {
        PartitionNode child;
        child.rect = std::move(piece);
        child.parent_lower = parent.lower_bound;
        child.lower_bound = parent.lower_bound;
        child.depth = parent.depth + 1;
        child.seq = seq_counter++;
        pending.push_back(std::move(child));
      }
      parents.push_back(parent);
    }
    stats.nodes_branched += static_cast<std::int64_t>(parents.size());
    if (on_branch) {
      for (const PartitionNode& p : parents) on_branch(p);
    }
  }
}

}  // namespace lipreach
