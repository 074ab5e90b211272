// End-to-end acceptance checks. Each check prints one [PASS]/[FAIL] line;
// the binary exits nonzero if any check fails. Tolerances are pinned here
// on purpose -- do not loosen them to make a run green.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipreach/bnb.hpp"
#include "lipreach/lipschitz.hpp"
#include "lipreach/network.hpp"
#include "lipreach/problems.hpp"
#include "lipreach/reach.hpp"
#include "lipreach/records.hpp"

using namespace lipreach;

namespace {

constexpr double kGridTarget = 1e-3;        // required grid certificate width
constexpr double kQuotientSlack = -1e-9;    // allowed sampling slack
constexpr double kNaiveCap = 1e-6;          // relative cap of sdp vs naive
constexpr double kAffineRelTol = 1e-6;      // affine-chain exactness
constexpr double kContainTol = 1e-9;        // trajectory containment inflation
constexpr double kDiBudgetSeconds = 300.0;  // double integrator at eps = 1e-3
constexpr double kQuadBudgetSeconds = 1800.0;  // quadrotor at eps = 0.1
constexpr int kOracleNets = 20;
constexpr int kQuotientTotal = 100000;
constexpr int kFreshTrajectories = 10000;

struct Ledger {
  int failures = 0;

  void report(int id, const char* name, bool passed, const std::string& detail,
              double seconds) {
    std::printf("[%s] %d %s - %s (%.1fs)\n", passed ? "PASS" : "FAIL", id, name,
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!passed) ++failures;
  }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

std::string fixture(const char* name) {
  return std::string(LIPREACH_FIXTURE_DIR) + "/" + name;
}

/// Deterministic small ReLU network: 2 inputs, 1-2 hidden layers, at most 16
/// hidden neurons, scalar output.
NeuralNetwork random_net(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<int> widths{2};
  const int hidden = 1 + static_cast<int>(rng() % 2);
  int budget = 16;
  for (int l = 0; l < hidden; ++l) {
    const int w = std::min(3 + static_cast<int>(rng() % 6), budget);
    widths.push_back(w);
    budget -= w;
  }
  widths.push_back(1);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Eigen::MatrixXd W(widths[l + 1], widths[l]);
    Eigen::VectorXd b(widths[l + 1]);
    const double scale = 0.9 / std::sqrt(static_cast<double>(widths[l]));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = scale * gauss(rng);
      b[i] = 0.2 * gauss(rng);
    }
    layers.push_back({W, b});
  }
  return NeuralNetwork(std::move(layers), ActivationSector::for_kind(ActivationKind::ReLU));
}

/// Batched evaluation of c . f over a regular (n+1) x (n+1) grid on the box,
/// returning the grid minimum.
double grid_minimum(const NeuralNetwork& net, const Rectangle& box, int n) {
  const double x0 = box.lower()[0];
  const double y0 = box.lower()[1];
  const double hx = (box.upper()[0] - x0) / n;
  const double hy = (box.upper()[1] - y0) / n;
  double best = std::numeric_limits<double>::infinity();

  const int chunk = 16384;
  Eigen::MatrixXd points(2, chunk);
  int filled = 0;
  auto flush = [&]() {
    if (filled == 0) return;
    Eigen::MatrixXd v = points.leftCols(filled);
    const auto& layers = net.layers();
    for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
      v = ((layers[k].W * v).colwise() + layers[k].b).cwiseMax(0.0);
    }
    const Eigen::MatrixXd out =
        (layers.back().W * v).colwise() + layers.back().b;  // 1 x filled
    best = std::min(best, out.minCoeff());
    filled = 0;
  };

  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      points(0, filled) = x0 + i * hx;
      points(1, filled) = y0 + j * hy;
      if (++filled == chunk) flush();
    }
  }
  flush();
  return best;
}

struct DiSweep {
  std::vector<double> epsilons{0.1, 0.01, 0.001};
  std::vector<ReachabilityResult> refined;  // k_v = 4 runs, one per epsilon
  std::vector<ReachabilityResult> plain;    // k_v = 1 runs
  double seconds_at_finest = 0.0;
  ProblemFile problem{};
  bool loaded = false;
};

ReachabilityResult run_reach(const ProblemFile& pf, const NeuralNetwork& net, double epsilon,
                             int refine_splits, int threads, bool identity_rotation) {
  ReachConfig cfg;
  cfg.bnb.epsilon = epsilon;
  cfg.bnb.refine_splits = refine_splits;
  cfg.bnb.threads = threads;
  cfg.samples = pf.samples;
  cfg.seed = pf.seed;
  cfg.identity_rotation = identity_rotation;
  const int n = pf.dynamics->state_dim();
  const RotatedRectangle init(Eigen::MatrixXd::Identity(n, n), pf.initial_set);
  return reach(*pf.dynamics, net, init, cfg);
}

std::int64_t total_branches(const ReachabilityResult& r) {
  std::int64_t total = 0;
  for (const DirectionSolve& s : r.solves) total += s.result.stats.nodes_branched;
  return total;
}

bool trajectories_contained(const ProblemFile& pf, const NeuralNetwork& net,
                            const ReachabilityResult& r, std::uint64_t seed,
                            std::string& detail) {
  const int n = pf.dynamics->state_dim();
  const RotatedRectangle init(Eigen::MatrixXd::Identity(n, n), pf.initial_set);
  const auto fresh = simulate(*pf.dynamics, net, init, kFreshTrajectories, seed);
  for (std::size_t s = 0; s < fresh.size(); ++s) {
    for (std::size_t t = 0; t < fresh[s].size(); ++t) {
      if (!r.sets[t].contains(fresh[s][t], kContainTol)) {
        detail = "trajectory " + std::to_string(s) + " escapes the step-" + std::to_string(t) +
                 " set";
        return false;
      }
    }
  }
  detail = std::to_string(kFreshTrajectories) + " fresh trajectories contained";
  return true;
}

std::string normalized_solve_record(const DirectionSolve& solve) {
  nlohmann::json doc = nlohmann::json::parse(solve_record(solve));
  doc["result"]["stats"]["wall_time_s"] = 0.0;
  return doc.dump();
}

}  // namespace

int main() {
  Ledger ledger;
  std::vector<NeuralNetwork> nets;
  nets.reserve(kOracleNets);
  for (int i = 0; i < kOracleNets; ++i) {
    nets.push_back(random_net(0xACC00000ULL + static_cast<std::uint64_t>(i)));
  }
  const Rectangle oracle_box(vec2(-0.25, -0.25), vec2(0.25, 0.25));

  // ---- 1: branch-and-bound brackets an exhaustive grid certificate --------
  {
    const double t0 = now_seconds();
    bool ok = true;
    std::string detail;
    double worst_slack = 0.0;
    for (int i = 0; i < kOracleNets && ok; ++i) {
      const ObjectiveFunction obj(nets[i], Eigen::VectorXd::Ones(1));
      const PreactivationBounds pre =
          preactivation_intervals(nets[i], oracle_box, Eigen::MatrixXd::Identity(2, 2));
      const LipschitzCertificate cert = lipschitz_sdp(obj, pre);

      // Grid pitch chosen so L * h * sqrt(2) / 2 <= the target accuracy.
      const double width = 0.5;
      const double h_max = 2.0 * kGridTarget / (cert.bound * std::sqrt(2.0));
      const int n = std::max(8, static_cast<int>(std::ceil(width / h_max)));
      const double slack = cert.bound * (width / n) * std::sqrt(2.0) / 2.0;
      worst_slack = std::max(worst_slack, slack);

      BnbConfig cfg;
      cfg.epsilon = 1e-3;
      cfg.threads = 1;
      const BnbResult res = minimize(obj, oracle_box, cert, cfg);
      const double grid_min = grid_minimum(nets[i], oracle_box, n);

      if (res.status != BnbStatus::Converged) {
        ok = false;
        detail = "net " + std::to_string(i) + " did not converge";
      } else if (!(res.best_lower <= grid_min + 1e-12 &&
                   res.best_upper >= grid_min - slack - 1e-12)) {
        ok = false;
        detail = "net " + std::to_string(i) + " bounds [" + std::to_string(res.best_lower) +
                 ", " + std::to_string(res.best_upper) + "] miss grid interval around " +
                 std::to_string(grid_min);
      }
    }
    if (ok) {
      detail = std::to_string(kOracleNets) + "/" + std::to_string(kOracleNets) +
               " networks bracket the grid minimum (max grid slack " +
               std::to_string(worst_slack) + ")";
    }
    ledger.report(1, "bnb_grid_oracle", ok, detail, now_seconds() - t0);
  }

  // ---- 2: certified bounds dominate difference quotients -------------------
  {
    const double t0 = now_seconds();
    bool ok = true;
    std::string detail;
    double worst_slack = std::numeric_limits<double>::infinity();
    const int per_net = kQuotientTotal / kOracleNets;
    for (int i = 0; i < kOracleNets && ok; ++i) {
      const ObjectiveFunction obj(nets[i], Eigen::VectorXd::Ones(1));
      const double sdp = lipschitz_sdp(obj).bound;
      const double naive = lipschitz_naive(obj).bound;
      if (sdp > naive * (1.0 + kNaiveCap)) {
        ok = false;
        detail = "net " + std::to_string(i) + " semidefinite bound exceeds the layer product";
        break;
      }
      std::mt19937_64 rng(0xBEEF0000ULL + static_cast<std::uint64_t>(i));
      std::uniform_real_distribution<double> unif(-0.25, 0.25);
      for (int k = 0; k < per_net; ++k) {
        const Eigen::VectorXd x = vec2(unif(rng), unif(rng));
        const Eigen::VectorXd y = vec2(unif(rng), unif(rng));
        const double dist = (x - y).norm();
        if (dist < 1e-12) continue;
        const double slack = sdp - std::abs(obj(x) - obj(y)) / dist;
        worst_slack = std::min(worst_slack, slack);
        if (slack < kQuotientSlack) {
          ok = false;
          detail = "net " + std::to_string(i) + " quotient exceeds the certificate by " +
                   std::to_string(-slack);
          break;
        }
      }
    }

    if (ok) {
      // Affine chains: identity activations make the objective affine, so the
      // certificate must match the exact gradient norm almost exactly.
      for (std::uint64_t seed = 0; seed < 5 && ok; ++seed) {
        std::mt19937_64 rng(0xAFF1000ULL + seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd W0(3, 2), W1(1, 3);
        for (Eigen::Index i = 0; i < W0.size(); ++i) W0(i) = gauss(rng);
        for (Eigen::Index i = 0; i < W1.size(); ++i) W1(i) = gauss(rng);
        const NeuralNetwork net(
            {{W0, Eigen::VectorXd::Zero(3)}, {W1, Eigen::VectorXd::Zero(1)}},
            ActivationSector::for_kind(ActivationKind::Identity));
        const double exact = (W1 * W0).norm();
        const double bound = lipschitz_sdp(ObjectiveFunction(net, Eigen::VectorXd::Ones(1))).bound;
        if (bound < exact * (1.0 - 1e-12) || bound > exact * (1.0 + kAffineRelTol)) {
          ok = false;
          detail = "affine chain " + std::to_string(seed) + ": bound " + std::to_string(bound) +
                   " vs exact " + std::to_string(exact);
        }
      }
    }
    if (ok) {
      detail = std::to_string(kQuotientTotal) + " quotients below certificates (worst slack " +
               std::to_string(worst_slack) + "), affine chains exact to 1e-6";
    }
    ledger.report(2, "lipschitz_soundness", ok, detail, now_seconds() - t0);
  }

  // ---- double-integrator sweep shared by checks 3, 4, 5, 6, 7, 9 ----------
  DiSweep sweep;
  NeuralNetwork di_net = load_network(fixture("double_integrator.json"));
  try {
    sweep.problem = load_problem(fixture("double_integrator_problem.json"));
    for (double eps : sweep.epsilons) {
      const double t0 = now_seconds();
      sweep.refined.push_back(run_reach(sweep.problem, di_net, eps, 4, 1, false));
      if (eps == sweep.epsilons.back()) sweep.seconds_at_finest = now_seconds() - t0;
      sweep.plain.push_back(run_reach(sweep.problem, di_net, eps, 1, 1, false));
    }
    sweep.loaded = true;
  } catch (const std::exception& e) {
    std::printf("double-integrator sweep failed to run: %s\n", e.what());
  }

  // ---- 3: every converged run meets its gap, within the time budget -------
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    if (ok) {
      double worst_rel = 0.0;
      for (std::size_t e = 0; e < sweep.epsilons.size() && ok; ++e) {
        const double eps = sweep.epsilons[e];
        for (const ReachabilityResult* run : {&sweep.refined[e], &sweep.plain[e]}) {
          for (const DirectionSolve& s : run->solves) {
            if (s.result.status != BnbStatus::Converged) {
              ok = false;
              detail = "solve did not converge at epsilon " + std::to_string(eps);
              break;
            }
            const double gap = s.result.best_upper - s.result.best_lower;
            worst_rel = std::max(worst_rel, gap / eps);
            if (gap > eps) {
              ok = false;
              detail = "gap " + std::to_string(gap) + " exceeds epsilon " + std::to_string(eps);
              break;
            }
          }
          if (!ok) break;
        }
      }
      if (ok && sweep.seconds_at_finest > kDiBudgetSeconds) {
        ok = false;
        detail = "finest run took " + std::to_string(sweep.seconds_at_finest) + "s";
      }
      if (ok) {
        detail = "all gaps within epsilon over {0.1, 0.01, 0.001} (worst gap/epsilon " +
                 std::to_string(worst_rel) + "), finest run " +
                 std::to_string(sweep.seconds_at_finest) + "s";
      }
    }
    ledger.report(3, "gap_contract", ok, detail, now_seconds() - t0);
  }

  // ---- 4: the five-step recursion solves exactly twenty problems ----------
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    if (ok) {
      for (std::size_t e = 0; e < sweep.epsilons.size() && ok; ++e) {
        const std::size_t n4 = sweep.refined[e].solves.size();
        const std::size_t n1 = sweep.plain[e].solves.size();
        if (n4 != 20 || n1 != 20) {
          ok = false;
          detail = "expected 20 solves, saw " + std::to_string(n4) + " and " +
                   std::to_string(n1);
        }
      }
      if (ok) detail = "exactly 20 optimization problems per 5-step run";
    }
    ledger.report(4, "problem_count", ok, detail, now_seconds() - t0);
  }

  // ---- 5: lower-bound refinement strictly reduces branching ---------------
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    if (ok) {
      std::string parts;
      for (std::size_t e = 0; e < sweep.epsilons.size() && ok; ++e) {
        const std::int64_t refined = total_branches(sweep.refined[e]);
        const std::int64_t plain = total_branches(sweep.plain[e]);
        if (!(refined < plain)) {
          ok = false;
          detail = "refinement did not reduce branches at epsilon " +
                   std::to_string(sweep.epsilons[e]) + " (" + std::to_string(refined) +
                   " vs " + std::to_string(plain) + ")";
        } else {
          if (!parts.empty()) parts += ", ";
          parts += std::to_string(refined) + "<" + std::to_string(plain);
        }
      }
      if (ok) detail = "branch totals with/without refinement: " + parts;
    }
    ledger.report(5, "refinement_direction", ok, detail, now_seconds() - t0);
  }

  // ---- 6: fresh trajectories stay inside every step set -------------------
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    std::string quad_detail;
    double quad_seconds = 0.0;
    if (ok) {
      ok = trajectories_contained(sweep.problem, di_net, sweep.refined.back(), 0xD1D1, detail);
    }
    if (ok) {
      try {
        const ProblemFile quad = load_problem(fixture("quadrotor_problem.json"));
        const NeuralNetwork quad_net = load_network(fixture("quadrotor.json"));
        const double q0 = now_seconds();
        const ReachabilityResult run = run_reach(quad, quad_net, 0.1, 4, 1, false);
        quad_seconds = now_seconds() - q0;
        if (quad_seconds > kQuadBudgetSeconds) {
          ok = false;
          detail = "quadrotor run took " + std::to_string(quad_seconds) + "s";
        } else {
          ok = trajectories_contained(quad, quad_net, run, 0xD2D2, quad_detail);
          if (!ok) detail = "quadrotor: " + quad_detail;
        }
      } catch (const std::exception& e) {
        ok = false;
        detail = std::string("quadrotor run failed: ") + e.what();
      }
    }
    if (ok) {
      detail = "double integrator and quadrotor contain " +
               std::to_string(kFreshTrajectories) + " fresh trajectories each; quadrotor " +
               std::to_string(quad_seconds) + "s";
    }
    ledger.report(6, "reachability_soundness", ok, detail, now_seconds() - t0);
  }

  // ---- 7: the data-driven basis beats axis alignment on the final step ----
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    if (ok) {
      const double eps = sweep.epsilons.back();
      const ReachabilityResult axis = run_reach(sweep.problem, di_net, eps, 4, 1, true);
      const double rotated = sweep.refined.back().sets.back().volume();
      const double aligned = axis.sets.back().volume();
      ok = rotated <= aligned;
      detail = "final-step area " + std::to_string(rotated) + " rotated vs " +
               std::to_string(aligned) + " axis-aligned";
      if (!ok) detail += " (regression: rotation enlarged the set)";
    }
    ledger.report(7, "pca_benefit", ok, detail, now_seconds() - t0);
  }

  // ---- 8: verification mode stops at sign certificates --------------------
  {
    const double t0 = now_seconds();
    bool ok = true;
    std::string detail;

    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    const NeuralNetwork positive({{eye, Eigen::VectorXd::Zero(2)}, {eye, vec2(2.0, 0.0)}},
                                 ActivationSector::for_kind(ActivationKind::Identity));
    const NeuralNetwork crossing({{eye, Eigen::VectorXd::Zero(2)}, {eye, vec2(-0.5, 0.0)}},
                                 ActivationSector::for_kind(ActivationKind::Identity));
    const Rectangle box(vec2(0.0, 0.0), vec2(1.0, 1.0));
    BnbConfig cfg;
    cfg.epsilon = 1e-6;
    cfg.verify_mode = true;

    const ObjectiveFunction obj_pos(positive, vec2(1.0, 0.0));
    const LipschitzCertificate cert_pos = lipschitz_sdp(obj_pos);
    const BnbResult res_pos = minimize(obj_pos, box, cert_pos, cfg);
    if (res_pos.status != BnbStatus::VerifiedNonnegative || res_pos.best_lower < 0.0) {
      ok = false;
      detail = "minimum +2 problem ended as " + to_string(res_pos.status);
    }

    if (ok) {
      const ObjectiveFunction obj_neg(crossing, vec2(1.0, 0.0));
      const LipschitzCertificate cert_neg = lipschitz_sdp(obj_neg);
      const BnbResult res_neg = minimize(obj_neg, box, cert_neg, cfg);
      const bool witness_ok = res_neg.witness.size() == 2 &&
                              box.contains(res_neg.witness, 1e-12) &&
                              objective_eval(obj_neg, res_neg.witness) < 0.0;
      if (res_neg.status != BnbStatus::CounterexampleFound || !witness_ok) {
        ok = false;
        detail = "sign-crossing problem ended as " + to_string(res_neg.status) +
                 (witness_ok ? "" : " with an invalid witness");
      }
    }
    if (ok) detail = "sign certificates and witness verified";
    ledger.report(8, "early_termination", ok, detail, now_seconds() - t0);
  }

  // ---- 9: results are independent of the thread count ---------------------
  {
    const double t0 = now_seconds();
    bool ok = sweep.loaded;
    std::string detail = "sweep did not run";
    if (ok) {
      const ReachabilityResult one = run_reach(sweep.problem, di_net, 0.01, 4, 1, false);
      const ReachabilityResult many = run_reach(sweep.problem, di_net, 0.01, 4, 4, false);
      if (one.solves.size() != many.solves.size()) {
        ok = false;
        detail = "solve counts differ across thread counts";
      }
      for (std::size_t i = 0; ok && i < one.solves.size(); ++i) {
        const BnbResult& a = one.solves[i].result;
        const BnbResult& b = many.solves[i].result;
        if (a.best_lower != b.best_lower || a.best_upper != b.best_upper) {
          ok = false;
          detail = "bounds differ at solve " + std::to_string(i);
        } else if (normalized_solve_record(one.solves[i]) !=
                   normalized_solve_record(many.solves[i])) {
          ok = false;
          detail = "records differ at solve " + std::to_string(i);
        }
      }
      if (ok) {
        detail = "1-thread and 4-thread runs agree on every bound and record";
      }
    }
    ledger.report(9, "determinism", ok, detail, now_seconds() - t0);
  }

  if (ledger.failures == 0) {
    std::printf("acceptance: 9/9 checks passed\n");
    return 0;
  }
  std::printf("acceptance: %d check(s) failed\n", ledger.failures);
  return 1;
}
