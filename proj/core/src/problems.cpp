#include "lipreach/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lipreach/errors.hpp"
#include "lipreach/network.hpp"

namespace lipreach {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kContainTol = 1e-9;

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double sym(std::mt19937_64& rng) { return 2.0 * unit(rng) - 1.0; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("problem file '" + path + "' is not valid JSON: " + e.what());
  }
}

Eigen::VectorXd vector_from(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty()) {
    throw ParseError(std::string(what) + " must be a nonempty array");
  }
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string(what) + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
    throw ParseError(std::string(what) + " must be a nonempty array of rows");
  }
  const std::size_t cols = rows[0].size();
  Eigen::MatrixXd M(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ParseError(std::string(what) + " rows must have equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!rows[i][j].is_number()) throw ParseError(std::string(what) + " must hold numbers");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return M;
}

// A field holding either one matrix (replicated) or a per-step list.
std::vector<Eigen::MatrixXd> matrix_sequence(const json& node, int horizon, const char* what) {
  if (!node.is_array() || node.empty() || !node[0].is_array() || node[0].empty()) {
    throw ParseError(std::string(what) + " must be a matrix or a list of matrices");
  }
  std::vector<Eigen::MatrixXd> seq;
  if (node[0][0].is_array()) {
    for (const json& m : node) seq.push_back(matrix_from(m, what));
  } else {
    seq.assign(static_cast<std::size_t>(horizon), matrix_from(node, what));
  }
  return seq;
}

std::vector<Eigen::VectorXd> vector_sequence(const json& node, int horizon, const char* what) {
  if (!node.is_array() || node.empty()) {
    throw ParseError(std::string(what) + " must be a vector or a list of vectors");
  }
  std::vector<Eigen::VectorXd> seq;
  if (node[0].is_array()) {
    for (const json& v : node) seq.push_back(vector_from(v, what));
  } else {
    seq.assign(static_cast<std::size_t>(horizon), vector_from(node, what));
  }
  return seq;
}

Rectangle rectangle_from(const json& node, const char* what) {
  if (!node.is_object() || !node.contains("lower") || !node.contains("upper")) {
    throw ParseError(std::string(what) + " must carry 'lower' and 'upper' arrays");
  }
  return Rectangle(vector_from(node.at("lower"), what), vector_from(node.at("upper"), what));
}

std::vector<HalfSpace> halfspaces_from(const json& arr, const char* what) {
  std::vector<HalfSpace> out;
  for (const json& h : arr) {
    if (!h.is_object() || !h.contains("normal") || !h.contains("offset")) {
      throw ParseError(std::string(what) + " entries must carry 'normal' and 'offset'");
    }
    out.push_back({vector_from(h.at("normal"), what), h.at("offset").get<double>()});
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file '" + path + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// Fixture training: random hidden layers (optionally with paired +/- identity
// channels so the linear part of the target is exactly representable) and a
// ridge-fitted affine output layer.
// ---------------------------------------------------------------------------

struct ElmSpec {
  std::vector<int> arch;
  int identity_dims = 0;  // 0 disables the pass-through channels
  Rectangle train_box;
  int train_points = 2000;
  int test_points = 500;
  double fit_tol = 0.05;
  std::uint64_t seed = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> target;
};

Eigen::VectorXd draw_in_box(const Rectangle& box, std::mt19937_64& rng) {
  Eigen::VectorXd x(box.dim());
  for (int i = 0; i < box.dim(); ++i) {
    x[i] = box.lower()[i] + (box.upper()[i] - box.lower()[i]) * unit(rng);
  }
  return x;
}

NeuralNetwork elm_fit(const ElmSpec& s) {
  const int depth = static_cast<int>(s.arch.size()) - 2;
  if (depth < 1) throw std::invalid_argument("fixture networks need a hidden layer");
  std::mt19937_64 rng(s.seed);

  std::vector<Layer> layers;
  for (int k = 0; k < depth; ++k) {
    const int rows = s.arch[static_cast<std::size_t>(k) + 1];
    const int cols = s.arch[static_cast<std::size_t>(k)];
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    int first_random = 0;
    if (s.identity_dims > 0) {
      const int d = s.identity_dims;
      if (rows < 2 * d) throw std::invalid_argument("layer too narrow for identity channels");
      if (k == 0) {
        for (int i = 0; i < d; ++i) {
          W(i, i) = 1.0;
          W(d + i, i) = -1.0;
        }
      } else {
        // relu(x) - relu(-x) = x lets each layer rebuild +/- coordinates.
        for (int i = 0; i < d; ++i) {
          W(i, i) = 1.0;
          W(i, d + i) = -1.0;
          W(d + i, i) = -1.0;
          W(d + i, d + i) = 1.0;
        }
      }
      first_random = 2 * d;
    }
    const double scale = (k == 0) ? 1.0 : 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = first_random; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) W(i, j) = sym(rng) * scale;
      if (k == 0) {
        // Place the kink at a random in-box point for feature diversity.
        b[i] = -W.row(i).dot(draw_in_box(s.train_box, rng));
      } else {
        b[i] = sym(rng);
      }
    }
    layers.push_back({std::move(W), std::move(b)});
  }

  auto hidden_features = [&layers](const Eigen::VectorXd& x) {
    Eigen::VectorXd h = x;
    for (const Layer& l : layers) {
      h = (l.W * h + l.b).cwiseMax(0.0);
    }
    return h;
  };

  const int F = s.arch[static_cast<std::size_t>(depth)];
  const int n_out = s.arch.back();
  Eigen::MatrixXd Phi(s.train_points, F + 1);
  Eigen::MatrixXd U(s.train_points, n_out);
  for (int j = 0; j < s.train_points; ++j) {
    const Eigen::VectorXd x = draw_in_box(s.train_box, rng);
    Phi.row(j).head(F) = hidden_features(x).transpose();
    Phi(j, F) = 1.0;
    U.row(j) = s.target(x).transpose();
  }
  const double ridge = 1e-8 * static_cast<double>(s.train_points);
  Eigen::MatrixXd G = Phi.transpose() * Phi;
  G.diagonal().array() += ridge;
  const Eigen::MatrixXd Theta = G.ldlt().solve(Phi.transpose() * U);  // (F+1) x n_out

  Layer out_layer;
  out_layer.W = Theta.topRows(F).transpose();
  out_layer.b = Theta.row(F).transpose();
  layers.push_back(std::move(out_layer));

  NeuralNetwork net(std::move(layers), ActivationSector::for_kind(ActivationKind::ReLU));

  std::mt19937_64 test_rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
  double worst = 0.0;
  for (int j = 0; j < s.test_points; ++j) {
    const Eigen::VectorXd x = draw_in_box(s.train_box, test_rng);
    worst = std::max(worst, (net.forward(x) - s.target(x)).cwiseAbs().maxCoeff());
  }
  if (worst > s.fit_tol) {
    throw NumericalError("fixture fit error " + fmt(worst) + " exceeds tolerance " +
                         fmt(s.fit_tol));
  }
  return net;
}

void assert_closed_loop_bounded(const NeuralNetwork& net, const LinearDynamics& dyn,
                                const Rectangle& init, double bound) {
  const int n = init.dim();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
      x[i] = (mask >> i) & 1 ? init.upper()[i] : init.lower()[i];
    }
    for (int t = 0; t < dyn.horizon; ++t) {
      x = dyn.A[static_cast<std::size_t>(t)] * x +
          dyn.B[static_cast<std::size_t>(t)] * net.forward(x) + dyn.c[static_cast<std::size_t>(t)];
      if (x.cwiseAbs().maxCoeff() > bound) {
        throw NumericalError("fixture closed loop leaves the sanity bound " + fmt(bound) +
                             " at step " + std::to_string(t + 1));
      }
    }
  }
}

LinearDynamics double_integrator_dynamics() {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 1.0, 0.0, 1.0;
  Eigen::MatrixXd B(2, 1);
  B << 0.5, 1.0;
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
  return LinearDynamics({A}, {B}, {c}, 1, 1.0);  // one step; replicated by the loader
}

LinearDynamics quadrotor_dynamics() {
  const double dt = 0.1;
  const double g = 9.81;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(6, 6);
  A.block(0, 3, 3, 3) = dt * Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 3);
  B(3, 0) = dt * g;
  B(4, 1) = -dt * g;
  B(5, 2) = dt;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
  c[5] = -dt * g;
  return LinearDynamics({A}, {B}, {c}, 1, dt);
}

Rectangle quadrotor_initial_box() {
  Eigen::VectorXd lo(6), hi(6);
  lo << 4.69, 4.65, 2.975, 0.9499, -1e-4, -1e-4;
  hi << 4.71, 4.75, 3.025, 0.9501, 1e-4, 1e-4;
  return Rectangle(lo, hi);
}

Rectangle double_integrator_initial_box() {
  Eigen::VectorXd lo(2), hi(2);
  lo << 2.5, -0.25;
  hi << 3.0, 0.25;
  return Rectangle(lo, hi);
}

ReachConfig base_reach_config(const ProblemFile& pf, const BenchOptions& opts) {
  ReachConfig rc;
  rc.bnb.epsilon = opts.epsilon.value_or(pf.epsilon);
  rc.bnb.threads = opts.threads;
  rc.samples = pf.samples;
  rc.seed = pf.seed;
  rc.lipschitz_method = opts.method;
  return rc;
}

// ---------------------------------------------------------------------------
// Benchmark runners
// ---------------------------------------------------------------------------

BenchRunResult run_robotic_arm(const ProblemFile& pf, const NeuralNetwork& net,
                               const BenchOptions& opts) {
  BenchRunResult out;
  ReachConfig rc = base_reach_config(pf, opts);
  rc.samples = std::min(pf.samples, 2000);  // warm points per solve
  out.epsilon = rc.bnb.epsilon;
  const Rectangle& box = pf.initial_set;

  const int n_uniform = pf.uniform_directions > 0 ? pf.uniform_directions : 60;
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(n_uniform));
  for (int k = 0; k < n_uniform; ++k) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_uniform);
    dirs.push_back(Eigen::Vector2d(std::cos(phi), std::sin(phi)));
  }
  std::vector<DirectionBound> uniform = open_loop_supports(net, box, dirs, rc);

  bool all_converged = static_cast<int>(uniform.size()) == n_uniform;
  for (const DirectionBound& b : uniform) {
    all_converged = all_converged && b.result.status == BnbStatus::Converged;
  }
  out.outcomes.push_back({"uniform_mode_converged", all_converged,
                          std::to_string(n_uniform) + " support solves at epsilon=" +
                              fmt(rc.bnb.epsilon) + ", all statuses converged"});

  // Fresh output cloud for PCA directions and Monte Carlo containment.
  std::mt19937_64 rng(pf.seed + 1);
  const int n_mc = opts.quick ? 2000 : 10000;
  std::vector<Eigen::VectorXd> outputs;
  outputs.reserve(static_cast<std::size_t>(n_mc));
  for (int j = 0; j < n_mc; ++j) outputs.push_back(net.forward(draw_in_box(box, rng)));

  const PcaResult pca = pca_directions(outputs);
  std::vector<Eigen::VectorXd> pca_dirs = {pca.rotation.col(0), -pca.rotation.col(0),
                                           pca.rotation.col(1), -pca.rotation.col(1)};
  std::vector<DirectionBound> pca_bounds = open_loop_supports(net, box, pca_dirs, rc);
  bool pca_converged = pca_bounds.size() == 4;
  for (const DirectionBound& b : pca_bounds) {
    pca_converged = pca_converged && b.result.status == BnbStatus::Converged;
  }
  out.outcomes.push_back(
      {"pca_mode_converged", pca_converged, "4 principal-direction solves, all converged"});

  // Dropping constraints can only grow the polyhedron: every point inside the
  // full uniform-direction polyhedron must land inside any subset's.
  const std::vector<int> subset = {0, n_uniform / 4, n_uniform / 2, (3 * n_uniform) / 4};
  auto inside = [&uniform](const Eigen::VectorXd& y, const std::vector<int>& idx) {
    for (int k : idx) {
      if (uniform[static_cast<std::size_t>(k)].direction.dot(y) >
          uniform[static_cast<std::size_t>(k)].support + kContainTol) {
        return false;
      }
    }
    return true;
  };
  std::vector<int> all_idx(static_cast<std::size_t>(n_uniform));
  for (int k = 0; k < n_uniform; ++k) all_idx[static_cast<std::size_t>(k)] = k;
  Eigen::VectorXd spread = Eigen::VectorXd::Zero(2);
  for (const Eigen::VectorXd& y : outputs) spread = spread.cwiseMax(y.cwiseAbs());
  bool dominance = true;
  long checked = 0;
  for (const Eigen::VectorXd& y : outputs) {
    Eigen::VectorXd probe = y;
    probe[0] += sym(rng) * 0.5 * (spread[0] + 1.0);
    probe[1] += sym(rng) * 0.5 * (spread[1] + 1.0);
    if (inside(probe, all_idx)) {
      ++checked;
      dominance = dominance && inside(probe, subset);
    }
  }
  out.outcomes.push_back({"subset_dominance", dominance && checked > 0,
                          std::to_string(checked) +
                              " in-polyhedron probes stayed inside the 4-constraint subset"});

  bool contained = true;
  double worst_slack = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& y : outputs) {
    for (const DirectionBound& b : uniform) {
      worst_slack = std::max(worst_slack, b.direction.dot(y) - b.support);
    }
    for (const DirectionBound& b : pca_bounds) {
      worst_slack = std::max(worst_slack, b.direction.dot(y) - b.support);
    }
  }
  contained = worst_slack <= kContainTol;
  out.outcomes.push_back({"monte_carlo_containment", contained,
                          std::to_string(n_mc) + " sampled outputs inside every face; worst slack " +
                              fmt(worst_slack)});

  out.supports = std::move(uniform);
  out.supports.insert(out.supports.end(), pca_bounds.begin(), pca_bounds.end());
  return out;
}

std::int64_t total_branches(const ReachabilityResult& r) {
  std::int64_t total = 0;
  for (const DirectionSolve& s : r.solves) total += s.result.stats.nodes_branched;
  return total;
}

BenchRunResult run_double_integrator(const ProblemFile& pf, const NeuralNetwork& net,
                                     const BenchOptions& opts) {
  BenchRunResult out;
  const LinearDynamics& dyn = *pf.dynamics;
  const int n = dyn.state_dim();
  const RotatedRectangle init(Eigen::MatrixXd::Identity(n, n), pf.initial_set);

  const std::vector<double> sweep =
      opts.epsilon ? std::vector<double>{*opts.epsilon} : std::vector<double>{0.1, 0.01, 0.001};

  std::optional<ReachabilityResult> primary;
  for (const double eps : sweep) {
    ReachConfig c4 = base_reach_config(pf, opts);
    c4.bnb.epsilon = eps;
    c4.bnb.refine_splits = 4;
    ReachabilityResult r4 = reach(dyn, net, init, c4);

    ReachConfig c1 = c4;
    c1.bnb.refine_splits = 1;
    const ReachabilityResult r1 = reach(dyn, net, init, c1);

    const int expected = 2 * n * dyn.horizon;
    out.outcomes.push_back({"solve_count_eps_" + fmt(eps),
                            static_cast<int>(r4.solves.size()) == expected,
                            "expected " + std::to_string(expected) + " solves, performed " +
                                std::to_string(r4.solves.size())});

    const std::int64_t b4 = total_branches(r4);
    const std::int64_t b1 = total_branches(r1);
    out.outcomes.push_back({"branch_reduction_eps_" + fmt(eps), b4 < b1,
                            "total branches " + std::to_string(b4) +
                                " with refinement vs " + std::to_string(b1) + " without"});

    bool gaps_ok = true;
    double worst_gap = 0.0;
    const ReachabilityResult* runs[] = {&r4, &r1};
    for (const ReachabilityResult* r : runs) {
      for (const DirectionSolve& s : r->solves) {
        if (s.result.status != BnbStatus::Converged) {
          gaps_ok = false;
          continue;
        }
        const double gap = s.result.best_upper - s.result.best_lower;
        worst_gap = std::max(worst_gap, gap);
        gaps_ok = gaps_ok && gap <= eps;
      }
    }
    out.outcomes.push_back({"gap_contract_eps_" + fmt(eps), gaps_ok,
                            "worst converged gap " + fmt(worst_gap) + " <= " + fmt(eps)});

    primary = std::move(r4);
    out.epsilon = eps;
  }

  // Containment of fresh trajectories at the primary epsilon.
  const int n_mc = opts.quick ? 1000 : 10000;
  const auto fresh = simulate(dyn, net, init, n_mc, pf.seed + 101);
  bool contained = true;
  for (const auto& traj : fresh) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      contained = contained && primary->sets[t].contains(traj[t], kContainTol);
    }
  }
  out.outcomes.push_back({"containment", contained,
                          std::to_string(n_mc) +
                              " fresh trajectories inside every step set (tolerance 1e-9)"});

  // Data-driven bases should not lose to axis-aligned ones on this fixture.
  ReachConfig ci = base_reach_config(pf, opts);
  ci.bnb.epsilon = out.epsilon;
  ci.bnb.refine_splits = 4;
  ci.identity_rotation = true;
  const ReachabilityResult rid = reach(dyn, net, init, ci);
  const double area_pca = primary->sets.back().volume();
  const double area_axis = rid.sets.back().volume();
  out.outcomes.push_back({"pca_area", area_pca <= area_axis,
                          "final-step area " + fmt(area_pca) + " rotated vs " + fmt(area_axis) +
                              " axis-aligned"});

  out.reach = std::move(primary);
  return out;
}

BenchRunResult run_quadrotor(const ProblemFile& pf, const NeuralNetwork& net,
                             const BenchOptions& opts) {
  BenchRunResult out;
  const LinearDynamics& dyn = *pf.dynamics;
  const int n = dyn.state_dim();
  const RotatedRectangle init(Eigen::MatrixXd::Identity(n, n), pf.initial_set);

  ReachConfig rc = base_reach_config(pf, opts);
  rc.bnb.refine_splits = 4;
  out.epsilon = rc.bnb.epsilon;
  ReachabilityResult r = reach(dyn, net, init, rc);

  const Rectangle expected_box = quadrotor_initial_box();
  const bool box_exact = pf.initial_set.lower() == expected_box.lower() &&
                         pf.initial_set.upper() == expected_box.upper();
  out.outcomes.push_back(
      {"initial_box", box_exact, "problem file matches the published initial rectangle exactly"});

  const double duration = static_cast<double>(dyn.horizon) * dyn.dt;
  out.outcomes.push_back({"horizon_duration", std::abs(duration - 1.2) <= 1e-12,
                          "horizon*dt = " + fmt(duration)});

  const int n_mc = opts.quick ? 200 : 10000;
  const auto fresh = simulate(dyn, net, init, n_mc, pf.seed + 101);
  bool contained = true;
  for (const auto& traj : fresh) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      contained = contained && r.sets[t].contains(traj[t], kContainTol);
    }
  }
  out.outcomes.push_back({"containment", contained,
                          std::to_string(n_mc) +
                              " fresh trajectories inside every step set (tolerance 1e-9)"});

  out.outcomes.push_back({"no_node_cap", !r.any_node_cap,
                          "every face solve finished under the node budget"});

  out.reach = std::move(r);
  return out;
}

}  // namespace

ProblemFile load_problem(const std::string& path) {
  const json doc = read_json_file(path);
  for (const char* field : {"schema_version", "kind", "weights"}) {
    if (!doc.contains(field)) {
      throw ParseError("problem file is missing field '" + std::string(field) + "'");
    }
  }
  if (!doc.at("schema_version").is_number_integer() || doc.at("schema_version").get<int>() != 1) {
    throw ParseError("unsupported problem schema_version");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind != "open_loop" && kind != "closed_loop") {
    throw ParseError("problem kind must be 'open_loop' or 'closed_loop'");
  }

  ProblemFile pf;
  fs::path weights(doc.at("weights").get<std::string>());
  if (weights.is_relative()) weights = fs::path(path).parent_path() / weights;
  pf.weight_path = weights.string();

  if (doc.contains("epsilon")) pf.epsilon = doc.at("epsilon").get<double>();
  if (!(pf.epsilon > 0.0) || !std::isfinite(pf.epsilon)) {
    throw ParseError("epsilon must be positive and finite");
  }
  if (doc.contains("samples")) pf.samples = doc.at("samples").get<int>();
  if (pf.samples < 2) throw ParseError("samples must be at least 2");
  if (doc.contains("seed")) pf.seed = doc.at("seed").get<std::uint64_t>();

  if (kind == "open_loop") {
    if (!doc.contains("input_set")) throw ParseError("open-loop problems need 'input_set'");
    pf.initial_set = rectangle_from(doc.at("input_set"), "input_set");
    if (doc.contains("directions")) {
      const json& d = doc.at("directions");
      if (d.contains("uniform")) pf.uniform_directions = d.at("uniform").get<int>();
      if (d.contains("pca")) pf.pca_direction_mode = d.at("pca").get<bool>();
    }
  } else {
    for (const char* field : {"dynamics", "initial_set"}) {
      if (!doc.contains(field)) {
        throw ParseError("closed-loop problems need '" + std::string(field) + "'");
      }
    }
    pf.initial_set = rectangle_from(doc.at("initial_set"), "initial_set");
    const json& dj = doc.at("dynamics");
    for (const char* field : {"A", "B", "c", "dt", "horizon"}) {
      if (!dj.contains(field)) {
        throw ParseError("dynamics block is missing field '" + std::string(field) + "'");
      }
    }
    const int horizon = dj.at("horizon").get<int>();
    if (horizon < 1) throw ParseError("horizon must be at least 1");
    pf.dynamics.emplace(matrix_sequence(dj.at("A"), horizon, "A"),
                        matrix_sequence(dj.at("B"), horizon, "B"),
                        vector_sequence(dj.at("c"), horizon, "c"), horizon,
                        dj.at("dt").get<double>());
  }

  if (doc.contains("goal")) pf.goal = halfspaces_from(doc.at("goal"), "goal");
  if (doc.contains("avoid")) {
    for (const json& region : doc.at("avoid")) {
      pf.avoid.push_back(halfspaces_from(region, "avoid"));
    }
  }
  return pf;
}

BenchmarkSpec robotic_arm_spec() {
  return {"robotic_arm",
          "robotic_arm_problem.json",
          "robotic_arm.json",
          {"uniform_mode_converged", "pca_mode_converged", "subset_dominance",
           "monte_carlo_containment"}};
}

BenchmarkSpec double_integrator_spec() {
  return {"double_integrator",
          "double_integrator_problem.json",
          "double_integrator.json",
          {"solve_count", "branch_reduction", "gap_contract", "containment", "pca_area"}};
}

BenchmarkSpec quadrotor_spec() {
  return {"quadrotor",
          "quadrotor_problem.json",
          "quadrotor.json",
          {"initial_box", "horizon_duration", "containment", "no_node_cap"}};
}

std::vector<BenchmarkSpec> all_benchmarks() {
  return {robotic_arm_spec(), double_integrator_spec(), quadrotor_spec()};
}

BenchRunResult run_benchmark(const BenchmarkSpec& spec, const std::string& fixture_dir,
                             const BenchOptions& opts) {
  const std::string problem_path = (fs::path(fixture_dir) / spec.problem_file).string();
  const ProblemFile pf = load_problem(problem_path);
  const NeuralNetwork net = load_network(pf.weight_path);
  if (spec.name == "robotic_arm") return run_robotic_arm(pf, net, opts);
  if (spec.name == "double_integrator") return run_double_integrator(pf, net, opts);
  if (spec.name == "quadrotor") return run_quadrotor(pf, net, opts);
  throw std::invalid_argument("unknown benchmark '" + spec.name + "'");
}

std::vector<std::string> generate_fixtures(const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_text_file((fs::path(dir) / name).string(), content);
    written.push_back(name);
  };

  // Robotic arm: planar two-link forward kinematics (unit links) on the
  // angle box [pi/3, 2pi/3]^2, approximated by one 50-unit hidden layer.
  {
    const double lo = std::numbers::pi / 3.0;
    const double hi = 2.0 * std::numbers::pi / 3.0;
    ElmSpec s;
    s.arch = {2, 50, 2};
    s.identity_dims = 0;
    s.train_box = Rectangle(Eigen::Vector2d(lo, lo), Eigen::Vector2d(hi, hi));
    s.train_points = 3000;
    s.test_points = 500;
    s.fit_tol = 0.1;
    s.seed = 2641;
    s.target = [](const Eigen::VectorXd& th) {
      Eigen::VectorXd y(2);
      y[0] = std::cos(th[0]) + std::cos(th[0] + th[1]);
      y[1] = std::sin(th[0]) + std::sin(th[0] + th[1]);
      return y;
    };
    const NeuralNetwork net = elm_fit(s);
    save_network(net, (fs::path(dir) / "robotic_arm.json").string());
    written.push_back("robotic_arm.json");

    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "open_loop";
    doc["weights"] = "robotic_arm.json";
    doc["input_set"] = {{"lower", vector_to_json(s.train_box.lower())},
                        {"upper", vector_to_json(s.train_box.upper())}};
    doc["epsilon"] = 0.01;
    doc["samples"] = 2000;
    doc["seed"] = 7;
    doc["directions"] = {{"uniform", 60}, {"pca", true}};
    emit("robotic_arm_problem.json", doc.dump(1) + "\n");
  }

  // Double integrator: 2x10x5x1 controller imitating u = -0.3 x1 - 0.7 x2
  // (the imitated loop's poles sit at radius sqrt(0.45)).
  {
    ElmSpec s;
    s.arch = {2, 10, 5, 1};
    s.identity_dims = 2;
    s.train_box = Rectangle(Eigen::Vector2d(-6.0, -6.0), Eigen::Vector2d(6.0, 6.0));
    s.train_points = 2000;
    s.test_points = 500;
    s.fit_tol = 0.02;
    s.seed = 209;
    s.target = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd u(1);
      u[0] = -0.3 * x[0] - 0.7 * x[1];
      return u;
    };
    const NeuralNetwork net = elm_fit(s);

    const LinearDynamics dyn = double_integrator_dynamics();
    const LinearDynamics five(std::vector<Eigen::MatrixXd>(5, dyn.A[0]),
                              std::vector<Eigen::MatrixXd>(5, dyn.B[0]),
                              std::vector<Eigen::VectorXd>(5, dyn.c[0]), 5, 1.0);
    assert_closed_loop_bounded(net, five, double_integrator_initial_box(), 10.0);

    save_network(net, (fs::path(dir) / "double_integrator.json").string());
    written.push_back("double_integrator.json");

    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "closed_loop";
    doc["weights"] = "double_integrator.json";
    doc["dynamics"] = {{"A", matrix_to_json(dyn.A[0])},
                       {"B", matrix_to_json(dyn.B[0])},
                       {"c", vector_to_json(dyn.c[0])},
                       {"dt", 1.0},
                       {"horizon", 5}};
    doc["initial_set"] = {{"lower", vector_to_json(double_integrator_initial_box().lower())},
                          {"upper", vector_to_json(double_integrator_initial_box().upper())}};
    doc["epsilon"] = 0.01;
    doc["samples"] = 100;
    doc["seed"] = 3;
    emit("double_integrator_problem.json", doc.dump(1) + "\n");
  }

  // Quadrotor: 6x32x32x3 controller imitating per-axis PD feedback
  // u = ( -(p_x + 1.7 v_x)/g, (p_y + 1.7 v_y)/g, g - p_z - 1.7 v_z ).
  {
    const double g = 9.81;
    ElmSpec s;
    s.arch = {6, 32, 32, 3};
    s.identity_dims = 6;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(6, -8.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(6, 8.0);
    s.train_box = Rectangle(lo, hi);
    s.train_points = 5000;
    s.test_points = 1000;
    s.fit_tol = 0.05;
    s.seed = 937;
    s.target = [g](const Eigen::VectorXd& x) {
      Eigen::VectorXd u(3);
      u[0] = -(x[0] + 1.7 * x[3]) / g;
      u[1] = (x[1] + 1.7 * x[4]) / g;
      u[2] = g - x[2] - 1.7 * x[5];
      return u;
    };
    const NeuralNetwork net = elm_fit(s);

    const LinearDynamics one_step = quadrotor_dynamics();
    const LinearDynamics twelve(std::vector<Eigen::MatrixXd>(12, one_step.A[0]),
                                std::vector<Eigen::MatrixXd>(12, one_step.B[0]),
                                std::vector<Eigen::VectorXd>(12, one_step.c[0]), 12, 0.1);
    assert_closed_loop_bounded(net, twelve, quadrotor_initial_box(), 30.0);

    save_network(net, (fs::path(dir) / "quadrotor.json").string());
    written.push_back("quadrotor.json");

    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "closed_loop";
    doc["weights"] = "quadrotor.json";
    doc["dynamics"] = {{"A", matrix_to_json(one_step.A[0])},
                       {"B", matrix_to_json(one_step.B[0])},
                       {"c", vector_to_json(one_step.c[0])},
                       {"dt", 0.1},
                       {"horizon", 12}};
    doc["initial_set"] = {{"lower", vector_to_json(quadrotor_initial_box().lower())},
                          {"upper", vector_to_json(quadrotor_initial_box().upper())}};
    doc["epsilon"] = 0.1;
    doc["samples"] = 100;
    doc["seed"] = 11;
    emit("quadrotor_problem.json", doc.dump(1) + "\n");
  }

  return written;
}

}  // namespace lipreach
