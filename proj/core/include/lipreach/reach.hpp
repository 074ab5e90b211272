#pragma once

#include <cstdint>
#include <vector>

#include "lipreach/bnb.hpp"
#include "lipreach/lipschitz.hpp"
#include "lipreach/network.hpp"
#include "lipreach/rectangle.hpp"

namespace lipreach {

/// Discrete-time affine dynamics x_{t+1} = A_t x_t + B_t f(x_t) + c_t with a
/// possibly time-varying matrix sequence (one entry per step, or a single
/// entry replicated by the loader).
struct LinearDynamics {
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B;
  std::vector<Eigen::VectorXd> c;
  int horizon = 0;
  double dt = 1.0;

  LinearDynamics(std::vector<Eigen::MatrixXd> A_seq, std::vector<Eigen::MatrixXd> B_seq,
                 std::vector<Eigen::VectorXd> c_seq, int horizon, double dt);

  int state_dim() const { return static_cast<int>(A.front().rows()); }
  int control_dim() const { return static_cast<int>(B.front().cols()); }
};

/// Image of an axis-aligned box under an orthonormal change of basis:
/// {R y : y in bounds}.
struct RotatedRectangle {
  Eigen::MatrixXd rotation;
  Rectangle bounds;

  RotatedRectangle(Eigen::MatrixXd R, Rectangle box);

  int dim() const { return bounds.dim(); }

  /// max_{x in set} d . x  (closed form through the box representation).
  double support(const Eigen::VectorXd& d) const;

  /// True when x lies in the set up to the given slack per coordinate.
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

  /// Product of edge lengths of the underlying box.
  double volume() const { return bounds.volume(); }
};

/// Closed half-space {x : normal . x <= offset}.
struct HalfSpace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

/// True when the set lies inside every half-space (exact test).
bool contained_in(const RotatedRectangle& set, const std::vector<HalfSpace>& halfspaces);

/// True when some half-space of the description separates the set from the
/// region (sufficient disjointness certificate; exact for single half-spaces).
bool certified_disjoint(const RotatedRectangle& set, const std::vector<HalfSpace>& region);

struct PcaResult {
  Eigen::MatrixXd rotation;
  bool degenerate = false;  // fewer than two points or zero spread
};

/// Orthonormal basis of principal directions (descending variance), with a
/// QR cleanup pass and a deterministic sign rule: each column's
/// largest-magnitude entry is positive, ties resolved to the lowest index.
PcaResult pca_directions(const std::vector<Eigen::VectorXd>& points);

/// Rolls `samples` uniformly drawn start states through the closed loop.
/// Returns [samples][horizon + 1] state trajectories. Deterministic in seed.
std::vector<std::vector<Eigen::VectorXd>> simulate(const LinearDynamics& dyn,
                                                   const NeuralNetwork& net,
                                                   const RotatedRectangle& init, int samples,
                                                   std::uint64_t seed);

/// One branch-and-bound solve inside a reachability run.
struct DirectionSolve {
  int step = 0;             // transition t -> t+1
  int direction = 0;        // column index into the step's rotation
  bool negated = false;     // true for the upper-face solve
  BnbResult result;
  LipschitzCertificate certificate;
};

struct ReachConfig {
  BnbConfig bnb;
  int samples = 100;
  std::uint64_t seed = 0;
  bool identity_rotation = false;       // disable data-driven bases
  LipschitzMethod lipschitz_method = LipschitzMethod::Sdp;
  bool localize_sectors = true;         // use pre-activation intervals (ReLU)
};

struct ReachabilityResult {
  std::vector<RotatedRectangle> sets;   // step 0 .. horizon
  std::vector<DirectionSolve> solves;   // 2 * state_dim per step
  std::vector<std::vector<Eigen::VectorXd>> trajectories;
  std::vector<int> degenerate_rotation_steps;
  bool any_node_cap = false;
};

/// Tightest faces of the next rotated rectangle: for every column r of
/// next_rotation, minimizes r . (A R y + B f(R y)) and its negation over the
/// current box (2 * state_dim solves), then shifts by r . c_t. Certificates
/// come in face order: index 2i covers column i's lower face, 2i + 1 the
/// negated (upper) face. Warm points are in the current box's y-coordinates.
RotatedRectangle step_overapprox(const LinearDynamics& dyn, int t, const NeuralNetwork& net,
                                 const RotatedRectangle& current,
                                 const Eigen::MatrixXd& next_rotation,
                                 const std::vector<LipschitzCertificate>& certificates,
                                 const BnbConfig& cfg,
                                 const std::vector<Eigen::VectorXd>& warm_points,
                                 std::vector<DirectionSolve>* solves = nullptr);

/// One certified support value of the output set {f(x) : x in box}.
struct DirectionBound {
  Eigen::VectorXd direction;
  double support = 0.0;  // certified upper bound on direction . f(x)
  BnbResult result;
  LipschitzCertificate certificate;
};

/// Open-loop analogue of the recursion's face solves for an arbitrary
/// direction list: certifies sup_x d . f(x) per direction by minimizing the
/// negated objective. Warm points are drawn uniformly from the box.
std::vector<DirectionBound> open_loop_supports(const NeuralNetwork& net, const Rectangle& box,
                                               const std::vector<Eigen::VectorXd>& directions,
                                               const ReachConfig& cfg);

/// Full reachable-set recursion: samples trajectories, picks each step's
/// basis from the next-step sample cloud (unless identity_rotation), certifies
/// per-direction Lipschitz bounds once per +/- pair, and tightens every face
/// with branch-and-bound. The initial set must be axis-aligned (R = I).
ReachabilityResult reach(const LinearDynamics& dyn, const NeuralNetwork& net,
                         const RotatedRectangle& init, const ReachConfig& cfg);

}  // namespace lipreach
