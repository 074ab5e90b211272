#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lipreach/network.hpp"
#include "lipreach/rectangle.hpp"

namespace lipreach {

/// Strictness margin for semidefinite feasibility: the LMI matrix must have
/// largest eigenvalue <= -kPsdTolerance to count as feasible.
inline constexpr double kPsdTolerance = 1e-8;

/// The certified bound is compared against the layer-norm product bound with
/// this relative slack; the better certificate is returned.
inline constexpr double kNaiveCapSlack = 1e-6;

/// Power iteration parameters for spectral norms.
inline constexpr double kPowerIterTol = 1e-10;
inline constexpr int kPowerIterCap = 10000;

enum class LipschitzMethod { Sdp, NaiveProduct };

std::string to_string(LipschitzMethod m);

/// Certified Lipschitz bound for a scalar objective over its input box.
struct LipschitzCertificate {
  double bound = 0.0;                    // certified Lipschitz constant, >= 0
  LipschitzMethod method = LipschitzMethod::NaiveProduct;
  double rho = 0.0;                      // certified squared bound
  std::optional<Eigen::VectorXd> T_diag; // multiplier diagonal (Sdp only)
  double feasibility_margin = 0.0;       // largest LMI eigenvalue (Sdp only)
  bool solver_warning = false;           // true when the semidefinite search failed
};

/// Per-hidden-neuron slope bounds, layer-major over all hidden layers.
struct SectorBounds {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

/// Per-hidden-neuron pre-activation intervals, layer-major.
struct PreactivationBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  std::vector<int> layer_sizes;  // hidden layer widths [n_1, ..., n_L]
};

/// Block data of the quadratic-form feasibility program whose solutions
/// certify squared Lipschitz bounds rho for the objective.
struct LmiSystem {
  Eigen::MatrixXd A_F;  // N x (n0 + N)
  Eigen::MatrixXd B_F;  // N x (n0 + N)
  Eigen::MatrixXd C_F;  // 1 x (n0 + N)
  Eigen::MatrixXd D_F;  // n0 x (n0 + N)
  SectorBounds sector;  // length-N slope bounds
  int n0 = 0;           // optimization-variable dimension
  int N = 0;            // total hidden neurons
};

struct FeasibilityCheck {
  bool feasible = false;
  double margin = 0.0;  // largest eigenvalue of the assembled matrix
};

/// Assembles the block system for the given objective and slope bounds.
/// Requires at least one hidden layer.
LmiSystem build_lmi(const ObjectiveFunction& obj, const SectorBounds& sector);

/// Assembles the symmetric matrix M(rho, T) whose negative semidefiniteness
/// certifies that sqrt(rho) bounds the objective's Lipschitz constant.
Eigen::MatrixXd lmi_matrix(const LmiSystem& lmi, double rho, const Eigen::VectorXd& T_diag);

/// Checks M(rho, T) <= -kPsdTolerance * I via symmetric eigendecomposition.
FeasibilityCheck check_lmi_feasible(const LmiSystem& lmi, double rho,
                                    const Eigen::VectorXd& T_diag);

/// Layer-norm product bound:
///   ||c^T A R|| + ||c^T B W^L|| * beta^Lbar * prod_k ||W^k|| * ||R||,
/// with the product over hidden layers. Always sound, usually loose.
LipschitzCertificate lipschitz_naive(const ObjectiveFunction& obj);

/// Certified bound from the semidefinite feasibility search, localized with
/// pre-activation sectors when bounds are supplied (ReLU networks only; other
/// activations use their global sector). Returns whichever of the
/// semidefinite and layer-norm certificates is smaller.
LipschitzCertificate lipschitz_sdp(const ObjectiveFunction& obj,
                                   const std::optional<PreactivationBounds>& bounds = std::nullopt);

/// Interval propagation of box (in y-coordinates, x = R y) through the
/// network, recording each hidden neuron's pre-activation interval.
PreactivationBounds preactivation_intervals(const NeuralNetwork& net, const Rectangle& box,
                                            const Eigen::MatrixXd& rotation);

/// Per-neuron slope localization from pre-activation signs (ReLU only):
/// lo >= 0 -> (1,1); hi <= 0 -> (0,0); otherwise (0,1).
SectorBounds sector_localize(const PreactivationBounds& bounds, ActivationKind kind);

/// Replicates the activation's global sector across all hidden neurons.
SectorBounds global_sectors(const NeuralNetwork& net);

/// Largest singular value via power iteration (tolerance kPowerIterTol,
/// iteration cap kPowerIterCap, deterministic start vector).
double spectral_norm(const Eigen::MatrixXd& m);

}  // namespace lipreach
