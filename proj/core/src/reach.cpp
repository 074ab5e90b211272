#include "lipreach/reach.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "lipreach/errors.hpp"

namespace lipreach {

namespace {

constexpr double kOrthoTol = 1e-10;

void require_orthonormal(const Eigen::MatrixXd& R, const char* what) {
  if (R.rows() != R.cols()) throw DimensionError(std::string(what) + " must be square");
  const Eigen::MatrixXd gram = R.transpose() * R;
  const double err =
      (gram - Eigen::MatrixXd::Identity(R.rows(), R.cols())).cwiseAbs().maxCoeff();
  if (err > kOrthoTol) {
    throw DimensionError(std::string(what) + " must be orthonormal (deviation " +
                         std::to_string(err) + ")");
  }
}

double unit_from_bits(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // uniform in [0, 1)
}

}  // namespace

LinearDynamics::LinearDynamics(std::vector<Eigen::MatrixXd> A_seq,
                               std::vector<Eigen::MatrixXd> B_seq,
                               std::vector<Eigen::VectorXd> c_seq, int horizon_in, double dt_in)
    : A(std::move(A_seq)), B(std::move(B_seq)), c(std::move(c_seq)), horizon(horizon_in), dt(dt_in) {
  if (horizon < 1) throw DimensionError("horizon must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DimensionError("dt must be positive and finite");
  if (static_cast<int>(A.size()) < horizon || static_cast<int>(B.size()) < horizon ||
      static_cast<int>(c.size()) < horizon) {
    throw DimensionError("dynamics sequences must cover the horizon");
  }
  const Eigen::Index n = A.front().rows();
  const Eigen::Index m = B.front().cols();
  for (int t = 0; t < horizon; ++t) {
    if (A[t].rows() != n || A[t].cols() != n) throw DimensionError("state matrices must be square and consistent");
    if (B[t].rows() != n || B[t].cols() != m) throw DimensionError("input matrices must be consistent");
    if (c[t].size() != n) throw DimensionError("offset vectors must match the state dimension");
    if (!A[t].allFinite() || !B[t].allFinite() || !c[t].allFinite()) {
      throw NonFiniteError("dynamics must be finite");
    }
  }
}

RotatedRectangle::RotatedRectangle(Eigen::MatrixXd R, Rectangle box)
    : rotation(std::move(R)), bounds(std::move(box)) {
  if (rotation.rows() != bounds.dim()) {
    throw DimensionError("rotation size must match the box dimension");
  }
  require_orthonormal(rotation, "rotation");
}

double RotatedRectangle::support(const Eigen::VectorXd& d) const {
  const Eigen::VectorXd w = rotation.transpose() * d;
  const Eigen::VectorXd rad = 0.5 * (bounds.upper() - bounds.lower());
  return w.dot(bounds.center()) + w.cwiseAbs().dot(rad);
}

bool RotatedRectangle::contains(const Eigen::VectorXd& x, double tol) const {
  return bounds.contains(rotation.transpose() * x, tol);
}

bool contained_in(const RotatedRectangle& set, const std::vector<HalfSpace>& halfspaces) {
  for (const HalfSpace& h : halfspaces) {
    if (set.support(h.normal) > h.offset) return false;
  }
  return true;
}

bool certified_disjoint(const RotatedRectangle& set, const std::vector<HalfSpace>& region) {
  for (const HalfSpace& h : region) {
    // min over the set of normal . x exceeds the offset -> nothing satisfies h.
    if (-set.support(-h.normal) > h.offset) return true;
  }
  return false;
}

PcaResult pca_directions(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("pca_directions requires at least one point");
  const Eigen::Index n = points.front().size();
  for (const Eigen::VectorXd& p : points) {
    if (p.size() != n) throw DimensionError("pca points must share one dimension");
  }
  if (points.size() < 2) {
    return {Eigen::MatrixXd::Identity(n, n), true};
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const Eigen::VectorXd& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (const Eigen::VectorXd& p : points) {
    const Eigen::VectorXd d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(points.size() - 1);

  if (!cov.allFinite()) throw NonFiniteError("pca covariance is not finite");
  if (cov.cwiseAbs().maxCoeff() <= 1e-300) {
    return {Eigen::MatrixXd::Identity(n, n), true};  // all points identical
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    throw NumericalError("pca eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues; reorder to descending variance.
  Eigen::MatrixXd V(n, n);
  for (Eigen::Index j = 0; j < n; ++j) V.col(j) = es.eigenvectors().col(n - 1 - j);

  // QR pass guards orthonormality against eigensolver drift (it preserves the
  // column order and spans; rank-deficient directions come out completed).
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);

  // Deterministic sign rule: largest-magnitude entry positive, ties to the
  // lowest index.
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index arg = 0;
    double best = std::abs(Q(0, j));
    for (Eigen::Index i = 1; i < n; ++i) {
      const double a = std::abs(Q(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (Q(arg, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return {std::move(Q), false};
}

std::vector<std::vector<Eigen::VectorXd>> simulate(const LinearDynamics& dyn,
                                                   const NeuralNetwork& net,
                                                   const RotatedRectangle& init, int samples,
                                                   std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("simulate requires at least two samples");
  const int n = dyn.state_dim();
  if (init.dim() != n) throw DimensionError("initial set dimension must match the dynamics");
  if (net.input_dim() != n) throw DimensionError("network input must match the state dimension");
  if (net.output_dim() != dyn.control_dim()) {
    throw DimensionError("network output must match the dynamics control dimension");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<Eigen::VectorXd>> trajectories;
  trajectories.reserve(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = init.bounds.lower()[i] +
             (init.bounds.upper()[i] - init.bounds.lower()[i]) * unit_from_bits(rng);
    }
    std::vector<Eigen::VectorXd> traj;
    traj.reserve(static_cast<std::size_t>(dyn.horizon) + 1);
    Eigen::VectorXd x = init.rotation * y;
    traj.push_back(x);
    for (int t = 0; t < dyn.horizon; ++t) {
      x = dyn.A[t] * x + dyn.B[t] * net.forward(x) + dyn.c[t];
      traj.push_back(x);
    }
    trajectories.push_back(std::move(traj));
  }
  return trajectories;
}

RotatedRectangle step_overapprox(const LinearDynamics& dyn, int t, const NeuralNetwork& net,
                                 const RotatedRectangle& current,
                                 const Eigen::MatrixXd& next_rotation,
                                 const std::vector<LipschitzCertificate>& certificates,
                                 const BnbConfig& cfg,
                                 const std::vector<Eigen::VectorXd>& warm_points,
                                 std::vector<DirectionSolve>* solves) {
  if (t < 0 || t >= dyn.horizon) throw std::invalid_argument("step index out of range");
  const int n = dyn.state_dim();
  require_orthonormal(next_rotation, "next rotation");
  if (next_rotation.rows() != n) throw DimensionError("next rotation must match the state dimension");
  if (static_cast<int>(certificates.size()) != 2 * n) {
    throw DimensionError("one certificate per face (two per direction) is required");
  }

  Eigen::VectorXd lower(n), upper(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = next_rotation.col(i);
    const double offset = r.dot(dyn.c[t]);

    ObjectiveFunction obj_lo(net, r, dyn.A[t], dyn.B[t], current.rotation);
    BnbResult lo = minimize(obj_lo, current.bounds, certificates[2 * i], cfg, warm_points);
    lower[i] = lo.best_lower + offset;

    ObjectiveFunction obj_hi(net, -r, dyn.A[t], dyn.B[t], current.rotation);
    BnbResult hi = minimize(obj_hi, current.bounds, certificates[2 * i + 1], cfg, warm_points);
    upper[i] = -hi.best_lower + offset;

    if (solves) {
      solves->push_back({t, i, false, lo, certificates[2 * i]});
      solves->push_back({t, i, true, hi, certificates[2 * i + 1]});
    }
    if (lower[i] > upper[i]) {
      // Both faces are certified, so only rounding can cross them; widen up.
      upper[i] = lower[i];
    }
  }
  return RotatedRectangle(next_rotation, Rectangle(lower, upper));
}

ReachabilityResult reach(const LinearDynamics& dyn, const NeuralNetwork& net,
                         const RotatedRectangle& init, const ReachConfig& cfg) {
  cfg.bnb.validate();
  const int n = dyn.state_dim();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  if ((init.rotation - eye).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw std::invalid_argument("the recursion starts from an axis-aligned initial set");
  }

  ReachabilityResult result;
  result.trajectories = simulate(dyn, net, init, cfg.samples, cfg.seed);
  result.sets.push_back(init);

  for (int t = 0; t < dyn.horizon; ++t) {
    const RotatedRectangle& current = result.sets.back();

    Eigen::MatrixXd R_next = eye;
    if (!cfg.identity_rotation) {
      std::vector<Eigen::VectorXd> cloud;
      cloud.reserve(result.trajectories.size());
      for (const auto& traj : result.trajectories) cloud.push_back(traj[t + 1]);
      PcaResult pca = pca_directions(cloud);
      R_next = std::move(pca.rotation);
      if (pca.degenerate) result.degenerate_rotation_steps.push_back(t + 1);
    }

    std::optional<PreactivationBounds> pre;
    if (cfg.lipschitz_method == LipschitzMethod::Sdp && cfg.localize_sectors &&
        net.activation().kind == ActivationKind::ReLU) {
      pre = preactivation_intervals(net, current.bounds, current.rotation);
    }
    // One certificate computation per +/- pair: the feasibility program sees
    // the direction only through C_F^T C_F, which is even in the sign, so the
    // same certificate covers both faces.
    std::vector<LipschitzCertificate> certs;
    certs.reserve(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i) {
      ObjectiveFunction obj(net, R_next.col(i), dyn.A[t], dyn.B[t], current.rotation);
      LipschitzCertificate cert = cfg.lipschitz_method == LipschitzMethod::Sdp
                                      ? lipschitz_sdp(obj, pre)
                                      : lipschitz_naive(obj);
      certs.push_back(cert);
      certs.push_back(std::move(cert));
    }

    std::vector<Eigen::VectorXd> warm;
    warm.reserve(result.trajectories.size());
    for (const auto& traj : result.trajectories) {
      warm.push_back(current.rotation.transpose() * traj[t]);
    }

    result.sets.push_back(
        step_overapprox(dyn, t, net, current, R_next, certs, cfg.bnb, warm, &result.solves));
  }

  for (const DirectionSolve& s : result.solves) {
    if (s.result.status == BnbStatus::NodeCapReached) result.any_node_cap = true;
  }
  return result;
}

std::vector<DirectionBound> open_loop_supports(const NeuralNetwork& net, const Rectangle& box,
                                               const std::vector<Eigen::VectorXd>& directions,
                                               const ReachConfig& cfg) {
  cfg.bnb.validate();
  if (box.dim() != net.input_dim()) {
    throw DimensionError("box dimension must match the network input");
  }
  for (const Eigen::VectorXd& d : directions) {
    if (d.size() != net.output_dim()) {
      throw DimensionError("directions must match the network output dimension");
    }
  }

  std::vector<Eigen::VectorXd> warm;
  if (cfg.samples > 0) {
    std::mt19937_64 rng(cfg.seed);
    warm.reserve(static_cast<std::size_t>(cfg.samples));
    for (int j = 0; j < cfg.samples; ++j) {
      Eigen::VectorXd x(box.dim());
      for (Eigen::Index i = 0; i < box.dim(); ++i) {
        x[i] = box.lower()[i] + (box.upper()[i] - box.lower()[i]) * unit_from_bits(rng);
      }
      warm.push_back(std::move(x));
    }
  }

  std::optional<PreactivationBounds> pre;
  if (cfg.lipschitz_method == LipschitzMethod::Sdp && cfg.localize_sectors &&
      net.activation().kind == ActivationKind::ReLU) {
    pre = preactivation_intervals(net, box,
                                  Eigen::MatrixXd::Identity(box.dim(), box.dim()));
  }

  std::vector<DirectionBound> out;
  out.reserve(directions.size());
  for (const Eigen::VectorXd& d : directions) {
    ObjectiveFunction obj(net, -d);  // sup d.f = -inf (-d).f
    LipschitzCertificate cert = cfg.lipschitz_method == LipschitzMethod::Sdp
                                    ? lipschitz_sdp(obj, pre)
                                    : lipschitz_naive(obj);
    BnbResult res = minimize(obj, box, cert, cfg.bnb, warm);
    out.push_back({d, -res.best_lower, std::move(res), std::move(cert)});
  }
  return out;
}

}  // namespace lipreach
