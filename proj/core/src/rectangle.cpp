#include "lipreach/rectangle.hpp"

#include "lipreach/errors.hpp"

namespace lipreach {

Rectangle::Rectangle(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw DimensionError("rectangle bounds have mismatched sizes");
  }
  if (lower_.size() == 0) {
    throw DimensionError("rectangle must have at least one axis");
  }
  if (!lower_.allFinite() || !upper_.allFinite()) {
    throw NonFiniteError("rectangle bounds must be finite");
  }
  if ((lower_.array() > upper_.array()).any()) {
    throw DimensionError("rectangle requires lower <= upper on every axis");
  }
}

int Rectangle::longest_axis() const {
  int best = 0;
  double best_len = upper_[0] - lower_[0];
  for (int i = 1; i < dim(); ++i) {
    const double len = upper_[i] - lower_[i];
    if (len > best_len) {
      best = i;
      best_len = len;
    }
  }
  return best;
}

double Rectangle::longest_edge() const {
  return (upper_ - lower_).maxCoeff();
}

std::pair<Rectangle, Rectangle> Rectangle::bisect(int axis) const {
  auto parts = split(axis, 2);
  return {parts[0], parts[1]};
}

std::vector<Rectangle> Rectangle::split(int axis, int parts) const {
  if (axis < 0 || axis >= dim()) {
    throw DimensionError("split axis out of range");
  }
  if (parts < 1) {
    throw DimensionError("split requires at least one part");
  }
  const double lo = lower_[axis];
  const double hi = upper_[axis];
  std::vector<Rectangle> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (int p = 0; p < parts; ++p) {
    Eigen::VectorXd l = lower_;
    Eigen::VectorXd u = upper_;
    // Compute cut points as convex combinations so the outer faces are exact.
    l[axis] = (p == 0) ? lo : lo + (hi - lo) * (static_cast<double>(p) / parts);
    u[axis] = (p == parts - 1)
                  ? hi
                  : lo + (hi - lo) * (static_cast<double>(p + 1) / parts);
    out.emplace_back(std::move(l), std::move(u));
  }
  return out;
}

bool Rectangle::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  return (x.array() >= lower_.array() - tol).all() &&
         (x.array() <= upper_.array() + tol).all();
}

Eigen::VectorXd Rectangle::clamp(const Eigen::VectorXd& x) const {
  if (x.size() != lower_.size()) {
    throw DimensionError("clamp: point dimension does not match rectangle");
  }
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

}  // namespace lipreach
