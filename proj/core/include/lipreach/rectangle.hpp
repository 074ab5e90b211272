#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace lipreach {

/// Axis-aligned box {x : lower <= x <= upper}, possibly degenerate along some axes.
class Rectangle {
 public:
  Rectangle() = default;

  /// Validates lower <= upper elementwise, equal sizes, and finiteness.
  Rectangle(Eigen::VectorXd lower, Eigen::VectorXd upper);

  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  int dim() const { return static_cast<int>(lower_.size()); }

  Eigen::VectorXd center() const { return 0.5 * (lower_ + upper_); }

  /// Euclidean diameter ||upper - lower||_2. Zero-length axes contribute nothing.
  double diameter() const { return (upper_ - lower_).norm(); }

  /// Index of the longest edge; ties break toward the lowest axis index.
  int longest_axis() const;

  /// Length of the longest edge.
  double longest_edge() const;

  /// True when every edge has zero length.
  bool is_point() const { return longest_edge() == 0.0; }

  /// Cuts the box in half along `axis` (midpoint split).
  std::pair<Rectangle, Rectangle> bisect(int axis) const;

  /// Splits the box into `parts` equal slabs along `axis`.
  std::vector<Rectangle> split(int axis, int parts) const;

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

  /// Projects x onto the box coordinatewise.
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;

  /// Product of edge lengths (area for 2-D boxes).
  double volume() const { return (upper_ - lower_).prod(); }

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

}  // namespace lipreach
