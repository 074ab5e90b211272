#pragma once

#include <string>
#include <vector>

#include "lipreach/bnb.hpp"
#include "lipreach/reach.hpp"

namespace lipreach {

/// Renders reachable sets and sampled trajectories as a standalone SVG.
/// Each rotated rectangle is projected onto the (axis_x, axis_y) plane by
/// dropping the other coordinates of its rotated vertices and drawing the
/// convex hull as a polygon; trajectory points become a scatter layer.
/// The output is byte-stable for identical inputs.
std::string render_reach_svg(const std::vector<RotatedRectangle>& sets,
                             const std::vector<std::vector<Eigen::VectorXd>>& trajectories,
                             int axis_x, int axis_y);

/// Renders a final branch-and-bound partition (2-D inputs) as one polygon per
/// rectangle; pruned rectangles are shaded. Byte-stable for identical inputs.
std::string render_partition_svg(const std::vector<SnapshotRect>& partition, int axis_x = 0,
                                 int axis_y = 1);

}  // namespace lipreach
