#pragma once

#include "nlmvs/camera.hpp"
#include "nlmvs/mvs.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace nlmvs {

struct OrientedPoint {
    Vec3 position;        // world units
    Vec3 normal;          // world frame, unit
    std::optional<Rgb> color;
};

using OrientedPointCloud = std::vector<OrientedPoint>;

struct ViewNeighborhood {
    int reference = -1;
    std::array<int, 4> sources{-1, -1, -1, -1};
};

/// Four neighbors by signed azimuth about the up axis, two per side; deficits
/// on one side are taken from the other.
ViewNeighborhood select_neighbors(const std::vector<Camera>& poses, int ref, const Vec3& up_axis);

struct BackprojectOptions {
    int stride = 1;
    /// Drop pixels whose peak depth probability falls below this (0 disables);
    /// only applies when a probability map is supplied.
    double min_confidence = 0.0;
};

/// Unmasked pixels backprojected to world with world-frame normals oriented
/// toward the camera center. max_prob, when given, is per-pixel peak p(d).
OrientedPointCloud backproject(const DepthNormalMaps& maps, const Camera& cam,
                               const BackprojectOptions& opts = {},
                               const HdrImage* max_prob = nullptr,
                               const HdrImage* color = nullptr);

/// Voxel-grid fusion: per voxel centroid + normalized mean normal; voxels with
/// inconsistent normals (mean norm < 0.3) are dropped.
OrientedPointCloud merge_clouds(const std::vector<OrientedPointCloud>& clouds, double voxel);

/// Binary little-endian PLY with float32 positions/normals, optional uchar rgb.
void write_ply(const OrientedPointCloud& cloud, const std::string& path);
OrientedPointCloud read_ply(const std::string& path);

} // namespace nlmvs
