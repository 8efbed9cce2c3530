#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sim3align/projection.hpp"
#include "sim3align/vec3.hpp"

namespace sim3align {

/// Sparse occupancy octree over a point cloud.
///
/// Leaf cells are half-open cubes [min, max) of edge `resolution`, anchored
/// to the world origin (cell i covers [i*r, (i+1)*r) per axis). Anchoring to
/// the origin instead of the cloud keeps the leaf lattice of resolution 2r a
/// coarsening of the lattice of resolution r, and makes leaf assignment
/// identical to plain voxel hashing. The root cube spans 2^max_depth leaves
/// per axis starting at the minimum occupied cell; all occupied leaves sit
/// at max_depth.
class OccupancyOctree {
public:
    struct Node {
        std::array<std::int32_t, 8> child{-1, -1, -1, -1, -1, -1, -1, -1};
        std::uint32_t count = 0;  // leaf nodes only
    };

    struct Stats {
        std::size_t leaf_count = 0;
        std::size_t node_count = 0;  // internal + leaf
        int depth = 0;
        std::size_t memory_estimate_bytes = 0;
    };

    const Vec3& root_origin() const { return root_origin_; }
    double root_size() const { return root_size_; }
    int max_depth() const { return max_depth_; }
    double resolution() const { return resolution_; }
    double leaf_edge() const { return resolution_; }

    /// Exact counts by traversal.
    Stats stats() const;

    /// Centers of all occupied leaves, depth-first child order (canonical
    /// regardless of insertion order), with per-leaf point counts.
    void occupied_leaves(std::vector<Vec3>& centers, std::vector<std::uint32_t>& counts) const;

    /// Occupied leaves whose cubes intersect the (closed) box, each once.
    std::vector<Vec3> query_occupied(const Aabb& box) const;

    /// Total points across all leaves.
    std::uint64_t total_points() const;

    /// Occupied leaf centers as a point cloud, for PLY export.
    PointCloud leaf_centers_cloud() const;

private:
    friend OccupancyOctree build_octree(const PointCloud&, double);
    friend void write_octree(const OccupancyOctree&, std::ostream&);
    friend OccupancyOctree read_octree(std::istream&);

    Vec3 root_origin_;
    double root_size_ = 0.0;
    double resolution_ = 0.0;
    int max_depth_ = 0;
    std::array<std::int64_t, 3> base_cell_{0, 0, 0};
    std::vector<Node> nodes_;  // nodes_[0] is the root
};

/// Voxelize a cloud at the given leaf edge. Throws
/// ErrorCode::invalid_argument on an empty or non-finite cloud, a
/// non-positive resolution, or a cloud whose extent needs more than 21
/// levels at this resolution.
OccupancyOctree build_octree(const PointCloud& cloud, double resolution);

/// Compact binary serialization:
///   magic "OCT1", root_origin 3 x f64 LE, root_size f64 LE, max_depth u8,
///   then a depth-first stream of one child-bitmask byte per internal node
///   with each occupied leaf as a u32 LE point count.
void write_octree(const OccupancyOctree& tree, std::ostream& out);

/// Parse the format above. Throws ErrorCode::parse on malformed input.
OccupancyOctree read_octree(std::istream& in);

}  // namespace sim3align
