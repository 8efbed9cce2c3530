#include "sim3align/octree.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "sim3align/error.hpp"

namespace sim3align {

namespace {

constexpr int kMaxDepth = 21;
constexpr char kMagic[4] = {'O', 'C', 'T', '1'};

std::int64_t cell_index(double coord, double resolution) {
    const double c = std::floor(coord / resolution);
    if (c < -9.0e15 || c > 9.0e15) {
        throw Error(ErrorCode::invalid_argument, "point coordinate out of voxel index range");
    }
    return static_cast<std::int64_t>(c);
}

void put_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint8_t get_u8(std::istream& in) {
    const int c = in.get();
    if (c == std::istream::traits_type::eof()) {
        throw Error(ErrorCode::parse, "octree stream truncated");
    }
    return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(in)) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(get_u8(in)) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

OccupancyOctree build_octree(const PointCloud& cloud, double resolution) {
    if (cloud.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot build an octree from an empty cloud");
    }
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
        throw Error(ErrorCode::invalid_argument, "resolution must be positive and finite");
    }

    // Global leaf-cell indices for every point.
    std::vector<std::array<std::int64_t, 3>> cells;
    cells.reserve(cloud.size());
    std::array<std::int64_t, 3> lo{}, hi{};
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (!p.is_finite()) {
            throw Error(ErrorCode::invalid_argument,
                        "non-finite point at index " + std::to_string(i));
        }
        const std::array<std::int64_t, 3> c{cell_index(p.x, resolution),
                                            cell_index(p.y, resolution),
                                            cell_index(p.z, resolution)};
        if (i == 0) {
            lo = hi = c;
        } else {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], c[a]);
                hi[a] = std::max(hi[a], c[a]);
            }
        }
        cells.push_back(c);
    }

    std::int64_t span = 1;
    for (int a = 0; a < 3; ++a) span = std::max(span, hi[a] - lo[a] + 1);
    int depth = 1;
    while ((std::int64_t{1} << depth) < span) ++depth;
    if (depth > kMaxDepth) {
        throw Error(ErrorCode::invalid_argument,
                    "cloud extent requires depth " + std::to_string(depth) +
                        " > 21 at this resolution");
    }

    OccupancyOctree tree;
    tree.resolution_ = resolution;
    tree.max_depth_ = depth;
    tree.base_cell_ = lo;
    tree.root_origin_ = {static_cast<double>(lo[0]) * resolution,
                         static_cast<double>(lo[1]) * resolution,
                         static_cast<double>(lo[2]) * resolution};
    tree.root_size_ = resolution * static_cast<double>(std::int64_t{1} << depth);
    tree.nodes_.emplace_back();  // root

    for (const auto& c : cells) {
        const std::uint64_t ix = static_cast<std::uint64_t>(c[0] - lo[0]);
        const std::uint64_t iy = static_cast<std::uint64_t>(c[1] - lo[1]);
        const std::uint64_t iz = static_cast<std::uint64_t>(c[2] - lo[2]);
        std::int32_t node = 0;
        for (int level = depth - 1; level >= 0; --level) {
            const int octant = static_cast<int>(((ix >> level) & 1) |
                                                (((iy >> level) & 1) << 1) |
                                                (((iz >> level) & 1) << 2));
            std::int32_t child = tree.nodes_[static_cast<std::size_t>(node)]
                                     .child[static_cast<std::size_t>(octant)];
            if (child < 0) {
                child = static_cast<std::int32_t>(tree.nodes_.size());
                tree.nodes_[static_cast<std::size_t>(node)]
                    .child[static_cast<std::size_t>(octant)] = child;
                tree.nodes_.emplace_back();  // may reallocate; do not hold references
            }
            node = child;
        }
        ++tree.nodes_[static_cast<std::size_t>(node)].count;
    }
    return tree;
}

OccupancyOctree::Stats OccupancyOctree::stats() const {
    Stats s;
    s.depth = max_depth_;
    s.node_count = nodes_.size();
    for (const Node& n : nodes_) {
        if (n.count > 0) ++s.leaf_count;
    }
    s.memory_estimate_bytes = nodes_.size() * sizeof(Node) + sizeof(*this);
    return s;
}

std::uint64_t OccupancyOctree::total_points() const {
    std::uint64_t total = 0;
    for (const Node& n : nodes_) total += n.count;
    return total;
}

namespace {

struct LeafVisit {
    Vec3 center;
    std::uint32_t count;
};

// Leaf-cell center, computed from the global integer cell index with one
// fixed expression so every code path yields bit-identical coordinates.
Vec3 leaf_center(const std::array<std::int64_t, 3>& base,
                 const std::array<std::int64_t, 3>& local, double resolution) {
    return {(static_cast<double>(base[0] + local[0]) + 0.5) * resolution,
            (static_cast<double>(base[1] + local[1]) + 0.5) * resolution,
            (static_cast<double>(base[2] + local[2]) + 0.5) * resolution};
}

// `local` holds the path bits below this node (zero at the root); the
// global cell index is base + local once level reaches 0.
void collect_leaves(const std::vector<OccupancyOctree::Node>& nodes, std::int32_t node,
                    int level, std::array<std::int64_t, 3> local,
                    const std::array<std::int64_t, 3>& base, double resolution,
                    std::vector<LeafVisit>& out) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    if (level == 0) {
        out.push_back({leaf_center(base, local, resolution), n.count});
        return;
    }
    for (int octant = 0; octant < 8; ++octant) {
        const std::int32_t child = n.child[static_cast<std::size_t>(octant)];
        if (child < 0) continue;
        std::array<std::int64_t, 3> c = local;
        c[0] |= static_cast<std::int64_t>(octant & 1) << (level - 1);
        c[1] |= static_cast<std::int64_t>((octant >> 1) & 1) << (level - 1);
        c[2] |= static_cast<std::int64_t>((octant >> 2) & 1) << (level - 1);
        collect_leaves(nodes, child, level - 1, c, base, resolution, out);
    }
}

}  // namespace

void OccupancyOctree::occupied_leaves(std::vector<Vec3>& centers,
                                      std::vector<std::uint32_t>& counts) const {
    centers.clear();
    counts.clear();
    if (nodes_.empty()) return;
    std::vector<LeafVisit> visits;
    collect_leaves(nodes_, 0, max_depth_, {0, 0, 0}, base_cell_, resolution_, visits);
    centers.reserve(visits.size());
    counts.reserve(visits.size());
    for (const LeafVisit& v : visits) {
        centers.push_back(v.center);
        counts.push_back(v.count);
    }
}

std::vector<Vec3> OccupancyOctree::query_occupied(const Aabb& box) const {
    std::vector<Vec3> hits;
    if (nodes_.empty()) return hits;

    // Depth-first descent, pruning subtrees whose (half-open) cube misses
    // the closed query box.
    struct Frame {
        std::int32_t node;
        int level;
        std::array<std::int64_t, 3> local;
    };
    std::vector<Frame> stack{{0, max_depth_, {0, 0, 0}}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const double edge = resolution_ * static_cast<double>(std::int64_t{1} << f.level);
        const Vec3 lo{static_cast<double>(base_cell_[0] + f.local[0]) * resolution_,
                      static_cast<double>(base_cell_[1] + f.local[1]) * resolution_,
                      static_cast<double>(base_cell_[2] + f.local[2]) * resolution_};
        // cube [lo, lo+edge) vs closed box
        if (!(box.max.x >= lo.x && box.min.x < lo.x + edge && box.max.y >= lo.y &&
              box.min.y < lo.y + edge && box.max.z >= lo.z && box.min.z < lo.z + edge)) {
            continue;
        }
        const Node& n = nodes_[static_cast<std::size_t>(f.node)];
        if (f.level == 0) {
            hits.push_back(leaf_center(base_cell_, f.local, resolution_));
            continue;
        }
        for (int octant = 7; octant >= 0; --octant) {
            const std::int32_t child = n.child[static_cast<std::size_t>(octant)];
            if (child < 0) continue;
            std::array<std::int64_t, 3> c = f.local;
            c[0] |= static_cast<std::int64_t>(octant & 1) << (f.level - 1);
            c[1] |= static_cast<std::int64_t>((octant >> 1) & 1) << (f.level - 1);
            c[2] |= static_cast<std::int64_t>((octant >> 2) & 1) << (f.level - 1);
            stack.push_back({child, f.level - 1, c});
        }
    }
    return hits;
}

PointCloud OccupancyOctree::leaf_centers_cloud() const {
    std::vector<Vec3> centers;
    std::vector<std::uint32_t> counts;
    occupied_leaves(centers, counts);
    PointCloud cloud;
    cloud.points = std::move(centers);
    return cloud;
}

namespace {

void write_subtree(const std::vector<OccupancyOctree::Node>& nodes, std::int32_t node,
                   int level, std::ostream& out) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    if (level == 0) {
        put_u32(out, n.count);
        return;
    }
    std::uint8_t mask = 0;
    for (int octant = 0; octant < 8; ++octant) {
        if (n.child[static_cast<std::size_t>(octant)] >= 0)
            mask |= static_cast<std::uint8_t>(1u << octant);
    }
    put_u8(out, mask);
    for (int octant = 0; octant < 8; ++octant) {
        const std::int32_t child = n.child[static_cast<std::size_t>(octant)];
        if (child >= 0) write_subtree(nodes, child, level - 1, out);
    }
}

std::int32_t read_subtree(std::vector<OccupancyOctree::Node>& nodes, int level,
                          std::istream& in, std::size_t& remaining_nodes) {
    if (remaining_nodes == 0) {
        throw Error(ErrorCode::parse, "octree stream exceeds node budget");
    }
    --remaining_nodes;
    const auto index = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    if (level == 0) {
        nodes[static_cast<std::size_t>(index)].count = get_u32(in);
        if (nodes[static_cast<std::size_t>(index)].count == 0) {
            throw Error(ErrorCode::parse, "occupied leaf with zero count");
        }
        return index;
    }
    const std::uint8_t mask = get_u8(in);
    if (mask == 0) {
        throw Error(ErrorCode::parse, "internal node with no children");
    }
    for (int octant = 0; octant < 8; ++octant) {
        if ((mask >> octant) & 1) {
            const std::int32_t child = read_subtree(nodes, level - 1, in, remaining_nodes);
            nodes[static_cast<std::size_t>(index)].child[static_cast<std::size_t>(octant)] =
                child;
        }
    }
    return index;
}

}  // namespace

void write_octree(const OccupancyOctree& tree, std::ostream& out) {
    out.write(kMagic, 4);
    put_f64(out, tree.root_origin_.x);
    put_f64(out, tree.root_origin_.y);
    put_f64(out, tree.root_origin_.z);
    put_f64(out, tree.root_size_);
    put_u8(out, static_cast<std::uint8_t>(tree.max_depth_));
    write_subtree(tree.nodes_, 0, tree.max_depth_, out);
}

OccupancyOctree read_octree(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorCode::parse, "not an OCT1 stream");
    }
    OccupancyOctree tree;
    tree.root_origin_.x = get_f64(in);
    tree.root_origin_.y = get_f64(in);
    tree.root_origin_.z = get_f64(in);
    tree.root_size_ = get_f64(in);
    tree.max_depth_ = get_u8(in);
    if (tree.max_depth_ < 1 || tree.max_depth_ > kMaxDepth) {
        throw Error(ErrorCode::parse,
                    "max depth " + std::to_string(tree.max_depth_) + " outside [1, 21]");
    }
    if (!std::isfinite(tree.root_size_) || !(tree.root_size_ > 0.0) ||
        !tree.root_origin_.is_finite()) {
        throw Error(ErrorCode::parse, "non-finite octree header");
    }
    tree.resolution_ =
        tree.root_size_ / static_cast<double>(std::int64_t{1} << tree.max_depth_);
    for (int a = 0; a < 3; ++a) {
        const double coord = a == 0   ? tree.root_origin_.x
                             : a == 1 ? tree.root_origin_.y
                                      : tree.root_origin_.z;
        const double cell = coord / tree.resolution_;
        if (std::abs(cell) > 9.0e15) {
            throw Error(ErrorCode::parse, "octree origin out of cell range");
        }
        tree.base_cell_[static_cast<std::size_t>(a)] = std::llround(cell);
    }
    // Stream length bounds the tree; cap the node budget to keep hostile
    // inputs from exhausting memory.
    std::size_t budget = 1u << 22;
    read_subtree(tree.nodes_, tree.max_depth_, in, budget);
    return tree;
}

}  // namespace sim3align
