#pragma once

// Bounding volume hierarchy over scene triangles (binned SAH build).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "grassim/scene.hpp"
#include "grassim/vec.hpp"

namespace grassim {

struct Ray {
    Vec3 origin;
    Vec3 dir;
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    std::uint32_t prim = 0;
};

class Bvh {
public:
    Bvh() = default;

    explicit Bvh(const std::vector<Triangle>& tris) {
        tris_.reserve(tris.size());
        for (const auto& t : tris) tris_.push_back({t.v0, t.v1 - t.v0, t.v2 - t.v0});
        order_.resize(tris.size());
        std::iota(order_.begin(), order_.end(), 0u);
        if (tris.empty()) return;
        std::vector<Vec3> centers(tris.size());
        std::vector<Bounds> boxes(tris.size());
        for (std::size_t i = 0; i < tris.size(); ++i) {
            boxes[i].extend(tris[i].v0);
            boxes[i].extend(tris[i].v1);
            boxes[i].extend(tris[i].v2);
            centers[i] = (boxes[i].lo + boxes[i].hi) * 0.5;
        }
        nodes_.reserve(2 * tris.size());
        nodes_.push_back({});
        build(0, 0, static_cast<std::uint32_t>(tris.size()), boxes, centers, 0);
        // Reorder triangles to leaf order so leaves index a contiguous range.
        std::vector<Tri> sorted(tris_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) sorted[i] = tris_[order_[i]];
        tris_ = std::move(sorted);
    }

    bool empty() const { return tris_.empty(); }
    std::size_t node_count() const { return nodes_.size(); }

    /// Closest hit with t in (tmin, hit.t). The returned prim indexes the
    /// triangle list passed to the constructor.
    bool intersect(const Ray& ray, Hit& hit, double tmin = 0.0) const {
        if (nodes_.empty()) return false;
        const Vec3 inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
        std::array<std::uint32_t, 64> stack;
        int sp = 0;
        stack[sp++] = 0;
        bool found = false;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (!slab(n.box, ray.origin, inv, tmin, hit.t)) continue;
            if (n.count > 0) {
                for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
                    const double t = tri_hit(tris_[i], ray, tmin, hit.t);
                    if (t < hit.t) {
                        hit.t = t;
                        hit.prim = order_[i];
                        found = true;
                    }
                }
            } else {
                stack[sp++] = n.first;
                stack[sp++] = n.first + 1;
            }
        }
        return found;
    }

    /// Any hit with t in (tmin, tmax).
    bool occluded(const Ray& ray, double tmin, double tmax) const {
        if (nodes_.empty()) return false;
        const Vec3 inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
        std::array<std::uint32_t, 64> stack;
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (!slab(n.box, ray.origin, inv, tmin, tmax)) continue;
            if (n.count > 0) {
                for (std::uint32_t i = n.first; i < n.first + n.count; ++i)
                    if (tri_hit(tris_[i], ray, tmin, tmax) < tmax) return true;
            } else {
                stack[sp++] = n.first;
                stack[sp++] = n.first + 1;
            }
        }
        return false;
    }

private:
    struct Tri {
        Vec3 v0, e1, e2;
    };
    struct Node {
        Bounds box;
        std::uint32_t first = 0;  // first triangle (leaf) or left child (inner)
        std::uint32_t count = 0;  // 0 for inner nodes
    };

    static constexpr int kBins = 12;
    static constexpr std::uint32_t kLeafSize = 4;
    static constexpr int kMaxSahDepth = 32;  // halving below this bounds the traversal stack

    static double area(const Bounds& b) {
        if (b.empty()) return 0.0;
        const Vec3 e = b.extent();
        return 2.0 * (e.x * e.y + e.y * e.z + e.z * e.x);
    }

    static Bounds merge(Bounds a, const Bounds& b) {
        if (b.empty()) return a;
        a.extend(b.lo);
        a.extend(b.hi);
        return a;
    }

    void build(std::uint32_t node, std::uint32_t first, std::uint32_t count, const std::vector<Bounds>& boxes,
               const std::vector<Vec3>& centers, int depth) {
        Bounds box, cbox;
        for (std::uint32_t i = first; i < first + count; ++i) {
            box = merge(box, boxes[order_[i]]);
            cbox.extend(centers[order_[i]]);
        }
        nodes_[node].box = box;
        if (count <= kLeafSize) {
            nodes_[node].first = first;
            nodes_[node].count = count;
            return;
        }
        // Binned SAH over the widest centroid axis.
        const Vec3 ext = cbox.extent();
        const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
        std::uint32_t mid = first + count / 2;
        if (ext[static_cast<std::size_t>(axis)] > 0.0 && depth < kMaxSahDepth) {
            const double lo = cbox.lo[static_cast<std::size_t>(axis)];
            const double scale = kBins / ext[static_cast<std::size_t>(axis)];
            auto bin_of = [&](std::uint32_t tri) {
                return std::min(kBins - 1, static_cast<int>((centers[tri][static_cast<std::size_t>(axis)] - lo) * scale));
            };
            std::array<Bounds, kBins> bb;
            std::array<std::uint32_t, kBins> bc{};
            for (std::uint32_t i = first; i < first + count; ++i) {
                const int b = bin_of(order_[i]);
                bb[static_cast<std::size_t>(b)] = merge(bb[static_cast<std::size_t>(b)], boxes[order_[i]]);
                ++bc[static_cast<std::size_t>(b)];
            }
            double best = std::numeric_limits<double>::infinity();
            int split = -1;
            for (int s = 1; s < kBins; ++s) {
                Bounds l, r;
                std::uint32_t nl = 0, nr = 0;
                for (int b = 0; b < s; ++b) l = merge(l, bb[static_cast<std::size_t>(b)]), nl += bc[static_cast<std::size_t>(b)];
                for (int b = s; b < kBins; ++b) r = merge(r, bb[static_cast<std::size_t>(b)]), nr += bc[static_cast<std::size_t>(b)];
                if (nl == 0 || nr == 0) continue;
                const double cost = area(l) * nl + area(r) * nr;
                if (cost < best) best = cost, split = s;
            }
            if (split > 0) {
                const auto it = std::partition(order_.begin() + first, order_.begin() + first + count,
                                               [&](std::uint32_t tri) { return bin_of(tri) < split; });
                mid = static_cast<std::uint32_t>(it - order_.begin());
            } else {
                std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                                 [&](std::uint32_t a, std::uint32_t b) {
                                     return centers[a][static_cast<std::size_t>(axis)] <
                                            centers[b][static_cast<std::size_t>(axis)];
                                 });
            }
        }
        // Coincident centroids or a deep tree: the range is simply halved.
        const auto left = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({});
        nodes_.push_back({});
        nodes_[node].first = left;
        nodes_[node].count = 0;
        build(left, first, mid - first, boxes, centers, depth + 1);
        build(left + 1, mid, first + count - mid, boxes, centers, depth + 1);
    }

    static bool slab(const Bounds& b, const Vec3& o, const Vec3& inv, double tmin, double tmax) {
        for (std::size_t a = 0; a < 3; ++a) {
            double t0 = (b.lo[a] - o[a]) * inv[a];
            double t1 = (b.hi[a] - o[a]) * inv[a];
            if (t0 > t1) std::swap(t0, t1);
            // NaN from 0 * inf (ray on a slab plane) must not cull the box.
            tmin = t0 > tmin ? t0 : tmin;
            tmax = t1 < tmax ? t1 : tmax;
            if (tmin > tmax) return false;
        }
        return true;
    }

    // Moller-Trumbore; returns +inf on miss.
    static double tri_hit(const Tri& tri, const Ray& ray, double tmin, double tmax) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        const Vec3 p = cross(ray.dir, tri.e2);
        const double det = dot(tri.e1, p);
        if (std::abs(det) < 1e-20) return inf;
        const double inv_det = 1.0 / det;
        const Vec3 s = ray.origin - tri.v0;
        const double u = dot(s, p) * inv_det;
        if (u < 0.0 || u > 1.0) return inf;
        const Vec3 q = cross(s, tri.e1);
        const double v = dot(ray.dir, q) * inv_det;
        if (v < 0.0 || u + v > 1.0) return inf;
        const double t = dot(tri.e2, q) * inv_det;
        return t > tmin && t < tmax ? t : inf;
    }

    std::vector<Tri> tris_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace grassim
