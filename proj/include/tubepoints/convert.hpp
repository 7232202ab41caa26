#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"

namespace tp {

// Ground-truth points partitioned by scatter region. Regions are stored
// densely in row-major grid order; empty regions hold empty lists.
class RegionPointSets {
public:
    explicit RegionPointSets(const RegionGrid& grid)
        : grid_(grid), per_region_(static_cast<std::size_t>(grid.region_count())) {}

    const RegionGrid& grid() const { return grid_; }

    const std::vector<Point>& points(RegionIndex idx) const {
        return per_region_[grid_.flat_index(idx)];
    }
    const std::vector<Point>& points(int flat) const { return per_region_[flat]; }

    void add(const Point& p) {
        per_region_[grid_.flat_index(region_of(grid_, p))].push_back(p);
    }

    std::size_t total_points() const {
        std::size_t n = 0;
        for (const auto& v : per_region_) n += v.size();
        return n;
    }

    std::size_t max_region_count() const {
        std::size_t m = 0;
        for (const auto& v : per_region_) m = std::max(m, v.size());
        return m;
    }

private:
    RegionGrid grid_;
    std::vector<std::vector<Point>> per_region_;
};

// One point per foreground pixel, at the pixel's integer coordinates,
// in row-major pixel order.
inline std::vector<Point> mask_to_points(const BinaryMask& mask) {
    std::vector<Point> points;
    points.reserve(mask.count());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask.at(r, c)) points.push_back({static_cast<double>(r), static_cast<double>(c)});
    return points;
}

inline RegionPointSets group_by_region(const std::vector<Point>& points,
                                       const RegionGrid& grid) {
    RegionPointSets sets(grid);
    for (const auto& p : points) sets.add(p);  // region_of throws on out-of-bounds
    return sets;
}

// Keeps points with score >= threshold, order preserved. The boundary is
// inclusive: only strictly lower scores are eliminated.
inline std::vector<ScoredPoint> filter_by_score(const std::vector<ScoredPoint>& points,
                                                double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw parameter_error("filter_by_score: threshold must be in [0,1], got " +
                              std::to_string(threshold));
    std::vector<ScoredPoint> kept;
    kept.reserve(points.size());
    for (const auto& sp : points)
        if (sp.score >= threshold) kept.push_back(sp);
    return kept;
}

// Writes each point's score into the bin (floor(x), floor(y)). Collisions
// combine by maximum, empty bins stay 0, out-of-bounds points are dropped.
inline ScoreMap rasterize(const std::vector<ScoredPoint>& points, int height, int width) {
    ScoreMap map(height, width, 0.0);
    for (const auto& sp : points) {
        if (!is_finite(sp.point)) continue;
        const double fx = std::floor(sp.point.x);
        const double fy = std::floor(sp.point.y);
        if (fx < 0.0 || fx >= height || fy < 0.0 || fy >= width) continue;
        const int r = static_cast<int>(fx);
        const int c = static_cast<int>(fy);
        map.set(r, c, std::max(map.at(r, c), sp.score));
    }
    return map;
}

// output[i,j] = 1 iff map[i,j] >= t.
inline BinaryMask threshold_map(const ScoreMap& map, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw parameter_error("threshold_map: threshold must be in [0,1], got " +
                              std::to_string(t));
    BinaryMask mask(map.height(), map.width());
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c)
            mask.set(r, c, map.at(r, c) >= t);
    return mask;
}

}  // namespace tp
