#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tubepoints/errors.hpp"

namespace tp {

// Coordinate convention: pixel (r, c) occupies the unit square
// [r, r+1) x [c, c+1) and its center is at real coordinates (r, c).
// x is the row coordinate, y the column coordinate, both in pixels.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline bool is_finite(const Point& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

inline double manhattan(const Point& a, const Point& b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// A point with an objectness score in [0, 1].
struct ScoredPoint {
    Point point;
    double score = 0.0;

    friend bool operator==(const ScoredPoint&, const ScoredPoint&) = default;
};

// H x W grid of {0,1} values, row-major.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, std::uint8_t fill = 0)
        : height_(height), width_(width) {
        if (height <= 0 || width <= 0)
            throw dimension_error("BinaryMask: dimensions must be positive, got " +
                                  std::to_string(height) + "x" + std::to_string(width));
        data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
    }

    int height() const { return height_; }
    int width() const { return width_; }

    std::uint8_t at(int r, int c) const { return data_[index(r, c)]; }
    void set(int r, int c, bool v) { data_[index(r, c)] = v ? 1 : 0; }

    bool in_bounds(int r, int c) const {
        return r >= 0 && r < height_ && c >= 0 && c < width_;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data_) n += v;
        return n;
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * width_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> data_;
};

// H x W grid of scores in [0, 1], row-major.
class ScoreMap {
public:
    ScoreMap() = default;
    ScoreMap(int height, int width, double fill = 0.0)
        : height_(height), width_(width) {
        if (height <= 0 || width <= 0)
            throw dimension_error("ScoreMap: dimensions must be positive, got " +
                                  std::to_string(height) + "x" + std::to_string(width));
        data_.assign(static_cast<std::size_t>(height) * width, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }

    double at(int r, int c) const { return data_[index(r, c)]; }
    void set(int r, int c, double v) { data_[index(r, c)] = v; }

    bool in_bounds(int r, int c) const {
        return r >= 0 && r < height_ && c >= 0 && c < width_;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * width_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// Index of one scatter region within the grid.
struct RegionIndex {
    int row = 0;
    int col = 0;

    friend bool operator==(const RegionIndex&, const RegionIndex&) = default;
};

// Partition of an image into D x D scatter regions. The image dimensions
// must be divisible by the downsample rate D.
struct RegionGrid {
    int image_height = 0;
    int image_width = 0;
    int downsample = 1;
    int grid_height = 0;
    int grid_width = 0;

    int region_count() const { return grid_height * grid_width; }

    int flat_index(RegionIndex idx) const { return idx.row * grid_width + idx.col; }
    RegionIndex from_flat(int i) const { return {i / grid_width, i % grid_width}; }

    friend bool operator==(const RegionGrid&, const RegionGrid&) = default;
};

inline RegionGrid make_grid(int image_height, int image_width, int downsample) {
    if (image_height <= 0 || image_width <= 0)
        throw dimension_error("make_grid: image dimensions must be positive, got " +
                              std::to_string(image_height) + "x" + std::to_string(image_width));
    if (downsample < 1)
        throw dimension_error("make_grid: downsample must be >= 1, got " +
                              std::to_string(downsample));
    if (image_height % downsample != 0 || image_width % downsample != 0)
        throw dimension_error("make_grid: image " + std::to_string(image_height) + "x" +
                              std::to_string(image_width) + " not divisible by downsample " +
                              std::to_string(downsample));
    return RegionGrid{image_height, image_width, downsample,
                      image_height / downsample, image_width / downsample};
}

// Region containing an in-bounds point: (floor(x/D), floor(y/D)).
inline RegionIndex region_of(const RegionGrid& grid, const Point& p) {
    if (!is_finite(p) || p.x < 0.0 || p.x >= grid.image_height || p.y < 0.0 ||
        p.y >= grid.image_width)
        throw bounds_error("region_of: point (" + std::to_string(p.x) + ", " +
                           std::to_string(p.y) + ") outside image " +
                           std::to_string(grid.image_height) + "x" +
                           std::to_string(grid.image_width));
    return {static_cast<int>(std::floor(p.x / grid.downsample)),
            static_cast<int>(std::floor(p.y / grid.downsample))};
}

// Center of a region's D x D patch. With pixel centers at integer
// coordinates, the patch {rD .. rD+D-1} is centered at rD + (D-1)/2.
inline Point region_center(const RegionGrid& grid, RegionIndex idx) {
    if (idx.row < 0 || idx.row >= grid.grid_height || idx.col < 0 ||
        idx.col >= grid.grid_width)
        throw bounds_error("region_center: index (" + std::to_string(idx.row) + ", " +
                           std::to_string(idx.col) + ") outside grid " +
                           std::to_string(grid.grid_height) + "x" +
                           std::to_string(grid.grid_width));
    const double half = (grid.downsample - 1) / 2.0;
    return {grid.downsample * idx.row + half, grid.downsample * idx.col + half};
}

}  // namespace tp
