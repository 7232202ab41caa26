#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"
#include "tubepoints/metrics.hpp"
#include "tubepoints/rng.hpp"

namespace tp {

// One synthetic tubular image: grayscale intensities, the tube mask, and
// the 1-pixel-wide centerline obtained by skeletonizing the mask.
struct SyntheticSample {
    ScoreMap image;
    BinaryMask mask;
    BinaryMask centerline;
};

struct SynthParams {
    int height = 48;
    int width = 48;
    int n_branches = 3;
    int width_min = 2;
    int width_max = 4;
    double noise = 0.05;
};

namespace detail {

inline void stamp_disk(BinaryMask& mask, double x, double y, double radius) {
    const int reach = static_cast<int>(std::ceil(radius));
    const int cr = static_cast<int>(std::lround(x));
    const int cc = static_cast<int>(std::lround(y));
    for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
            if (static_cast<double>(dr) * dr + static_cast<double>(dc) * dc > radius * radius)
                continue;
            const int rr = cr + dr;
            const int cc2 = cc + dc;
            if (mask.in_bounds(rr, cc2)) mask.set(rr, cc2, true);
        }
    }
}

// 3x3 binomial blur with zero padding, fixed scan order.
inline ScoreMap blur3(const BinaryMask& mask) {
    static constexpr int kKernel[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
    ScoreMap out(mask.height(), mask.width());
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            int acc = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if (mask.in_bounds(r + dr, c + dc) && mask.at(r + dr, c + dc))
                        acc += kKernel[dr + 1][dc + 1];
            out.set(r, c, acc / 16.0);
        }
    }
    return out;
}

}  // namespace detail

// Deterministic tubular image: n_branches bounded-curvature random walks,
// each stroked with a per-branch width, rendered as a blurred mask plus
// uniform noise. Later branches may fork from a point on an earlier path.
// Same seed, same bytes.
inline SyntheticSample generate_sample(std::uint64_t seed, int height, int width,
                                       int n_branches, int width_min, int width_max,
                                       double noise) {
    if (height <= 0 || width <= 0)
        throw dimension_error("generate_sample: dimensions must be positive, got " +
                              std::to_string(height) + "x" + std::to_string(width));
    if (width_min < 1 || width_max < width_min)
        throw parameter_error("generate_sample: invalid stroke width range [" +
                              std::to_string(width_min) + ", " + std::to_string(width_max) + "]");
    if (!(noise >= 0.0 && noise < 1.0))
        throw parameter_error("generate_sample: noise must be in [0,1), got " +
                              std::to_string(noise));

    BinaryMask mask(height, width);
    std::vector<Point> trail;  // visited path points, fork candidates

    Rng base(seed);
    const double two_pi = 6.283185307179586;
    for (int branch = 0; branch < n_branches; ++branch) {
        Rng rng = base.split(static_cast<std::uint64_t>(branch) + 1);
        const int stroke_width = rng.uniform_int(width_min, width_max);
        const double radius = stroke_width / 2.0;
        const double margin = radius + 1.0;

        double x, y;
        if (branch > 0 && !trail.empty() && rng.next_double() < 0.5) {
            const auto& fork = trail[rng.next_below(trail.size())];
            x = fork.x;
            y = fork.y;
        } else {
            x = rng.uniform(margin, height - margin);
            y = rng.uniform(margin, width - margin);
        }
        double heading = rng.uniform(0.0, two_pi);
        const int steps = rng.uniform_int(std::min(height, width),
                                          2 * std::min(height, width));

        for (int s = 0; s < steps; ++s) {
            detail::stamp_disk(mask, x, y, radius);
            trail.push_back({x, y});
            heading += rng.uniform(-0.25, 0.25);
            double nx = x + 0.75 * std::cos(heading);
            double ny = y + 0.75 * std::sin(heading);
            if (nx < margin || nx >= height - margin || ny < margin || ny >= width - margin) {
                // Steer back toward the image center instead of leaving.
                heading = std::atan2(width / 2.0 - y, height / 2.0 - x);
                nx = x + 0.75 * std::cos(heading);
                ny = y + 0.75 * std::sin(heading);
            }
            x = nx;
            y = ny;
        }
    }

    SyntheticSample sample{detail::blur3(mask), std::move(mask), BinaryMask()};
    if (noise > 0.0) {
        Rng noise_rng = base.split(0);
        for (auto& v : sample.image.data())
            v = std::clamp(v + noise * noise_rng.uniform(-1.0, 1.0), 0.0, 1.0);
    }
    sample.centerline = skeletonize(sample.mask);
    return sample;
}

inline SyntheticSample generate_sample(std::uint64_t seed, const SynthParams& p) {
    return generate_sample(seed, p.height, p.width, p.n_branches, p.width_min, p.width_max,
                           p.noise);
}

// Independent derived seeds seed + k, one per sample.
inline std::vector<SyntheticSample> generate_dataset(std::uint64_t seed, int count,
                                                     const SynthParams& params) {
    std::vector<SyntheticSample> samples;
    samples.reserve(std::max(count, 0));
    for (int k = 0; k < count; ++k)
        samples.push_back(generate_sample(seed + static_cast<std::uint64_t>(k), params));
    return samples;
}

}  // namespace tp
