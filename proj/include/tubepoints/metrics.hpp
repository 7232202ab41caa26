#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"

namespace tp {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
};

namespace detail {

inline void require_same_shape(const char* op, int h1, int w1, int h2, int w2) {
    if (h1 != h2 || w1 != w2)
        throw dimension_error(std::string(op) + ": shape mismatch " + std::to_string(h1) + "x" +
                              std::to_string(w1) + " vs " + std::to_string(h2) + "x" +
                              std::to_string(w2));
}

inline long intersection_count(const BinaryMask& a, const BinaryMask& b) {
    long n = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) n += a.data()[i] & b.data()[i];
    return n;
}

}  // namespace detail

inline ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& gt) {
    detail::require_same_shape("confusion_counts", pred.height(), pred.width(), gt.height(),
                               gt.width());
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
        const bool p = pred.data()[i];
        const bool g = gt.data()[i];
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

// Empty conventions: dice/precision/recall are 1 when both sides are
// empty; a 0/0 ratio against a non-empty other side scores 0.
inline double dice(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion_counts(pred, gt);
    const long denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return 2.0 * c.tp / denom;
}

inline double accuracy(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion_counts(pred, gt);
    return static_cast<double>(c.tp + c.tn) / (c.tp + c.fp + c.fn + c.tn);
}

inline double precision(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion_counts(pred, gt);
    if (c.tp + c.fp == 0) return c.fn == 0 ? 1.0 : 0.0;
    return static_cast<double>(c.tp) / (c.tp + c.fp);
}

inline double recall(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts c = confusion_counts(pred, gt);
    if (c.tp + c.fn == 0) return c.fp == 0 ? 1.0 : 0.0;
    return static_cast<double>(c.tp) / (c.tp + c.fn);
}

// Exact rank-statistic AUC: the probability that a uniformly random
// positive pixel outscores a uniformly random negative one, with ties
// resolved by midranks.
inline double auc(const ScoreMap& map, const BinaryMask& gt) {
    detail::require_same_shape("auc", map.height(), map.width(), gt.height(), gt.width());
    const std::size_t total = map.data().size();
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return map.data()[a] < map.data()[b];
    });

    long positives = 0;
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j < total && map.data()[order[j]] == map.data()[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            if (gt.data()[order[t]]) {
                ++positives;
                positive_rank_sum += midrank;
            }
        }
        i = j;
    }
    const long negatives = static_cast<long>(total) - positives;
    if (positives == 0 || negatives == 0)
        throw undefined_metric_error("auc: ground truth has a single class");
    return (positive_rank_sum - 0.5 * positives * (positives + 1.0)) /
           (static_cast<double>(positives) * negatives);
}

namespace detail {

// Neighbors clockwise from north: N, NE, E, SE, S, SW, W, NW.
constexpr int kNbr[8][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1},
                            {1, 0},  {1, -1}, {0, -1}, {-1, -1}};

inline void neighborhood(const BinaryMask& m, int r, int c, int n[8]) {
    for (int i = 0; i < 8; ++i) {
        const int rr = r + kNbr[i][0];
        const int cc = c + kNbr[i][1];
        n[i] = (m.in_bounds(rr, cc) && m.at(rr, cc)) ? 1 : 0;
    }
}

// Two-subiteration thinning conditions (Zhang-Suen). subiter 0 removes
// south-east boundary / north-west corner pixels, subiter 1 the opposite.
inline bool thinning_removable(const BinaryMask& m, int r, int c, int subiter) {
    int n[8];
    neighborhood(m, r, c, n);
    int b = 0;
    for (int i = 0; i < 8; ++i) b += n[i];
    if (b < 2 || b > 6) return false;
    int transitions = 0;
    for (int i = 0; i < 8; ++i)
        if (n[i] == 0 && n[(i + 1) % 8] == 1) ++transitions;
    if (transitions != 1) return false;
    if (subiter == 0) return (n[0] * n[2] * n[4] == 0) && (n[2] * n[4] * n[6] == 0);
    return (n[0] * n[2] * n[6] == 0) && (n[0] * n[4] * n[6] == 0);
}

}  // namespace detail

// Iterative morphological thinning to a 1-pixel-wide 8-connected skeleton.
// Candidates are gathered per subiteration from a snapshot, then removed
// one at a time with the conditions re-checked against the live image;
// the re-check keeps deletions connectivity-safe (simultaneous deletion
// can annihilate 2x2 blocks). Runs to a fixed point, hence idempotent.
inline BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask out = mask;
    bool changed = true;
    std::vector<std::pair<int, int>> candidates;
    while (changed) {
        changed = false;
        for (int subiter = 0; subiter < 2; ++subiter) {
            candidates.clear();
            for (int r = 0; r < out.height(); ++r)
                for (int c = 0; c < out.width(); ++c)
                    if (out.at(r, c) && detail::thinning_removable(out, r, c, subiter))
                        candidates.emplace_back(r, c);
            for (const auto& [r, c] : candidates) {
                if (detail::thinning_removable(out, r, c, subiter)) {
                    out.set(r, c, false);
                    changed = true;
                }
            }
        }
    }
    return out;
}

// clDice: harmonic mean of topology precision and sensitivity computed
// via skeleton-mask intersections. Both skeletons empty scores 1, exactly
// one empty scores 0.
inline double cl_dice(const BinaryMask& pred, const BinaryMask& gt) {
    detail::require_same_shape("cl_dice", pred.height(), pred.width(), gt.height(), gt.width());
    const BinaryMask skel_pred = skeletonize(pred);
    const BinaryMask skel_gt = skeletonize(gt);
    const long np = static_cast<long>(skel_pred.count());
    const long ng = static_cast<long>(skel_gt.count());
    if (np == 0 && ng == 0) return 1.0;
    if (np == 0 || ng == 0) return 0.0;
    const double tprec = static_cast<double>(detail::intersection_count(skel_pred, gt)) / np;
    const double tsens = static_cast<double>(detail::intersection_count(skel_gt, pred)) / ng;
    if (tprec + tsens == 0.0) return 0.0;
    return 2.0 * tprec * tsens / (tprec + tsens);
}

namespace detail {

// Flood-fill component count over pixels where value(i) == target, with
// the given connectivity (4 or 8).
inline int count_components(const BinaryMask& m, bool foreground, int connectivity) {
    const int h = m.height();
    const int w = m.width();
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    std::vector<int> stack;
    int components = 0;
    const int limit = connectivity == 8 ? 8 : 4;
    // 4-connectivity uses the even entries of kNbr (N, E, S, W).
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t start = static_cast<std::size_t>(r) * w + c;
            if (seen[start] || (m.at(r, c) != 0) != foreground) continue;
            ++components;
            seen[start] = 1;
            stack.assign(1, static_cast<int>(start));
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cr = cur / w;
                const int cc = cur % w;
                for (int i = 0; i < limit; ++i) {
                    const int step = connectivity == 8 ? i : 2 * i;
                    const int rr = cr + kNbr[step][0];
                    const int cc2 = cc + kNbr[step][1];
                    if (rr < 0 || rr >= h || cc2 < 0 || cc2 >= w) continue;
                    const std::size_t ni = static_cast<std::size_t>(rr) * w + cc2;
                    if (seen[ni] || (m.at(rr, cc2) != 0) != foreground) continue;
                    seen[ni] = 1;
                    stack.push_back(static_cast<int>(ni));
                }
            }
        }
    }
    return components;
}

inline BinaryMask pad_with_background(const BinaryMask& m) {
    BinaryMask padded(m.height() + 2, m.width() + 2);
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c)
            if (m.at(r, c)) padded.set(r + 1, c + 1, true);
    return padded;
}

}  // namespace detail

struct BettiNumbers {
    int beta0 = 0;
    int beta1 = 0;
};

// beta0 = 8-connected foreground components. beta1 = holes: 4-connected
// background components minus the unbounded outside one (the image is
// embedded in an infinite background, realised by a 1-pixel pad).
inline BettiNumbers betti_numbers(const BinaryMask& mask) {
    const int beta0 = detail::count_components(mask, true, 8);
    const BinaryMask padded = detail::pad_with_background(mask);
    const int background = detail::count_components(padded, false, 4);
    return {beta0, background - 1};
}

// Euler characteristic of the 4-adjacency cubical complex (pixels as
// vertices, 4-adjacency edges, fully-filled 2x2 blocks as faces), computed
// by the local 2x2 quad-count formula: (Q1 - Q3 + 2*Qd) / 4 over all 2x2
// windows of the background-padded image.
inline int euler_characteristic(const BinaryMask& mask) {
    const int h = mask.height();
    const int w = mask.width();
    auto fg = [&](int r, int c) -> int {
        return (r >= 0 && r < h && c >= 0 && c < w && mask.at(r, c)) ? 1 : 0;
    };
    long q1 = 0, q3 = 0, qd = 0;
    for (int r = -1; r < h; ++r) {
        for (int c = -1; c < w; ++c) {
            const int tl = fg(r, c);
            const int tr = fg(r, c + 1);
            const int bl = fg(r + 1, c);
            const int br = fg(r + 1, c + 1);
            const int n = tl + tr + bl + br;
            if (n == 1)
                ++q1;
            else if (n == 3)
                ++q3;
            else if (n == 2 && ((tl && br) || (tr && bl)))
                ++qd;
        }
    }
    return static_cast<int>((q1 - q3 + 2 * qd) / 4);
}

struct TopologyErrors {
    double betti0_error = 0.0;
    double betti1_error = 0.0;
    double euler_error = 0.0;
};

inline TopologyErrors topology_errors(const std::vector<BinaryMask>& preds,
                                      const std::vector<BinaryMask>& gts) {
    if (preds.size() != gts.size())
        throw pairing_error("topology_errors: " + std::to_string(preds.size()) +
                            " predictions vs " + std::to_string(gts.size()) + " ground truths");
    TopologyErrors e;
    if (preds.empty()) return e;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const BettiNumbers bp = betti_numbers(preds[i]);
        const BettiNumbers bg = betti_numbers(gts[i]);
        e.betti0_error += std::abs(bp.beta0 - bg.beta0);
        e.betti1_error += std::abs(bp.beta1 - bg.beta1);
        e.euler_error += std::abs(euler_characteristic(preds[i]) - euler_characteristic(gts[i]));
    }
    const double n = static_cast<double>(preds.size());
    e.betti0_error /= n;
    e.betti1_error /= n;
    e.euler_error /= n;
    return e;
}

// Euclidean dilation: foreground plus every pixel within distance <= radius
// of a foreground pixel.
inline BinaryMask dilate(const BinaryMask& mask, double radius) {
    if (radius < 0.0)
        throw parameter_error("dilate: radius must be >= 0, got " + std::to_string(radius));
    const int reach = static_cast<int>(std::floor(radius));
    std::vector<std::pair<int, int>> offsets;
    for (int dr = -reach; dr <= reach; ++dr)
        for (int dc = -reach; dc <= reach; ++dc)
            if (static_cast<double>(dr) * dr + static_cast<double>(dc) * dc <= radius * radius)
                offsets.emplace_back(dr, dc);

    BinaryMask out(mask.height(), mask.width());
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask.at(r, c)) continue;
            for (const auto& [dr, dc] : offsets) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (mask.in_bounds(rr, cc)) out.set(rr, cc, true);
            }
        }
    }
    return out;
}

struct TolerantScores {
    double precision = 0.0;
    double recall = 0.0;
    double dice = 0.0;
};

// Centerline scores with a tolerance region: a predicted pixel counts as
// correct when it lies within `radius` of the ground-truth centerline and
// vice versa.
inline TolerantScores tolerant_centerline_scores(const BinaryMask& pred, const BinaryMask& gt,
                                                 double radius) {
    detail::require_same_shape("tolerant_centerline_scores", pred.height(), pred.width(),
                               gt.height(), gt.width());
    const long pred_count = static_cast<long>(pred.count());
    const long gt_count = static_cast<long>(gt.count());

    TolerantScores s;
    if (pred_count == 0)
        s.precision = gt_count == 0 ? 1.0 : 0.0;
    else
        s.precision =
            static_cast<double>(detail::intersection_count(pred, dilate(gt, radius))) / pred_count;
    if (gt_count == 0)
        s.recall = pred_count == 0 ? 1.0 : 0.0;
    else
        s.recall =
            static_cast<double>(detail::intersection_count(gt, dilate(pred, radius))) / gt_count;
    if (s.precision + s.recall == 0.0)
        s.dice = 0.0;
    else
        s.dice = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

}  // namespace tp
