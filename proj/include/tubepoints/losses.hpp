#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tubepoints/convert.hpp"
#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"
#include "tubepoints/matching.hpp"

namespace tp {

// One scatter region's N prediction slots: raw objectness logits and the
// already-offset point coordinates.
struct SlotPredictions {
    std::vector<double> logits;
    std::vector<Point> points;

    std::size_t size() const { return logits.size(); }
};

// Per-slot label assignment for one region. slot_to_gt[j] is the index of
// the ground-truth point matched to slot j, or -1 for the "no point"
// class. Every slot is in exactly one of the two sets by construction.
struct RegionTargets {
    std::vector<Point> gts;
    std::vector<int> slot_to_gt;
};

inline RegionTargets make_targets(std::vector<Point> gts, const MatchResult& match,
                                  int n_slots) {
    RegionTargets t;
    t.gts = std::move(gts);
    t.slot_to_gt.assign(n_slots, -1);
    for (std::size_t i = 0; i < match.assignment.size(); ++i)
        t.slot_to_gt[match.assignment[i]] = static_cast<int>(i);
    return t;
}

// Loss sums before normalization, plus the ground-truth count the total
// was normalized by: total = (objectness + lambda*regression) / max(1, gt_count).
struct LossBreakdown {
    double objectness = 0.0;
    double regression = 0.0;
    double total = 0.0;
    long gt_count = 0;
};

// Gradients of the normalized total with respect to one region's slots.
struct SlotGradients {
    std::vector<double> dlogits;
    std::vector<Point> dpoints;
};

namespace detail {

inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow; equals -log(sigmoid(-x)).
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace detail

struct FocalResult {
    double loss = 0.0;
    double dloss_dlogit = 0.0;
};

// Focal loss on a logit. alpha weights the positive term, (1 - alpha) the
// negative one. Formulated via softplus so log(p) and log(1-p) never
// evaluate at 0.
//   target 1: alpha * (1-p)^gamma * softplus(-z)
//   target 0: (1-alpha) * p^gamma * softplus(z)
inline FocalResult focal_loss(double logit, int target, double alpha, double gamma) {
    const double p = detail::stable_sigmoid(logit);
    FocalResult r;
    if (target == 1) {
        const double w = std::pow(1.0 - p, gamma);
        const double ce = detail::softplus(-logit);  // -log(p)
        r.loss = alpha * w * ce;
        r.dloss_dlogit = alpha * w * (-gamma * p * ce - (1.0 - p));
    } else {
        const double w = std::pow(p, gamma);
        const double ce = detail::softplus(logit);  // -log(1-p)
        r.loss = (1.0 - alpha) * w * ce;
        r.dloss_dlogit = (1.0 - alpha) * w * (gamma * (1.0 - p) * ce + p);
    }
    return r;
}

struct RegressionResult {
    double loss = 0.0;
    Point grad;  // d(loss)/d(pred), the subgradient sign pair with sign(0) = 0
};

inline RegressionResult regression_loss(const Point& pred, const Point& target) {
    const double dx = pred.x - target.x;
    const double dy = pred.y - target.y;
    auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    return {std::abs(dx) + std::abs(dy), {sgn(dx), sgn(dy)}};
}

// Eq-style combined objective over all regions of one image (or batch):
// focal objectness over every slot, L1 regression over matched slots only,
// normalized by the ground-truth point count with a max(1, .) guard.
// When grads is non-null it receives d(total)/d(logit or point) per slot;
// the assignment is treated as a constant.
inline LossBreakdown total_loss(const std::vector<SlotPredictions>& predictions,
                                const std::vector<RegionTargets>& targets, double lambda,
                                double alpha, double gamma,
                                std::vector<SlotGradients>* grads = nullptr) {
    if (lambda < 0.0)
        throw parameter_error("total_loss: lambda must be >= 0, got " + std::to_string(lambda));
    if (predictions.size() != targets.size())
        throw contract_error("total_loss: " + std::to_string(predictions.size()) +
                             " prediction regions vs " + std::to_string(targets.size()) +
                             " target regions");

    LossBreakdown sum;
    if (grads) grads->assign(predictions.size(), {});

    for (std::size_t ri = 0; ri < predictions.size(); ++ri) {
        const auto& pred = predictions[ri];
        const auto& tgt = targets[ri];
        if (tgt.slot_to_gt.size() != pred.size())
            throw contract_error("total_loss: region " + std::to_string(ri) +
                                 " has mismatched slot counts");
        SlotGradients* g = nullptr;
        if (grads) {
            g = &(*grads)[ri];
            g->dlogits.assign(pred.size(), 0.0);
            g->dpoints.assign(pred.size(), Point{});
        }
        sum.gt_count += static_cast<long>(tgt.gts.size());
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const int gi = tgt.slot_to_gt[j];
            const FocalResult f = focal_loss(pred.logits[j], gi >= 0 ? 1 : 0, alpha, gamma);
            sum.objectness += f.loss;
            if (g) g->dlogits[j] = f.dloss_dlogit;
            if (gi >= 0) {
                const RegressionResult reg = regression_loss(pred.points[j], tgt.gts[gi]);
                sum.regression += reg.loss;
                if (g) g->dpoints[j] = reg.grad;
            }
        }
    }

    const double norm = static_cast<double>(std::max<long>(1, sum.gt_count));
    sum.total = (sum.objectness + lambda * sum.regression) / norm;
    if (grads) {
        for (auto& g : *grads) {
            for (auto& d : g.dlogits) d /= norm;
            for (auto& d : g.dpoints) {
                d.x *= lambda / norm;
                d.y *= lambda / norm;
            }
        }
    }
    return sum;
}

// Label assignment for one image: per region, build the assignment cost
// from the current scores and positions and match greedily.
inline std::vector<RegionTargets> assign_targets(const RegionPointSets& gt_regions,
                                                 const std::vector<SlotPredictions>& predictions,
                                                 double eta) {
    const int regions = gt_regions.grid().region_count();
    if (static_cast<int>(predictions.size()) != regions)
        throw contract_error("assign_targets: expected " + std::to_string(regions) +
                             " prediction regions, got " + std::to_string(predictions.size()));

    // All regions of the image are matched as one batch.
    std::vector<CostMatrix> costs(predictions.size());
    for (int ri = 0; ri < regions; ++ri) {
        const auto& gts = gt_regions.points(ri);
        const auto& pred = predictions[ri];
        if (gts.size() > pred.size())
            throw capacity_error("assign_targets: region " + std::to_string(ri) + " has K=" +
                                 std::to_string(gts.size()) + " ground-truth points but only N=" +
                                 std::to_string(pred.size()) + " slots");
        std::vector<ScoredPoint> scored(pred.size());
        for (std::size_t j = 0; j < pred.size(); ++j)
            scored[j] = {pred.points[j], detail::stable_sigmoid(pred.logits[j])};
        costs[ri] = cost_matrix(gts, scored, eta);
    }
    const std::vector<MatchResult> matches = batched_greedy(costs);

    std::vector<RegionTargets> targets(predictions.size());
    for (int ri = 0; ri < regions; ++ri)
        targets[ri] = make_targets(gt_regions.points(ri), matches[ri],
                                   static_cast<int>(predictions[ri].size()));
    return targets;
}

// Full per-image pipeline: assignment from the current predictions, then
// the combined loss on the resulting targets. Matching is recomputed from
// scratch here and differentiated as a constant.
inline LossBreakdown assign_and_loss(const RegionPointSets& gt_regions,
                                     const std::vector<SlotPredictions>& predictions,
                                     double eta, double lambda, double alpha, double gamma,
                                     std::vector<SlotGradients>* grads = nullptr) {
    const auto targets = assign_targets(gt_regions, predictions, eta);
    return total_loss(predictions, targets, lambda, alpha, gamma, grads);
}

}  // namespace tp
