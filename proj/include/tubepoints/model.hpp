#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "tubepoints/convert.hpp"
#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"
#include "tubepoints/losses.hpp"
#include "tubepoints/rng.hpp"

namespace tp {

// All training hyperparameters. Numeric defaults follow the reference
// configuration: D=4, N=16, eta=0.8, lambda=10, gamma=2, alpha=0.6 for the
// mask task (0.7 for centerlines), inference threshold 0.1.
struct TrainConfig {
    int downsample = 4;
    int points_per_region = 16;
    double eta = 0.8;
    double lambda = 10.0;
    double alpha = 0.6;
    double gamma = 2.0;
    double inference_threshold = 0.1;
    double learning_rate = 0.02;
    double momentum = 0.9;
    int iterations = 3000;
    int batch_size = 8;
    int hidden = 48;
    std::uint64_t seed = 1;
};

// Patch-wise predictor: a flattened (3D)x(3D) pixel context window feeds
// one tanh hidden layer, then two affine heads produce N objectness
// logits and N 2-vector offsets per scatter region.
struct ModelParams {
    int downsample = 0;
    int points_per_region = 0;
    int hidden = 0;

    std::vector<double> w1, b1;          // hidden x window^2, hidden
    std::vector<double> w_obj, b_obj;    // N x hidden, N
    std::vector<double> w_loc, b_loc;    // 2N x hidden, 2N

    int window() const { return 3 * downsample; }
    int input_size() const { return window() * window(); }
};

// Gradient accumulator with the same shapes as ModelParams.
struct ParamGrads {
    std::vector<double> w1, b1, w_obj, b_obj, w_loc, b_loc;
};

namespace detail {

inline std::uint64_t params_fingerprint(const ModelParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    mix(static_cast<std::uint64_t>(p.downsample));
    mix(static_cast<std::uint64_t>(p.points_per_region));
    mix(static_cast<std::uint64_t>(p.hidden));
    for (const auto* vec : {&p.w1, &p.b1, &p.w_obj, &p.b_obj, &p.w_loc, &p.b_loc}) {
        for (double d : *vec) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof(bits));
            mix(bits);
        }
    }
    return h;
}

}  // namespace detail

// Deterministic fan-in-scaled uniform initialization. Objectness biases
// start at logit(0.1) so initial scores sit near the focal-loss prior.
inline ModelParams init_params(std::uint64_t seed, int downsample, int points_per_region,
                               int hidden) {
    if (hidden < 1)
        throw parameter_error("init_params: hidden width must be >= 1, got " +
                              std::to_string(hidden));
    if (downsample < 1 || points_per_region < 1)
        throw parameter_error("init_params: downsample and points_per_region must be >= 1");

    ModelParams p;
    p.downsample = downsample;
    p.points_per_region = points_per_region;
    p.hidden = hidden;

    const int in = p.input_size();
    const int n = points_per_region;
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto fill = [&rng](std::vector<double>& v, std::size_t count, double scale) {
        v.resize(count);
        for (auto& x : v) x = rng.uniform(-scale, scale);
    };
    fill(p.w1, static_cast<std::size_t>(hidden) * in, 1.0 / std::sqrt(in));
    p.b1.assign(hidden, 0.0);
    fill(p.w_obj, static_cast<std::size_t>(n) * hidden, 1.0 / std::sqrt(hidden));
    p.b_obj.assign(n, std::log(0.1 / 0.9));
    fill(p.w_loc, static_cast<std::size_t>(2 * n) * hidden, 1.0 / std::sqrt(hidden));
    p.b_loc.assign(2 * n, 0.0);
    return p;
}

// Forward outputs plus the per-region caches backward needs.
struct ForwardPass {
    RegionGrid grid;
    std::vector<SlotPredictions> regions;      // flat row-major region order
    std::vector<std::vector<double>> inputs;   // context windows
    std::vector<std::vector<double>> hidden;   // tanh activations
    std::uint64_t params_stamp = 0;
};

// Runs the predictor on every scatter region. The context window is the
// (3D)x(3D) pixel block centered on the region, zero-padded at borders.
// Point j of region i is region_center(i) + offset_{i,j}; offsets are
// unconstrained, so points may leave their region or the image.
inline ForwardPass forward(const ModelParams& params, const ScoreMap& image,
                           const RegionGrid& grid) {
    if (grid.image_height != image.height() || grid.image_width != image.width())
        throw dimension_error("forward: image " + std::to_string(image.height()) + "x" +
                              std::to_string(image.width()) + " does not match grid " +
                              std::to_string(grid.image_height) + "x" +
                              std::to_string(grid.image_width));
    if (grid.downsample != params.downsample)
        throw dimension_error("forward: grid downsample " + std::to_string(grid.downsample) +
                              " does not match model downsample " +
                              std::to_string(params.downsample));

    const int d = params.downsample;
    const int win = params.window();
    const int in = params.input_size();
    const int n = params.points_per_region;
    const int h = params.hidden;

    ForwardPass fp;
    fp.grid = grid;
    fp.params_stamp = detail::params_fingerprint(params);
    fp.regions.resize(grid.region_count());
    fp.inputs.resize(grid.region_count());
    fp.hidden.resize(grid.region_count());

    for (int ri = 0; ri < grid.region_count(); ++ri) {
        const RegionIndex idx = grid.from_flat(ri);
        auto& input = fp.inputs[ri];
        input.assign(in, 0.0);
        const int r0 = idx.row * d - d;
        const int c0 = idx.col * d - d;
        for (int r = 0; r < win; ++r) {
            const int rr = r0 + r;
            if (rr < 0 || rr >= image.height()) continue;
            for (int c = 0; c < win; ++c) {
                const int cc = c0 + c;
                if (cc < 0 || cc >= image.width()) continue;
                input[static_cast<std::size_t>(r) * win + c] = image.at(rr, cc);
            }
        }

        auto& act = fp.hidden[ri];
        act.resize(h);
        for (int u = 0; u < h; ++u) {
            double acc = params.b1[u];
            const double* row = params.w1.data() + static_cast<std::size_t>(u) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * input[i];
            act[u] = std::tanh(acc);
        }

        auto& out = fp.regions[ri];
        out.logits.resize(n);
        out.points.resize(n);
        const Point center = region_center(grid, idx);
        for (int j = 0; j < n; ++j) {
            double logit = params.b_obj[j];
            const double* row = params.w_obj.data() + static_cast<std::size_t>(j) * h;
            for (int u = 0; u < h; ++u) logit += row[u] * act[u];
            out.logits[j] = logit;

            double ox = params.b_loc[2 * j];
            double oy = params.b_loc[2 * j + 1];
            const double* rx = params.w_loc.data() + static_cast<std::size_t>(2 * j) * h;
            const double* ry = params.w_loc.data() + static_cast<std::size_t>(2 * j + 1) * h;
            for (int u = 0; u < h; ++u) {
                ox += rx[u] * act[u];
                oy += ry[u] * act[u];
            }
            out.points[j] = {center.x + ox, center.y + oy};
        }
    }
    return fp;
}

// Exact reverse-mode gradients of the loss through forward, given the
// per-slot loss gradients. Accumulation runs in region-index order.
inline ParamGrads backward(const ModelParams& params, const ForwardPass& fp,
                           const std::vector<SlotGradients>& loss_grads) {
    if (fp.params_stamp != detail::params_fingerprint(params))
        throw contract_error("backward: parameters changed since the forward pass");
    if (loss_grads.size() != fp.regions.size())
        throw contract_error("backward: expected " + std::to_string(fp.regions.size()) +
                             " gradient regions, got " + std::to_string(loss_grads.size()));

    const int in = params.input_size();
    const int n = params.points_per_region;
    const int h = params.hidden;

    ParamGrads g;
    g.w1.assign(params.w1.size(), 0.0);
    g.b1.assign(params.b1.size(), 0.0);
    g.w_obj.assign(params.w_obj.size(), 0.0);
    g.b_obj.assign(params.b_obj.size(), 0.0);
    g.w_loc.assign(params.w_loc.size(), 0.0);
    g.b_loc.assign(params.b_loc.size(), 0.0);

    std::vector<double> dact(h);
    for (std::size_t ri = 0; ri < fp.regions.size(); ++ri) {
        const auto& lg = loss_grads[ri];
        if (lg.dlogits.size() != static_cast<std::size_t>(n) ||
            lg.dpoints.size() != static_cast<std::size_t>(n))
            throw contract_error("backward: gradient region " + std::to_string(ri) +
                                 " has wrong slot count");
        const auto& act = fp.hidden[ri];
        const auto& input = fp.inputs[ri];
        std::fill(dact.begin(), dact.end(), 0.0);

        for (int j = 0; j < n; ++j) {
            const double dl = lg.dlogits[j];
            if (dl != 0.0) {
                double* row = g.w_obj.data() + static_cast<std::size_t>(j) * h;
                const double* w = params.w_obj.data() + static_cast<std::size_t>(j) * h;
                for (int u = 0; u < h; ++u) {
                    row[u] += dl * act[u];
                    dact[u] += dl * w[u];
                }
                g.b_obj[j] += dl;
            }
            const double dx = lg.dpoints[j].x;
            const double dy = lg.dpoints[j].y;
            if (dx != 0.0) {
                double* row = g.w_loc.data() + static_cast<std::size_t>(2 * j) * h;
                const double* w = params.w_loc.data() + static_cast<std::size_t>(2 * j) * h;
                for (int u = 0; u < h; ++u) {
                    row[u] += dx * act[u];
                    dact[u] += dx * w[u];
                }
                g.b_loc[2 * j] += dx;
            }
            if (dy != 0.0) {
                double* row = g.w_loc.data() + static_cast<std::size_t>(2 * j + 1) * h;
                const double* w = params.w_loc.data() + static_cast<std::size_t>(2 * j + 1) * h;
                for (int u = 0; u < h; ++u) {
                    row[u] += dy * act[u];
                    dact[u] += dy * w[u];
                }
                g.b_loc[2 * j + 1] += dy;
            }
        }

        for (int u = 0; u < h; ++u) {
            const double dpre = dact[u] * (1.0 - act[u] * act[u]);
            if (dpre == 0.0) continue;
            double* row = g.w1.data() + static_cast<std::size_t>(u) * in;
            for (int i = 0; i < in; ++i) row[i] += dpre * input[i];
            g.b1[u] += dpre;
        }
    }
    return g;
}

struct TrainExample {
    ScoreMap image;
    BinaryMask target;
};

struct TrainResult {
    ModelParams params;
    std::vector<LossBreakdown> history;
};

// SGD with momentum over the full pipeline: forward, region-wise greedy
// assignment, combined loss (normalized over the whole batch's GT count),
// exact backward, update. Deterministic given (seed, dataset, config);
// batches cycle through the dataset in order.
inline TrainResult train(const std::vector<TrainExample>& dataset, const TrainConfig& config) {
    if (dataset.empty()) throw parameter_error("train: empty dataset");
    if (config.batch_size < 1 || config.iterations < 0)
        throw parameter_error("train: batch_size must be >= 1 and iterations >= 0");

    // Pre-derive grids and GT point sets; surfaces K > N early with the
    // offending sample and region named.
    std::vector<RegionGrid> grids(dataset.size());
    std::vector<RegionPointSets> gt_sets;
    gt_sets.reserve(dataset.size());
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        const auto& ex = dataset[s];
        if (ex.image.height() != ex.target.height() || ex.image.width() != ex.target.width())
            throw dimension_error("train: sample " + std::to_string(s) +
                                  " image/target shape mismatch");
        grids[s] = make_grid(ex.image.height(), ex.image.width(), config.downsample);
        gt_sets.push_back(group_by_region(mask_to_points(ex.target), grids[s]));
        if (gt_sets.back().max_region_count() >
            static_cast<std::size_t>(config.points_per_region)) {
            for (int ri = 0; ri < grids[s].region_count(); ++ri)
                if (gt_sets.back().points(ri).size() >
                    static_cast<std::size_t>(config.points_per_region))
                    throw capacity_error(
                        "train: sample " + std::to_string(s) + " region " + std::to_string(ri) +
                        " has K=" + std::to_string(gt_sets.back().points(ri).size()) +
                        " > N=" + std::to_string(config.points_per_region));
        }
    }

    TrainResult result;
    result.params = init_params(config.seed, config.downsample, config.points_per_region,
                                config.hidden);
    result.history.reserve(config.iterations);

    ParamGrads velocity;
    velocity.w1.assign(result.params.w1.size(), 0.0);
    velocity.b1.assign(result.params.b1.size(), 0.0);
    velocity.w_obj.assign(result.params.w_obj.size(), 0.0);
    velocity.b_obj.assign(result.params.b_obj.size(), 0.0);
    velocity.w_loc.assign(result.params.w_loc.size(), 0.0);
    velocity.b_loc.assign(result.params.b_loc.size(), 0.0);

    for (int step = 0; step < config.iterations; ++step) {
        ParamGrads batch_grads;
        LossBreakdown batch_loss;
        bool first = true;

        // Accumulate raw sums; normalize over the batch's GT count below.
        std::vector<ForwardPass> passes;
        double obj_sum = 0.0, reg_sum = 0.0;
        long gt_total = 0;
        std::vector<std::vector<RegionTargets>> batch_targets;
        std::vector<std::size_t> batch_samples;

        for (int b = 0; b < config.batch_size; ++b) {
            const std::size_t s =
                (static_cast<std::size_t>(step) * config.batch_size + b) % dataset.size();
            batch_samples.push_back(s);
            passes.push_back(forward(result.params, dataset[s].image, grids[s]));
            batch_targets.push_back(assign_targets(gt_sets[s], passes.back().regions,
                                                   config.eta));
            const LossBreakdown part = total_loss(passes.back().regions, batch_targets.back(),
                                                  config.lambda, config.alpha, config.gamma);
            obj_sum += part.objectness;
            reg_sum += part.regression;
            gt_total += part.gt_count;
        }

        batch_loss.objectness = obj_sum;
        batch_loss.regression = reg_sum;
        batch_loss.gt_count = gt_total;
        const double norm = static_cast<double>(std::max<long>(1, gt_total));
        batch_loss.total = (obj_sum + config.lambda * reg_sum) / norm;
        if (!std::isfinite(batch_loss.total))
            throw error("train: non-finite loss at step " + std::to_string(step) +
                        " (objectness=" + std::to_string(obj_sum) +
                        ", regression=" + std::to_string(reg_sum) + ")");

        for (std::size_t b = 0; b < batch_samples.size(); ++b) {
            // Per-slot gradients of the batch-normalized total.
            std::vector<SlotGradients> grads;
            const auto& pass = passes[b];
            const auto& targets = batch_targets[b];
            grads.assign(pass.regions.size(), {});
            for (std::size_t ri = 0; ri < pass.regions.size(); ++ri) {
                const auto& pred = pass.regions[ri];
                auto& g = grads[ri];
                g.dlogits.assign(pred.size(), 0.0);
                g.dpoints.assign(pred.size(), Point{});
                const auto& tgt = targets[ri];
                for (std::size_t j = 0; j < pred.size(); ++j) {
                    const int gi = tgt.slot_to_gt[j];
                    const FocalResult f =
                        focal_loss(pred.logits[j], gi >= 0 ? 1 : 0, config.alpha, config.gamma);
                    g.dlogits[j] = f.dloss_dlogit / norm;
                    if (gi >= 0) {
                        const RegressionResult reg =
                            regression_loss(pred.points[j], tgt.gts[gi]);
                        g.dpoints[j] = {reg.grad.x * config.lambda / norm,
                                        reg.grad.y * config.lambda / norm};
                    }
                }
            }
            ParamGrads pg = backward(result.params, pass, grads);
            if (first) {
                batch_grads = std::move(pg);
                first = false;
            } else {
                auto add = [](std::vector<double>& a, const std::vector<double>& b) {
                    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
                };
                add(batch_grads.w1, pg.w1);
                add(batch_grads.b1, pg.b1);
                add(batch_grads.w_obj, pg.w_obj);
                add(batch_grads.b_obj, pg.b_obj);
                add(batch_grads.w_loc, pg.w_loc);
                add(batch_grads.b_loc, pg.b_loc);
            }
        }

        auto update = [&config](std::vector<double>& w, std::vector<double>& v,
                                const std::vector<double>& grad) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = config.momentum * v[i] - config.learning_rate * grad[i];
                w[i] += v[i];
            }
        };
        update(result.params.w1, velocity.w1, batch_grads.w1);
        update(result.params.b1, velocity.b1, batch_grads.b1);
        update(result.params.w_obj, velocity.w_obj, batch_grads.w_obj);
        update(result.params.b_obj, velocity.b_obj, batch_grads.b_obj);
        update(result.params.w_loc, velocity.w_loc, batch_grads.w_loc);
        update(result.params.b_loc, velocity.b_loc, batch_grads.b_loc);

        result.history.push_back(batch_loss);
    }
    return result;
}

// Forward, flatten all regions, apply the sigmoid, and drop points whose
// score falls below the threshold.
inline std::vector<ScoredPoint> predict(const ModelParams& params, const ScoreMap& image,
                                        const RegionGrid& grid, double threshold) {
    const ForwardPass fp = forward(params, image, grid);
    std::vector<ScoredPoint> points;
    points.reserve(fp.regions.size() * params.points_per_region);
    for (const auto& region : fp.regions)
        for (std::size_t j = 0; j < region.size(); ++j)
            points.push_back({region.points[j], detail::stable_sigmoid(region.logits[j])});
    return filter_by_score(points, threshold);
}

}  // namespace tp
