// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits non-zero on any failure.
//
// Usage: acceptance [path-to-cli-binary]
// The CLI path is needed for the benchmark and byte-determinism criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tubepoints/convert.hpp"
#include "tubepoints/losses.hpp"
#include "tubepoints/matching.hpp"
#include "tubepoints/metrics.hpp"
#include "tubepoints/model.hpp"
#include "tubepoints/rng.hpp"
#include "tubepoints/synth.hpp"

namespace fs = std::filesystem;
using namespace tp;

namespace {

int g_failures = 0;
std::vector<std::pair<int, std::string>> g_lines;

void report(int criterion, bool pass, const std::string& name, const std::string& detail) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "[%s] criterion %d: %s (%s)", pass ? "PASS" : "FAIL",
                  criterion, name.c_str(), detail.c_str());
    g_lines.emplace_back(criterion, buf);
    std::fprintf(stderr, "%s\n", buf);
    if (!pass) ++g_failures;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

CostMatrix random_cost(Rng& rng, int k, int n) {
    std::vector<double> data(static_cast<std::size_t>(k) * n);
    for (auto& v : data) v = rng.next_double();
    return CostMatrix(k, n, std::move(data));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ------------------------------------------------------------------ 1

void criterion_1_hungarian_oracle() {
    Stopwatch watch;
    Rng rng(1001);
    bool all_equal = true;
    for (int trial = 0; trial < 1000 && all_equal; ++trial) {
        const int k = rng.uniform_int(0, 6);
        const int n = rng.uniform_int(std::max(k, 1), 6);
        const CostMatrix c = random_cost(rng, k, n);
        const double hungarian = total_cost(c, hungarian_match(c));
        const double brute = total_cost(c, brute_force_match(c));
        all_equal = hungarian == brute;
    }
    const double elapsed = watch.seconds();
    report(1, all_equal && elapsed < 10.0, "hungarian equals brute force on 1000 K<=6,N<=6",
           all_equal ? "exact totals, " + fmt(elapsed) + " s" : "total mismatch");
}

// ------------------------------------------------------------------ 2

void criterion_2_batched_equivalence() {
    Stopwatch watch;
    Rng rng(1002);
    std::vector<CostMatrix> batch;
    batch.reserve(1000);
    for (int i = 0; i < 1000; ++i) batch.push_back(random_cost(rng, 16, 16));
    const auto batched = batched_greedy(batch);
    bool all_equal = true;
    for (std::size_t i = 0; i < batch.size() && all_equal; ++i)
        all_equal = batched[i] == greedy_match(batch[i]);
    const double elapsed = watch.seconds();
    report(2, all_equal && elapsed < 5.0, "batched greedy equals sequential on 1000 16x16",
           all_equal ? "bit-exact, " + fmt(elapsed) + " s" : "result mismatch");
}

// ------------------------------------------------------------------ 3

void criterion_3_runtime_gap(const std::string& cli) {
    Stopwatch watch;
    const fs::path dir = fs::temp_directory_path() / "tubepoints_accept_bench";
    fs::remove_all(dir);
    const std::string cmd = "\"" + cli + "\" bench-match --image-sizes 384,768,1024 " +
                            "--downsample 4 --n 16 --batch 4 --repeats 3 --out-dir \"" +
                            dir.string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    const double elapsed = watch.seconds();
    if (rc != 0) {
        report(3, false, "benchmark runtime gap at 1024^2", "bench command failed");
        return;
    }
    // bench.csv: size,method,seconds,speedup,total_cost,cost_gap_vs_hungarian
    double greedy_seconds = -1.0, speedup = -1.0;
    std::istringstream csv(read_file(dir / "bench.csv"));
    std::string line;
    while (std::getline(csv, line)) {
        if (line.rfind("1024,greedy,", 0) == 0) {
            std::istringstream row(line.substr(12));
            char comma;
            row >> greedy_seconds >> comma >> speedup;
        }
    }
    const bool pass =
        greedy_seconds >= 0.0 && greedy_seconds < 0.5 && speedup >= 50.0 && elapsed < 300.0;
    report(3, pass, "batched greedy < 0.5 s and >= 50x over Hungarian at 1024^2",
           "greedy " + fmt(greedy_seconds) + " s, speedup " + fmt(speedup) + "x, bench " +
               fmt(elapsed) + " s");
}

// ------------------------------------------------------------------ 5

struct GradCheckStats {
    double max_rel_err = 0.0;
    int configs = 0;
    int probes = 0;
};

// Relative error with a floor that absorbs central-difference roundoff
// (~eps*|loss|/h ~ 1e-8 absolute at h = 1e-6), which otherwise dominates
// near-zero gradient components.
double rel_err(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    return std::abs(analytic - numeric) / scale;
}

void check_total_loss_grads(GradCheckStats& stats) {
    Rng rng(1005);
    while (stats.configs < 50) {
        const int n = rng.uniform_int(2, 6);
        const int k = rng.uniform_int(1, n);
        std::vector<SlotPredictions> preds(1);
        std::vector<RegionTargets> tgts(1);
        for (int j = 0; j < n; ++j) {
            preds[0].logits.push_back(rng.uniform(-3, 3));
            preds[0].points.push_back({rng.uniform(0, 8), rng.uniform(0, 8)});
            tgts[0].slot_to_gt.push_back(j < k ? j : -1);
        }
        for (int i = 0; i < k; ++i)
            tgts[0].gts.push_back({rng.uniform(0, 8), rng.uniform(0, 8)});

        bool kink = false;
        for (int j = 0; j < k; ++j)
            if (std::abs(preds[0].points[j].x - tgts[0].gts[j].x) < 1e-3 ||
                std::abs(preds[0].points[j].y - tgts[0].gts[j].y) < 1e-3)
                kink = true;
        if (kink) continue;

        std::vector<SlotGradients> grads;
        total_loss(preds, tgts, 10.0, 0.6, 2.0, &grads);
        const double h = 1e-6;
        for (int j = 0; j < n; ++j) {
            for (int coord = 0; coord < 3; ++coord) {
                auto eval = [&](double delta) {
                    auto copy = preds;
                    if (coord == 0)
                        copy[0].logits[j] += delta;
                    else if (coord == 1)
                        copy[0].points[j].x += delta;
                    else
                        copy[0].points[j].y += delta;
                    return total_loss(copy, tgts, 10.0, 0.6, 2.0).total;
                };
                const double numeric = (eval(h) - eval(-h)) / (2 * h);
                const double analytic = coord == 0   ? grads[0].dlogits[j]
                                        : coord == 1 ? grads[0].dpoints[j].x
                                                     : grads[0].dpoints[j].y;
                stats.max_rel_err = std::max(stats.max_rel_err, rel_err(analytic, numeric));
                ++stats.probes;
            }
        }
        ++stats.configs;
    }
}

void check_model_grads(GradCheckStats& stats) {
    Rng rng(1055);
    const int d = 2;
    const RegionGrid grid = make_grid(8, 8, d);
    const double eta = 0.8, lambda = 10.0, alpha = 0.6, gamma = 2.0;

    while (stats.configs < 100) {
        ModelParams params = init_params(rng.next_u64(), d, 4, 6);
        ScoreMap img(8, 8);
        for (auto& v : img.data()) v = rng.next_double();
        BinaryMask target(8, 8);
        for (int i = 0; i < 5; ++i)
            target.set(rng.uniform_int(0, 7), rng.uniform_int(0, 7), true);
        const RegionPointSets gt = group_by_region(mask_to_points(target), grid);

        const ForwardPass fp = forward(params, img, grid);
        // The assignment is held fixed while differentiating, matching the
        // training-time stop-gradient through the matching.
        const auto targets = assign_targets(gt, fp.regions, eta);

        // Reject configurations with an L1 kink at the base point.
        bool kink = false;
        for (std::size_t ri = 0; ri < targets.size() && !kink; ++ri)
            for (std::size_t j = 0; j < targets[ri].slot_to_gt.size() && !kink; ++j) {
                const int gi = targets[ri].slot_to_gt[j];
                if (gi < 0) continue;
                const Point& p = fp.regions[ri].points[j];
                const Point& g = targets[ri].gts[gi];
                if (std::abs(p.x - g.x) < 1e-4 || std::abs(p.y - g.y) < 1e-4) kink = true;
            }
        if (kink) continue;

        std::vector<SlotGradients> loss_grads;
        total_loss(fp.regions, targets, lambda, alpha, gamma, &loss_grads);
        const ParamGrads analytic = backward(params, fp, loss_grads);

        std::vector<double*> entries;
        std::vector<const std::vector<double>*> grad_vecs = {
            &analytic.w1, &analytic.b1, &analytic.w_obj,
            &analytic.b_obj, &analytic.w_loc, &analytic.b_loc};
        std::vector<std::vector<double>*> param_vecs = {&params.w1, &params.b1, &params.w_obj,
                                                        &params.b_obj, &params.w_loc,
                                                        &params.b_loc};
        std::vector<double> flat_grads;
        for (const auto* v : grad_vecs) flat_grads.insert(flat_grads.end(), v->begin(), v->end());
        for (auto* v : param_vecs)
            for (auto& x : *v) entries.push_back(&x);

        auto loss_at = [&]() {
            const ForwardPass probe = forward(params, img, grid);
            return total_loss(probe.regions, targets, lambda, alpha, gamma).total;
        };

        const double h = 1e-6;
        const std::size_t stride = std::max<std::size_t>(1, entries.size() / 12);
        for (std::size_t idx = rng.next_below(stride); idx < entries.size(); idx += stride) {
            double* w = entries[idx];
            const double saved = *w;
            *w = saved + h;
            const double up = loss_at();
            *w = saved - h;
            const double down = loss_at();
            *w = saved;
            const double numeric = (up - down) / (2 * h);
            stats.max_rel_err = std::max(stats.max_rel_err, rel_err(flat_grads[idx], numeric));
            ++stats.probes;
        }
        ++stats.configs;
    }
}

void criterion_5_gradients() {
    Stopwatch watch;
    GradCheckStats stats;
    check_total_loss_grads(stats);
    check_model_grads(stats);
    const double elapsed = watch.seconds();
    const bool pass = stats.max_rel_err < 1e-5 && elapsed < 60.0;
    report(5, pass, "analytic gradients match finite differences",
           std::to_string(stats.configs) + " configs, " + std::to_string(stats.probes) +
               " probes, max rel err " + fmt(stats.max_rel_err) + ", " + fmt(elapsed) + " s");
}

// -------------------------------------------------------------- 6 and 4

struct TaskOutcome {
    double seconds = 0.0;
    ModelParams params;
    std::vector<SyntheticSample> heldout;
};

SynthParams fixture_params() {
    SynthParams p;
    p.height = 48;
    p.width = 48;
    p.n_branches = 3;
    p.width_min = 2;
    p.width_max = 4;
    p.noise = 0.05;
    return p;
}

TaskOutcome train_task(bool centerline) {
    Stopwatch watch;
    const SynthParams sp = fixture_params();
    const auto train_samples = generate_dataset(2000, 64, sp);
    TaskOutcome out;
    out.heldout = generate_dataset(9000, 16, sp);

    std::vector<TrainExample> data;
    data.reserve(train_samples.size());
    for (const auto& s : train_samples)
        data.push_back({s.image, centerline ? s.centerline : s.mask});

    TrainConfig cfg;  // the reference defaults
    if (centerline) cfg.alpha = 0.7;
    const TrainResult result = train(data, cfg);
    out.params = result.params;
    out.seconds = watch.seconds();
    return out;
}

void criterion_6_end_to_end(TaskOutcome& mask_task) {
    mask_task = train_task(false);
    const RegionGrid grid = make_grid(48, 48, 4);

    double dice_sum = 0.0, cldice_sum = 0.0;
    for (const auto& s : mask_task.heldout) {
        const auto points = predict(mask_task.params, s.image, grid, 0.1);
        const BinaryMask pred = threshold_map(rasterize(points, 48, 48), 0.5);
        dice_sum += dice(pred, s.mask);
        cldice_sum += cl_dice(pred, s.mask);
    }
    const double mean_dice = dice_sum / mask_task.heldout.size();
    const double mean_cldice = cldice_sum / mask_task.heldout.size();

    const TaskOutcome cl_task = train_task(true);
    double tol_dice_sum = 0.0;
    for (const auto& s : cl_task.heldout) {
        const auto points = predict(cl_task.params, s.image, grid, 0.1);
        const BinaryMask pred = threshold_map(rasterize(points, 48, 48), 0.5);
        tol_dice_sum += tolerant_centerline_scores(pred, s.centerline, 3.0).dice;
    }
    const double mean_tol_dice = tol_dice_sum / cl_task.heldout.size();

    const bool pass = mean_dice >= 0.85 && mean_cldice >= 0.80 && mean_tol_dice >= 0.80 &&
                      mask_task.seconds < 300.0 && cl_task.seconds < 300.0;
    report(6, pass, "end-to-end learning on 64 synthetic samples",
           "dice " + fmt(mean_dice) + ", clDice " + fmt(mean_cldice) + ", tolerant dice " +
               fmt(mean_tol_dice) + ", train " + fmt(mask_task.seconds) + "+" +
               fmt(cl_task.seconds) + " s");
}

void criterion_4_quality_gap(const TaskOutcome& mask_task) {
    if (mask_task.heldout.empty()) {
        report(4, false, "greedy cost within 10% of Hungarian", "no trained model available");
        return;
    }
    const RegionGrid grid = make_grid(48, 48, 4);
    double greedy_total = 0.0, hungarian_total = 0.0;
    int regions_used = 0;
    for (const auto& s : mask_task.heldout) {
        const ForwardPass fp = forward(mask_task.params, s.image, grid);
        const RegionPointSets gt = group_by_region(mask_to_points(s.mask), grid);
        for (int ri = 0; ri < grid.region_count(); ++ri) {
            const auto& gts = gt.points(ri);
            if (gts.empty() || regions_used >= 200) continue;
            std::vector<ScoredPoint> preds(fp.regions[ri].points.size());
            for (std::size_t j = 0; j < preds.size(); ++j)
                preds[j] = {fp.regions[ri].points[j],
                            1.0 / (1.0 + std::exp(-fp.regions[ri].logits[j]))};
            const CostMatrix c = cost_matrix(gts, preds, 0.8);
            greedy_total += total_cost(c, greedy_match(c));
            hungarian_total += total_cost(c, hungarian_match(c));
            ++regions_used;
        }
    }
    const double gap =
        hungarian_total == 0.0 ? 0.0 : (greedy_total - hungarian_total) / hungarian_total;
    const bool pass = regions_used >= 200 && gap <= 0.10 && gap >= 0.0;
    report(4, pass, "greedy cost within 10% of Hungarian on trained regions",
           std::to_string(regions_used) + " regions, gap " + fmt(100.0 * gap) + "%");
}

// ------------------------------------------------------------------ 7

void criterion_7_topology_fixtures() {
    bool pass = true;
    std::string detail;

    BinaryMask ring(8, 8);
    for (int i = 1; i <= 6; ++i) {
        ring.set(1, i, true);
        ring.set(6, i, true);
        ring.set(i, 1, true);
        ring.set(i, 6, true);
    }
    const BettiNumbers ring_b = betti_numbers(ring);
    if (ring_b.beta0 != 1 || ring_b.beta1 != 1 || euler_characteristic(ring) != 0) {
        pass = false;
        detail = "ring fixture mismatch";
    }

    BinaryMask square(7, 7);
    for (int r = 1; r < 6; ++r)
        for (int c = 1; c < 6; ++c) square.set(r, c, true);
    const BettiNumbers square_b = betti_numbers(square);
    if (square_b.beta0 != 1 || square_b.beta1 != 0 || euler_characteristic(square) != 1) {
        pass = false;
        detail = "square fixture mismatch";
    }

    // Independent cell-complex count: V - E + F.
    Rng rng(1007);
    for (int trial = 0; trial < 100 && pass; ++trial) {
        const int h = rng.uniform_int(1, 32);
        const int w = rng.uniform_int(1, 32);
        BinaryMask m(h, w);
        const double density = rng.uniform(0.2, 0.8);
        for (auto& v : m.data()) v = rng.next_double() < density ? 1 : 0;

        long vertices = 0, edges = 0, faces = 0;
        auto fg = [&](int r, int c) { return m.in_bounds(r, c) && m.at(r, c); };
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                if (!fg(r, c)) continue;
                ++vertices;
                if (fg(r, c + 1)) ++edges;
                if (fg(r + 1, c)) ++edges;
                if (fg(r, c + 1) && fg(r + 1, c) && fg(r + 1, c + 1)) ++faces;
            }
        if (euler_characteristic(m) != vertices - edges + faces) {
            pass = false;
            detail = "V-E+F mismatch at trial " + std::to_string(trial);
        }
    }
    if (pass) detail = "ring (1,1,0), square (1,0,1), 100 random V-E+F exact";
    report(7, pass, "topology metric fixtures", detail);
}

// ------------------------------------------------------------------ 8

void criterion_8_round_trip() {
    Rng rng(1008);
    bool pass = true;
    for (int trial = 0; trial < 100 && pass; ++trial) {
        const int h = rng.uniform_int(1, 24);
        const int w = rng.uniform_int(1, 24);
        BinaryMask m(h, w);
        const double density = rng.next_double();
        for (auto& v : m.data()) v = rng.next_double() < density ? 1 : 0;
        std::vector<ScoredPoint> unit;
        for (const auto& p : mask_to_points(m)) unit.push_back({p, 1.0});
        pass = threshold_map(rasterize(unit, h, w), 0.5) == m;
    }
    report(8, pass, "mask -> points -> rasterize -> threshold is the identity",
           pass ? "100 random masks exact" : "round trip mismatch");
}

// ------------------------------------------------------------------ 9

bool same_bytes(const fs::path& a, const fs::path& b) {
    const std::string ba = read_file(a);
    return !ba.empty() && ba == read_file(b);
}

void criterion_9_determinism(const std::string& cli) {
    const fs::path base = fs::temp_directory_path() / "tubepoints_accept_det";
    fs::remove_all(base);
    fs::create_directories(base);
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null";
        return std::system(cmd.c_str());
    };

    bool pass = true;
    std::string detail = "synth + train byte-identical";
    const std::string synth_flags = "synth --seed 5 --count 3 --size 48 --branches 3 ";
    if (run(synth_flags + "--out-dir \"" + (base / "a").string() + "\"") != 0 ||
        run(synth_flags + "--out-dir \"" + (base / "b").string() + "\"") != 0) {
        pass = false;
        detail = "synth command failed";
    }
    for (int k = 0; k < 3 && pass; ++k) {
        for (const std::string prefix : {"image_", "mask_", "centerline_"}) {
            const std::string name = prefix + std::to_string(k) + ".pgm";
            if (!same_bytes(base / "a" / name, base / "b" / name)) {
                pass = false;
                detail = "dataset files differ: " + name;
            }
        }
    }

    if (pass) {
        const std::string train_flags = "train --data-dir \"" + (base / "a").string() +
                                        "\" --iters 120 --hidden 12 --batch 2 --seed 77 ";
        if (run(train_flags + "--out-dir \"" + (base / "ta").string() + "\"") != 0 ||
            run(train_flags + "--out-dir \"" + (base / "tb").string() + "\"") != 0) {
            pass = false;
            detail = "train command failed";
        } else if (!same_bytes(base / "ta" / "model.bin", base / "tb" / "model.bin")) {
            pass = false;
            detail = "model files differ";
        } else if (!same_bytes(base / "ta" / "history.csv", base / "tb" / "history.csv")) {
            pass = false;
            detail = "history files differ";
        }
    }
    report(9, pass, "cmd_train and cmd_synth are byte-deterministic", detail);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    if (argc > 1) {
        cli = argv[1];
    } else {
        // Default relative guess for a manual run from the build directory.
        cli = "tools/tubepoints";
    }

    criterion_1_hungarian_oracle();
    criterion_2_batched_equivalence();
    criterion_3_runtime_gap(cli);
    criterion_5_gradients();
    TaskOutcome mask_task;
    criterion_6_end_to_end(mask_task);
    criterion_4_quality_gap(mask_task);
    criterion_7_topology_fixtures();
    criterion_8_round_trip();
    criterion_9_determinism(cli);

    std::sort(g_lines.begin(), g_lines.end());
    for (const auto& [criterion, line] : g_lines) std::printf("%s\n", line.c_str());
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
