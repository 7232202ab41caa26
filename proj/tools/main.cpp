// Command-line surface: dataset synthesis, training, prediction,
// evaluation, format conversion, and the matching benchmark.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tubepoints/convert.hpp"
#include "tubepoints/io.hpp"
#include "tubepoints/matching.hpp"
#include "tubepoints/metrics.hpp"
#include "tubepoints/model.hpp"
#include "tubepoints/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, json config,
                    const std::vector<std::string>& files, double wall_seconds) {
    json manifest;
    manifest["tool"] = "tubepoints";
    manifest["version"] = kVersion;
    manifest["command"] = command;
    manifest["config"] = std::move(config);
    manifest["files"] = files;
    manifest["timings"] = {{"wall_seconds", wall_seconds}};
    manifest["threads"] = 1;
    tp::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw tp::io_error("cannot create output directory: " + dir.string());
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::uint64_t seed = 1;
    int count = 1;
    int size = 48;
    int branches = 3;
    int width_min = 2;
    int width_max = 4;
    double noise = 0.05;
    int downsample = 4;
    std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
    Stopwatch watch;
    if (a.downsample >= 1 && a.size % a.downsample != 0)
        throw tp::dimension_error("synth: --size " + std::to_string(a.size) +
                                  " is not divisible by --downsample " +
                                  std::to_string(a.downsample));
    ensure_out_dir(a.out_dir);
    tp::SynthParams params{a.size, a.size, a.branches, a.width_min, a.width_max, a.noise};

    std::vector<std::string> files;
    for (int k = 0; k < a.count; ++k) {
        const tp::SyntheticSample sample = tp::generate_sample(a.seed + k, params);
        const std::string img = "image_" + std::to_string(k) + ".pgm";
        const std::string msk = "mask_" + std::to_string(k) + ".pgm";
        const std::string cl = "centerline_" + std::to_string(k) + ".pgm";
        tp::write_pgm((fs::path(a.out_dir) / img).string(), tp::scoremap_to_pgm(sample.image));
        tp::write_pgm((fs::path(a.out_dir) / msk).string(), tp::mask_to_pgm(sample.mask));
        tp::write_pgm((fs::path(a.out_dir) / cl).string(), tp::mask_to_pgm(sample.centerline));
        files.insert(files.end(), {img, msk, cl});
    }

    json config = {{"seed", a.seed},       {"count", a.count},
                   {"size", a.size},       {"branches", a.branches},
                   {"width_min", a.width_min}, {"width_max", a.width_max},
                   {"noise", a.noise},     {"downsample", a.downsample}};
    write_manifest(a.out_dir, "synth", config, files, watch.seconds());
    std::cout << "wrote " << a.count << " samples to " << a.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data_dir;
    std::string out_dir;
    std::string target = "mask";
    tp::TrainConfig config;
    bool alpha_given = false;
};

std::vector<tp::TrainExample> load_dataset(const std::string& data_dir,
                                           const std::string& target_prefix) {
    std::vector<tp::TrainExample> dataset;
    for (int k = 0;; ++k) {
        const fs::path img = fs::path(data_dir) / ("image_" + std::to_string(k) + ".pgm");
        if (!fs::exists(img)) break;
        const fs::path tgt =
            fs::path(data_dir) / (target_prefix + "_" + std::to_string(k) + ".pgm");
        if (!fs::exists(tgt))
            throw tp::pairing_error("train: " + img.string() + " has no matching " +
                                    tgt.string());
        dataset.push_back({tp::pgm_to_scoremap(tp::read_pgm(img.string())),
                           tp::pgm_to_mask(tp::read_pgm(tgt.string()))});
    }
    if (dataset.empty())
        throw tp::io_error("train: no image_<k>.pgm files found in " + data_dir);
    return dataset;
}

int cmd_train(TrainArgs& a) {
    Stopwatch watch;
    if (a.target != "mask" && a.target != "centerline")
        throw tp::parameter_error("train: --target must be mask or centerline, got " + a.target);
    if (!a.alpha_given && a.target == "centerline") a.config.alpha = 0.7;

    const auto dataset = load_dataset(a.data_dir, a.target);
    ensure_out_dir(a.out_dir);

    const tp::TrainResult result = tp::train(dataset, a.config);
    tp::write_model((fs::path(a.out_dir) / "model.bin").string(), result.params);

    std::string csv = "step,objectness,regression,total\n";
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const auto& h = result.history[i];
        csv += std::to_string(i) + "," + format_double(h.objectness) + "," +
               format_double(h.regression) + "," + format_double(h.total) + "\n";
    }
    tp::write_text_file((fs::path(a.out_dir) / "history.csv").string(), csv);

    json config = {{"data_dir", a.data_dir},
                   {"target", a.target},
                   {"downsample", a.config.downsample},
                   {"points_per_region", a.config.points_per_region},
                   {"eta", a.config.eta},
                   {"lambda", a.config.lambda},
                   {"alpha", a.config.alpha},
                   {"gamma", a.config.gamma},
                   {"inference_threshold", a.config.inference_threshold},
                   {"learning_rate", a.config.learning_rate},
                   {"momentum", a.config.momentum},
                   {"iterations", a.config.iterations},
                   {"batch_size", a.config.batch_size},
                   {"hidden", a.config.hidden},
                   {"seed", a.config.seed}};
    write_manifest(a.out_dir, "train", config, {"model.bin", "history.csv"}, watch.seconds());

    const double first = result.history.empty() ? 0.0 : result.history.front().total;
    const double last = result.history.empty() ? 0.0 : result.history.back().total;
    std::cout << "trained " << a.config.iterations << " steps on " << dataset.size()
              << " samples; loss " << first << " -> " << last << "\n";
    return 0;
}

// -------------------------------------------------------------- predict

struct PredictArgs {
    std::string model;
    std::string image;
    std::string image_dir;
    std::string out_dir;
    double threshold = 0.1;
};

void predict_one(const tp::ModelParams& params, const std::string& image_path,
                 const fs::path& points_out, const fs::path& map_out, double threshold) {
    const tp::ScoreMap image = tp::pgm_to_scoremap(tp::read_pgm(image_path));
    const tp::RegionGrid grid = tp::make_grid(image.height(), image.width(), params.downsample);
    const std::vector<tp::ScoredPoint> points = tp::predict(params, image, grid, threshold);
    tp::write_points_jsonl(points_out.string(), points);
    tp::write_pgm(map_out.string(),
                  tp::scoremap_to_pgm(tp::rasterize(points, image.height(), image.width())));
}

int cmd_predict(const PredictArgs& a) {
    Stopwatch watch;
    if (a.image.empty() == a.image_dir.empty())
        throw tp::parameter_error("predict: exactly one of --image / --image-dir is required");
    const tp::ModelParams params = tp::read_model(a.model);
    ensure_out_dir(a.out_dir);

    std::vector<std::string> files;
    if (!a.image.empty()) {
        predict_one(params, a.image, fs::path(a.out_dir) / "points.jsonl",
                    fs::path(a.out_dir) / "scoremap.pgm", a.threshold);
        files = {"points.jsonl", "scoremap.pgm"};
    } else {
        for (int k = 0;; ++k) {
            const fs::path img = fs::path(a.image_dir) / ("image_" + std::to_string(k) + ".pgm");
            if (!fs::exists(img)) break;
            const std::string pts = "points_" + std::to_string(k) + ".jsonl";
            const std::string map = "scoremap_" + std::to_string(k) + ".pgm";
            predict_one(params, img.string(), fs::path(a.out_dir) / pts,
                        fs::path(a.out_dir) / map, a.threshold);
            files.insert(files.end(), {pts, map});
        }
        if (files.empty())
            throw tp::io_error("predict: no image_<k>.pgm files found in " + a.image_dir);
    }

    json config = {{"model", a.model}, {"threshold", a.threshold}};
    write_manifest(a.out_dir, "predict", config, files, watch.seconds());
    std::cout << "wrote " << files.size() << " files to " << a.out_dir << "\n";
    return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string pred_dir;
    std::string gt_dir;
    std::string gt_prefix = "mask";
    bool centerline = false;
    double tolerance = 3.0;
    std::string out = "metrics.json";
};

json eval_pair(const tp::ScoreMap& score_map, const tp::BinaryMask& gt, bool centerline,
               double tolerance) {
    const tp::BinaryMask pred = tp::threshold_map(score_map, 0.5);
    json j;
    j["auc"] = tp::auc(score_map, gt);
    j["dice"] = tp::dice(pred, gt);
    j["cl_dice"] = tp::cl_dice(pred, gt);
    j["accuracy"] = tp::accuracy(pred, gt);
    j["precision"] = tp::precision(pred, gt);
    j["recall"] = tp::recall(pred, gt);
    const tp::BettiNumbers bp = tp::betti_numbers(pred);
    const tp::BettiNumbers bg = tp::betti_numbers(gt);
    j["betti0_error"] = std::abs(bp.beta0 - bg.beta0);
    j["betti1_error"] = std::abs(bp.beta1 - bg.beta1);
    j["euler_error"] =
        std::abs(tp::euler_characteristic(pred) - tp::euler_characteristic(gt));
    if (centerline) {
        const tp::TolerantScores t = tp::tolerant_centerline_scores(pred, gt, tolerance);
        j["tolerant_precision"] = t.precision;
        j["tolerant_recall"] = t.recall;
        j["tolerant_dice"] = t.dice;
    }
    return j;
}

int cmd_eval(EvalArgs& a) {
    if (a.centerline && a.gt_prefix == "mask") a.gt_prefix = "centerline";

    std::vector<std::pair<std::string, std::string>> pairs;
    if (!a.pred.empty() && !a.gt.empty()) {
        pairs.emplace_back(a.pred, a.gt);
    } else if (!a.pred_dir.empty() && !a.gt_dir.empty()) {
        for (int k = 0;; ++k) {
            const fs::path p = fs::path(a.pred_dir) / ("scoremap_" + std::to_string(k) + ".pgm");
            const fs::path g =
                fs::path(a.gt_dir) / (a.gt_prefix + "_" + std::to_string(k) + ".pgm");
            const bool has_p = fs::exists(p);
            const bool has_g = fs::exists(g);
            if (!has_p && !has_g) break;
            if (has_p != has_g)
                throw tp::pairing_error("eval: unpaired files at index " + std::to_string(k) +
                                        " (" + p.string() + " / " + g.string() + ")");
            pairs.emplace_back(p.string(), g.string());
        }
        if (pairs.empty())
            throw tp::pairing_error("eval: no scoremap_<k>.pgm / " + a.gt_prefix +
                                    "_<k>.pgm pairs found");
    } else {
        throw tp::parameter_error("eval: provide --pred/--gt or --pred-dir/--gt-dir");
    }

    json per_image = json::array();
    json mean;
    for (const auto& [pred_path, gt_path] : pairs) {
        const tp::ScoreMap sm = tp::pgm_to_scoremap(tp::read_pgm(pred_path));
        const tp::BinaryMask gt = tp::pgm_to_mask(tp::read_pgm(gt_path));
        json j = eval_pair(sm, gt, a.centerline, a.tolerance);
        j["pred"] = pred_path;
        j["gt"] = gt_path;
        per_image.push_back(j);
    }
    for (auto& [key, value] : per_image[0].items()) {
        if (!value.is_number()) continue;
        double sum = 0.0;
        for (const auto& j : per_image) sum += j[key].get<double>();
        mean[key] = sum / per_image.size();
    }

    json out;
    out["per_image"] = per_image;
    out["mean"] = mean;
    out["centerline_mode"] = a.centerline;
    if (a.centerline) out["tolerance"] = a.tolerance;
    tp::write_text_file(a.out, out.dump(2) + "\n");
    std::cout << "evaluated " << pairs.size() << " pairs -> " << a.out << "\n";
    std::cout << mean.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------- bench-match

struct BenchArgs {
    std::string image_sizes = "384,768,1024";
    int downsample = 4;
    int n = 16;
    int batch = 4;
    int repeats = 3;
    std::uint64_t seed = 7;
    std::string out_dir = "bench";
};

// Cost matrices drawn from a synthetic tubular layout at the requested
// geometry: regions that contain ground-truth points get a K x N matrix
// built from N random prediction slots around the region.
std::vector<tp::CostMatrix> bench_costs(int size, int downsample, int n, int batch,
                                        std::uint64_t seed, json* stats) {
    std::vector<tp::CostMatrix> costs;
    long total_points = 0;
    for (int b = 0; b < batch; ++b) {
        tp::SynthParams params;
        params.height = size;
        params.width = size;
        params.n_branches = std::max(4, size / 32);
        params.width_min = 2;
        params.width_max = 5;
        params.noise = 0.0;
        const tp::SyntheticSample sample = tp::generate_sample(seed + 1000 + b, params);
        const tp::RegionGrid grid = tp::make_grid(size, size, downsample);
        const tp::RegionPointSets sets =
            tp::group_by_region(tp::mask_to_points(sample.mask), grid);

        tp::Rng rng(seed + 31 * b);
        for (int ri = 0; ri < grid.region_count(); ++ri) {
            const auto& gts = sets.points(ri);
            if (gts.empty()) continue;
            total_points += static_cast<long>(gts.size());
            const tp::Point center = tp::region_center(grid, grid.from_flat(ri));
            std::vector<tp::ScoredPoint> preds(n);
            for (int j = 0; j < n; ++j)
                preds[j] = {{center.x + rng.uniform(-downsample, downsample),
                             center.y + rng.uniform(-downsample, downsample)},
                            rng.next_double()};
            costs.push_back(tp::cost_matrix(gts, preds, 0.8));
        }
    }
    if (stats) {
        (*stats)["regions_with_points"] = costs.size();
        (*stats)["total_gt_points"] = total_points;
        (*stats)["mean_k"] =
            costs.empty() ? 0.0 : static_cast<double>(total_points) / costs.size();
    }
    return costs;
}

int cmd_bench_match(const BenchArgs& a) {
    Stopwatch watch;
    ensure_out_dir(a.out_dir);
    std::vector<int> sizes;
    {
        std::string token;
        for (char ch : a.image_sizes + ",") {
            if (ch == ',') {
                if (!token.empty()) sizes.push_back(std::stoi(token));
                token.clear();
            } else {
                token += ch;
            }
        }
    }
    if (sizes.empty()) throw tp::parameter_error("bench-match: no --image-sizes given");

    std::string csv = "size,method,seconds,speedup,total_cost,cost_gap_vs_hungarian\n";
    json stats = json::array();
    for (int size : sizes) {
        json size_stats = {{"size", size}};
        const auto costs =
            bench_costs(size, a.downsample, a.n, a.batch, a.seed, &size_stats);

        double greedy_seconds = std::numeric_limits<double>::infinity();
        double hungarian_seconds = std::numeric_limits<double>::infinity();
        double greedy_total = 0.0;
        double hungarian_total = 0.0;
        for (int rep = 0; rep < a.repeats; ++rep) {
            Stopwatch tg;
            const auto greedy_results = tp::batched_greedy(costs);
            greedy_seconds = std::min(greedy_seconds, tg.seconds());
            greedy_total = 0.0;
            for (std::size_t i = 0; i < costs.size(); ++i)
                greedy_total += tp::total_cost(costs[i], greedy_results[i]);

            Stopwatch th;
            std::vector<tp::MatchResult> hungarian_results;
            hungarian_results.reserve(costs.size());
            for (const auto& c : costs) hungarian_results.push_back(tp::hungarian_match(c));
            hungarian_seconds = std::min(hungarian_seconds, th.seconds());
            hungarian_total = 0.0;
            for (std::size_t i = 0; i < costs.size(); ++i)
                hungarian_total += tp::total_cost(costs[i], hungarian_results[i]);
        }

        const double speedup = hungarian_seconds / greedy_seconds;
        const double gap = hungarian_total == 0.0
                               ? 0.0
                               : (greedy_total - hungarian_total) / hungarian_total;
        csv += std::to_string(size) + ",greedy," + format_double(greedy_seconds) + "," +
               format_double(speedup) + "," + format_double(greedy_total) + "," +
               format_double(gap) + "\n";
        csv += std::to_string(size) + ",hungarian," + format_double(hungarian_seconds) +
               ",1," + format_double(hungarian_total) + ",0\n";
        size_stats["greedy_seconds"] = greedy_seconds;
        size_stats["hungarian_seconds"] = hungarian_seconds;
        size_stats["speedup"] = speedup;
        size_stats["cost_gap"] = gap;
        stats.push_back(size_stats);
        std::cout << "size " << size << ": greedy " << greedy_seconds << " s, hungarian "
                  << hungarian_seconds << " s, speedup " << speedup << "x, cost gap " << gap
                  << "\n";
    }
    tp::write_text_file((fs::path(a.out_dir) / "bench.csv").string(), csv);

    json config = {{"image_sizes", a.image_sizes}, {"downsample", a.downsample},
                   {"n", a.n},                     {"batch", a.batch},
                   {"repeats", a.repeats},         {"seed", a.seed},
                   {"layout", "synthetic tubular masks, width 2-5, branches max(4, size/32)"},
                   {"per_size", stats}};
    write_manifest(a.out_dir, "bench-match", config, {"bench.csv"}, watch.seconds());
    return 0;
}

// -------------------------------------------------------------- convert

struct ConvertArgs {
    std::string mode;
    std::string in;
    std::string out;
    int height = 0;
    int width = 0;
    double threshold = 0.5;
};

int cmd_convert(const ConvertArgs& a) {
    if (a.mode == "mask2points") {
        const tp::BinaryMask mask = tp::pgm_to_mask(tp::read_pgm(a.in));
        std::vector<tp::ScoredPoint> points;
        for (const auto& p : tp::mask_to_points(mask)) points.push_back({p, 1.0});
        tp::write_points_jsonl(a.out, points);
        std::cout << "wrote " << points.size() << " points to " << a.out << "\n";
    } else if (a.mode == "points2mask") {
        if (a.height <= 0 || a.width <= 0)
            throw tp::parameter_error("convert: points2mask requires --height and --width");
        const auto points = tp::read_points_jsonl(a.in);
        const tp::BinaryMask mask =
            tp::threshold_map(tp::rasterize(points, a.height, a.width), a.threshold);
        tp::write_pgm(a.out, tp::mask_to_pgm(mask));
        std::cout << "wrote mask to " << a.out << "\n";
    } else {
        throw tp::parameter_error("convert: --mode must be mask2points or points2mask");
    }
    return 0;
}

int error_code_for(const tp::error& e) {
    if (dynamic_cast<const tp::dimension_error*>(&e)) return 3;
    if (dynamic_cast<const tp::bounds_error*>(&e)) return 4;
    if (dynamic_cast<const tp::capacity_error*>(&e)) return 5;
    if (dynamic_cast<const tp::parameter_error*>(&e)) return 6;
    if (dynamic_cast<const tp::pairing_error*>(&e)) return 7;
    if (dynamic_cast<const tp::undefined_metric_error*>(&e)) return 8;
    if (dynamic_cast<const tp::parse_error*>(&e)) return 9;
    if (dynamic_cast<const tp::io_error*>(&e)) return 10;
    if (dynamic_cast<const tp::contract_error*>(&e)) return 11;
    return 12;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-set prediction toolkit for tubular structures"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic tubular dataset");
    synth->add_option("--seed", synth_args.seed);
    synth->add_option("--count", synth_args.count);
    synth->add_option("--size", synth_args.size, "Square image size in pixels");
    synth->add_option("--branches", synth_args.branches);
    synth->add_option("--width-min", synth_args.width_min);
    synth->add_option("--width-max", synth_args.width_max);
    synth->add_option("--noise", synth_args.noise);
    synth->add_option("--downsample", synth_args.downsample,
                      "Region size the images must be divisible by");
    synth->add_option("--out-dir", synth_args.out_dir)->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train the patch-wise point predictor");
    train->add_option("--data-dir", train_args.data_dir)->required();
    train->add_option("--out-dir", train_args.out_dir)->required();
    train->add_option("--target", train_args.target, "mask or centerline");
    train->add_option("--downsample", train_args.config.downsample);
    train->add_option("--n", train_args.config.points_per_region);
    train->add_option("--eta", train_args.config.eta);
    train->add_option("--lambda", train_args.config.lambda);
    auto* alpha_opt = train->add_option("--alpha", train_args.config.alpha);
    train->add_option("--gamma", train_args.config.gamma);
    train->add_option("--threshold", train_args.config.inference_threshold);
    train->add_option("--lr", train_args.config.learning_rate);
    train->add_option("--momentum", train_args.config.momentum);
    train->add_option("--iters", train_args.config.iterations);
    train->add_option("--batch", train_args.config.batch_size);
    train->add_option("--hidden", train_args.config.hidden);
    train->add_option("--seed", train_args.config.seed);

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Predict points for an image or directory");
    predict->add_option("--model", predict_args.model)->required();
    predict->add_option("--image", predict_args.image);
    predict->add_option("--image-dir", predict_args.image_dir);
    predict->add_option("--threshold", predict_args.threshold);
    predict->add_option("--out-dir", predict_args.out_dir)->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
    eval->add_option("--pred", eval_args.pred, "Single score-map PGM");
    eval->add_option("--gt", eval_args.gt, "Single ground-truth PGM");
    eval->add_option("--pred-dir", eval_args.pred_dir);
    eval->add_option("--gt-dir", eval_args.gt_dir);
    eval->add_option("--gt-prefix", eval_args.gt_prefix, "mask or centerline");
    eval->add_flag("--centerline", eval_args.centerline, "Tolerant centerline scoring");
    eval->add_option("--tolerance", eval_args.tolerance);
    eval->add_option("--out", eval_args.out);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench-match", "Benchmark greedy vs Hungarian matching");
    bench->add_option("--image-sizes", bench_args.image_sizes, "Comma-separated sizes");
    bench->add_option("--downsample", bench_args.downsample);
    bench->add_option("--n", bench_args.n);
    bench->add_option("--batch", bench_args.batch);
    bench->add_option("--repeats", bench_args.repeats);
    bench->add_option("--seed", bench_args.seed);
    bench->add_option("--out-dir", bench_args.out_dir);

    ConvertArgs convert_args;
    auto* convert = app.add_subcommand("convert", "Convert between masks and point sets");
    convert->add_option("--mode", convert_args.mode, "mask2points or points2mask")->required();
    convert->add_option("--in", convert_args.in)->required();
    convert->add_option("--out", convert_args.out)->required();
    convert->add_option("--height", convert_args.height);
    convert->add_option("--width", convert_args.width);
    convert->add_option("--threshold", convert_args.threshold);

    CLI11_PARSE(app, argc, argv);

    try {
        train_args.alpha_given = alpha_opt->count() > 0;
        if (synth->parsed()) return cmd_synth(synth_args);
        if (train->parsed()) return cmd_train(train_args);
        if (predict->parsed()) return cmd_predict(predict_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (bench->parsed()) return cmd_bench_match(bench_args);
        if (convert->parsed()) return cmd_convert(convert_args);
    } catch (const tp::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return error_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
