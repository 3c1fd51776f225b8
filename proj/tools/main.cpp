// Command-line front end for the adaptive-convolution RGB-D pipeline:
// completion, refinement, super-resolution, end-to-end processing, training,
// dataset synthesis, evaluation and gradient diagnostics.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "argbd/argbd.hpp"

namespace fs = std::filesystem;
using namespace argbd;

namespace {

struct CommonOpts {
    int threads = 0;
    bool deterministic = false;
    std::uint64_t seed = 0;

    RunContext context() const { return RunContext{threads, deterministic}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--threads", threads, "Worker threads (0 = ARGBD_THREADS or all cores)");
        cmd->add_flag("--deterministic", deterministic, "Pin reduction order for reproducibility");
        cmd->add_option("--seed", seed, "Seed for every random choice in this command");
    }
};

std::pair<std::string, std::string> split_pair_arg(const std::string& arg) {
    const std::size_t comma = arg.find(',');
    if (comma == std::string::npos) {
        throw ConfigError("--in expects 'rgb.png,depth.png'");
    }
    return {arg.substr(0, comma), arg.substr(comma + 1)};
}

GateOrientation parse_orientation(const std::string& name) {
    if (name == "similarity") return GateOrientation::similarity_keeping;
    if (name == "literal") return GateOrientation::literal_eq;
    throw ConfigError("--gate-orientation must be 'similarity' or 'literal'");
}

CompletionNet<float> load_completion_net(const std::string& path) {
    CompletionNet<float> net(0);
    network_from_checkpoint<float>(net, load_checkpoint(path), NetworkKind::completion);
    return net;
}

SrNet<float> load_sr_net(const std::string& path, index_t r_flag, GateOrientation orientation) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.kind != NetworkKind::super_resolution) {
        throw CheckpointError("'" + path + "' does not hold a super-resolution network");
    }
    const index_t r = ckpt.aux;
    if (r_flag != 0 && r_flag != r) {
        throw ConfigError("--r " + std::to_string(r_flag) + " does not match the checkpoint (r=" +
                          std::to_string(r) + ")");
    }
    DepthGateConfig gate;
    gate.orientation = orientation;
    SrNet<float> net(r, 0, gate);
    network_from_checkpoint<float>(net, ckpt, NetworkKind::super_resolution);
    return net;
}

void write_depth_outputs(const RgbdImage& img, const fs::path& out_dir, const std::string& stem,
                         bool pointcloud) {
    fs::create_directories(out_dir);
    save_depth_png(img.depth, img.width, img.height, (out_dir / (stem + ".png")).string());
    if (pointcloud) export_pointcloud(img, (out_dir / (stem + ".ply")).string());
}

void report_against_gt(const std::string& gt_path, const Tensor<float>& pred_unit,
                       const DepthNormalization& norm, const FilterMap& eval_mask,
                       const fs::path& out_dir) {
    auto [gt_raw, dims] = load_depth_png(gt_path);
    if (dims.first != pred_unit.shape().width || dims.second != pred_unit.shape().height) {
        throw IoError("ground truth dimensions do not match the prediction");
    }
    Tensor<float> gt(1, 1, dims.second, dims.first);
    const double inv = 1.0 / norm.span();
    for (index_t y = 0; y < dims.second; ++y) {
        for (index_t x = 0; x < dims.first; ++x) {
            const std::uint16_t d = gt_raw[static_cast<std::size_t>(y * dims.first + x)];
            gt(0, 0, y, x) = d == 0 ? 0.0f : static_cast<float>((d - norm.min_mm) * inv);
        }
    }
    ErrorReport report = masked_errors(gt, pred_unit, eval_mask);
    write_report(report, std::cout);
    save_rgb_png(error_colormap(report), (out_dir / "error_map.png").string());
}

int cmd_complete(const std::string& in_pair, const std::string& ckpt, const std::string& out_dir,
                 bool pointcloud, const std::string& gt_path, const std::string& intrinsics_path,
                 const CommonOpts& opts) {
    auto [rgb_path, depth_path] = split_pair_arg(in_pair);
    RgbdImage raw = load_rgbd(rgb_path, depth_path);
    if (!intrinsics_path.empty()) raw.intrinsics = load_intrinsics(intrinsics_path);
    CompletionNet<float> net = load_completion_net(ckpt);

    auto [depth, norm] = normalize_depth<float>(raw);
    FilterMap map = filter_map_from_depth(raw);
    const auto t0 = std::chrono::steady_clock::now();
    auto [completed, out_map] = net.forward(depth, map, NormMode::infer, nullptr, opts.context());
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("completion: %.2f ms\n", ms);

    RgbdImage out = raw;
    out.depth = denormalize_depth(completed, norm);
    write_depth_outputs(out, out_dir, "depth_completed", pointcloud);
    if (!gt_path.empty()) {
        // evaluate on the pixels that were known in the input
        report_against_gt(gt_path, completed, norm, map, out_dir);
    }
    return 0;
}

int cmd_refine(const std::string& in_pair, const std::string& out_dir, const CommonOpts& opts) {
    auto [rgb_path, depth_path] = split_pair_arg(in_pair);
    RgbdImage raw = load_rgbd(rgb_path, depth_path);
    auto [depth, norm] = normalize_depth<float>(raw);
    Tensor<float> rgb = rgb_to_tensor<float>(raw);
    const auto t0 = std::chrono::steady_clock::now();
    Tensor<float> refined = refine(depth, rgb, {}, opts.context());
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("refine: %.2f ms\n", ms);
    RgbdImage out = raw;
    out.depth = denormalize_depth(refined, norm);
    write_depth_outputs(out, out_dir, "depth_refined", false);
    return 0;
}

int cmd_superres(const std::string& in_pair, const std::string& ckpt, index_t r,
                 const std::string& out_dir, const std::string& orientation, bool pointcloud,
                 const CommonOpts& opts) {
    auto [rgb_path, depth_path] = split_pair_arg(in_pair);
    RgbdImage raw = load_rgbd(rgb_path, depth_path);
    SrNet<float> net = load_sr_net(ckpt, r, parse_orientation(orientation));
    auto [depth, norm] = normalize_depth<float>(raw);
    const auto t0 = std::chrono::steady_clock::now();
    Tensor<float> high = net.forward(depth, nullptr, opts.context());
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("super-resolution: %.2f ms\n", ms);

    RgbdImage out;
    out.width = raw.width * net.ratio();
    out.height = raw.height * net.ratio();
    out.depth = denormalize_depth(high, norm);
    out.rgb = bicubic_upscale_rgb(raw.rgb, raw.width, raw.height, net.ratio());
    out.intrinsics = raw.intrinsics;
    write_depth_outputs(out, out_dir, "depth_hr", pointcloud);
    save_rgb_png(RgbImage{out.width, out.height, out.rgb}, (fs::path(out_dir) / "rgb_hr.png").string());
    return 0;
}

int cmd_pipeline(const std::string& in_pair, const std::string& ckpt_completion,
                 const std::string& ckpt_sr, index_t r, const std::string& out_dir,
                 const std::string& orientation, bool pointcloud,
                 const std::string& intrinsics_path, const CommonOpts& opts) {
    auto [rgb_path, depth_path] = split_pair_arg(in_pair);
    RgbdImage raw = load_rgbd(rgb_path, depth_path);
    if (!intrinsics_path.empty()) raw.intrinsics = load_intrinsics(intrinsics_path);
    CompletionNet<float> completion = load_completion_net(ckpt_completion);
    SrNet<float> sr = load_sr_net(ckpt_sr, r, parse_orientation(orientation));

    PipelineTiming timing;
    RgbdImage out = run_pipeline(raw, completion, sr, {}, &timing, opts.context());
    std::printf("completion: %.2f ms\n", timing.completion_ms);
    std::printf("refine: %.2f ms\n", timing.refine_ms);
    std::printf("super-resolution: %.2f ms\n", timing.super_resolution_ms);
    std::printf("total: %.2f ms\n", timing.total_ms());

    write_depth_outputs(out, out_dir, "depth_hr", pointcloud);
    save_rgb_png(RgbImage{out.width, out.height, out.rgb}, (fs::path(out_dir) / "rgb_hr.png").string());
    return 0;
}

EpochCallback stream_epochs(std::ofstream* log_file) {
    return [log_file](const EpochRecord& r) {
        char line[160];
        std::snprintf(line, sizeof(line), "epoch=%d train=%.6f val=%.6f sec=%.2f", r.epoch,
                      r.train_loss, r.val_loss, r.seconds);
        std::cout << line << std::endl;
        if (log_file && log_file->is_open()) (*log_file) << line << "\n" << std::flush;
    };
}

int cmd_train_completion(const std::string& manifest_path, const std::string& out_ckpt,
                         int epochs, int batch, double lr, const std::string& log_path,
                         const CommonOpts& opts) {
    DatasetManifest manifest = load_manifest(manifest_path);
    auto dataset = load_completion_dataset<float>(manifest);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    cfg.seed = opts.seed;
    cfg.deterministic = opts.deterministic;

    CompletionNet<float> net(cfg.seed);
    std::ofstream log_file;
    if (!log_path.empty()) log_file.open(log_path);
    TrainResult result =
        train_completion(net, dataset, cfg, {}, opts.context(), stream_epochs(&log_file));
    save_checkpoint(out_ckpt, result.best);
    std::printf("best validation loss %.6f (untrained %.6f); checkpoint written to %s\n",
                result.best_val_loss, result.initial_val_loss, out_ckpt.c_str());
    return 0;
}

int cmd_train_sr(const std::string& manifest_path, const std::string& out_ckpt, index_t r,
                 int epochs, int batch, double lr, const std::string& orientation,
                 const std::string& log_path, const CommonOpts& opts) {
    DatasetManifest manifest = load_manifest(manifest_path);
    // high-resolution truth comes from the complete targets; inputs are
    // nearest-neighbor sub-sampled copies
    std::vector<SrSample<float>> dataset;
    for (const auto& e : manifest.entries) {
        auto [raw, dims] = load_depth_png(e.target);
        RgbdImage img;
        img.width = dims.first;
        img.height = dims.second;
        img.depth = std::move(raw);
        img.rgb.assign(static_cast<std::size_t>(img.width * img.height * 3), 0);
        auto [hr, norm] = normalize_depth<float>(img);
        SrSample<float> sample;
        sample.high = std::move(hr);
        sample.low = downsample_nearest(sample.high, r);
        dataset.push_back(std::move(sample));
    }
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    cfg.seed = opts.seed;
    cfg.deterministic = opts.deterministic;

    DepthGateConfig gate;
    gate.orientation = parse_orientation(orientation);
    SrNet<float> net(r, cfg.seed, gate);
    std::ofstream log_file;
    if (!log_path.empty()) log_file.open(log_path);
    TrainResult result = train_sr(net, dataset, cfg, opts.context(), stream_epochs(&log_file));
    save_checkpoint(out_ckpt, result.best);
    std::printf("best validation loss %.6f (untrained %.6f); checkpoint written to %s\n",
                result.best_val_loss, result.initial_val_loss, out_ckpt.c_str());
    return 0;
}

int cmd_synth_data(std::uint64_t seed, int count, index_t size, const std::string& out_dir) {
    DatasetManifest manifest = generate_dataset(out_dir, seed, count, size);
    std::printf("wrote %zu triples and %s\n", manifest.entries.size(),
                (fs::path(out_dir) / "manifest.tsv").string().c_str());
    return 0;
}

int cmd_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& mask_path, const std::string& error_map_path) {
    auto [gt_raw, gdims] = load_depth_png(gt_path);
    auto [pred_raw, pdims] = load_depth_png(pred_path);
    if (gdims != pdims) throw IoError("eval: gt and prediction dimensions differ");
    const auto [w, h] = gdims;

    FilterMap mask(h, w, 1);
    if (!mask_path.empty()) {
        auto [mask_raw, mdims] = load_depth_png(mask_path);
        if (mdims != gdims) throw IoError("eval: mask dimensions differ");
        for (index_t y = 0; y < h; ++y) {
            for (index_t x = 0; x < w; ++x) {
                mask.set(y, x, mask_raw[static_cast<std::size_t>(y * w + x)] != 0 ? 1 : 0);
            }
        }
    }
    // normalize both depths by the ground truth's valid range
    RgbdImage gt_img;
    gt_img.width = w;
    gt_img.height = h;
    gt_img.depth = gt_raw;
    gt_img.rgb.assign(static_cast<std::size_t>(w * h * 3), 0);
    auto [gt, norm] = normalize_depth<float>(gt_img);
    Tensor<float> pred(1, 1, h, w);
    const double inv = 1.0 / norm.span();
    for (index_t y = 0; y < h; ++y) {
        for (index_t x = 0; x < w; ++x) {
            const std::uint16_t d = pred_raw[static_cast<std::size_t>(y * w + x)];
            pred(0, 0, y, x) = static_cast<float>((d - norm.min_mm) * inv);
            if (gt_raw[static_cast<std::size_t>(y * w + x)] == 0) mask.set(y, x, 0);
        }
    }
    ErrorReport report = masked_errors(gt, pred, mask);
    write_report(report, std::cout);
    if (!error_map_path.empty()) save_rgb_png(error_colormap(report), error_map_path);
    return 0;
}

int cmd_gradcheck(const std::string& op, int trials, std::uint64_t seed) {
    std::vector<gradcheck::SuiteEntry> entries;
    if (op == "all") {
        entries = gradcheck::suite();
    } else {
        entries.push_back(gradcheck::find_op(op));
    }
    bool ok = true;
    for (const auto& e : entries) {
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            GradCheckReport report = e.run(seed + static_cast<std::uint64_t>(t) * 7919);
            worst = std::max(worst, report.worst());
        }
        const bool pass = worst <= e.tolerance;
        ok = ok && pass;
        std::printf("%-16s max relative error %.3e over %d trials (tolerance %.0e) %s\n",
                    e.op.c_str(), worst, trials, e.tolerance, pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-convolution RGB-D completion, refinement and super-resolution"};
    app.require_subcommand(1);

    try {
        CommonOpts opts;

        std::string in_pair, ckpt, ckpt_sr, out_dir = "out", gt_path, intrinsics_path;
        std::string orientation = "similarity";
        bool pointcloud = false;
        index_t r = 0;

        CLI::App* complete = app.add_subcommand("complete", "Fill missing depth regions");
        complete->add_option("--in", in_pair, "rgb.png,depth.png")->required();
        complete->add_option("--ckpt", ckpt, "Completion checkpoint")->required();
        complete->add_option("--out", out_dir, "Output directory");
        complete->add_option("--gt", gt_path, "Ground-truth depth for an error report");
        complete->add_option("--intrinsics", intrinsics_path, "Camera intrinsics config");
        complete->add_flag("--pointcloud", pointcloud, "Also export a point cloud");
        opts.attach(complete);

        CLI::App* refine_cmd = app.add_subcommand("refine", "Bilateral boundary sharpening");
        refine_cmd->add_option("--in", in_pair, "rgb.png,depth.png")->required();
        refine_cmd->add_option("--out", out_dir, "Output directory");
        opts.attach(refine_cmd);

        CLI::App* superres = app.add_subcommand("superres", "Guided depth super-resolution");
        superres->add_option("--in", in_pair, "rgb.png,depth.png")->required();
        superres->add_option("--ckpt", ckpt, "Super-resolution checkpoint")->required();
        superres->add_option("--r", r, "Up-sampling ratio (must match the checkpoint)");
        superres->add_option("--out", out_dir, "Output directory");
        superres->add_option("--gate-orientation", orientation, "similarity | literal");
        superres->add_flag("--pointcloud", pointcloud, "Also export a point cloud");
        opts.attach(superres);

        CLI::App* pipeline = app.add_subcommand("pipeline", "Complete, refine and up-sample");
        pipeline->add_option("--in", in_pair, "rgb.png,depth.png")->required();
        pipeline->add_option("--ckpt-completion", ckpt, "Completion checkpoint")->required();
        pipeline->add_option("--ckpt-sr", ckpt_sr, "Super-resolution checkpoint")->required();
        pipeline->add_option("--r", r, "Up-sampling ratio (must match the checkpoint)");
        pipeline->add_option("--out", out_dir, "Output directory");
        pipeline->add_option("--gate-orientation", orientation, "similarity | literal");
        pipeline->add_option("--intrinsics", intrinsics_path, "Camera intrinsics config");
        pipeline->add_flag("--pointcloud", pointcloud, "Also export a point cloud");
        opts.attach(pipeline);

        std::string manifest_path, log_path;
        int epochs = 100, batch = 4;
        double lr = 1e-4;

        CLI::App* train_c = app.add_subcommand("train-completion", "Train the completion network");
        train_c->add_option("--data", manifest_path, "Dataset manifest")->required();
        train_c->add_option("--out", ckpt, "Checkpoint output path")->required();
        train_c->add_option("--epochs", epochs, "Training epochs");
        train_c->add_option("--batch", batch, "Batch size");
        train_c->add_option("--lr", lr, "Learning rate");
        train_c->add_option("--log", log_path, "Write per-epoch records to this file");
        opts.attach(train_c);

        int sr_epochs = 100, sr_batch = 8;
        double sr_lr = 1e-4;
        CLI::App* train_s = app.add_subcommand("train-sr", "Train the super-resolution network");
        train_s->add_option("--data", manifest_path, "Dataset manifest (targets are the truth)")
            ->required();
        train_s->add_option("--out", ckpt, "Checkpoint output path")->required();
        train_s->add_option("--r", r, "Up-sampling ratio (2 or 4)")->required();
        train_s->add_option("--epochs", sr_epochs, "Training epochs");
        train_s->add_option("--batch", sr_batch, "Batch size");
        train_s->add_option("--lr", sr_lr, "Learning rate");
        train_s->add_option("--gate-orientation", orientation, "similarity | literal");
        train_s->add_option("--log", log_path, "Write per-epoch records to this file");
        opts.attach(train_s);

        int count = 200;
        index_t size = 64;
        CLI::App* synth = app.add_subcommand("synth-data", "Generate a synthetic RGB-D dataset");
        synth->add_option("--count", count, "Number of triples");
        synth->add_option("--size", size, "Image side length");
        synth->add_option("--out", out_dir, "Output directory")->required();
        opts.attach(synth);

        std::string pred_path, mask_path, error_map_path;
        CLI::App* eval = app.add_subcommand("eval", "Masked error report for a prediction");
        eval->add_option("--gt", gt_path, "Ground-truth depth PNG")->required();
        eval->add_option("--pred", pred_path, "Predicted depth PNG")->required();
        eval->add_option("--mask", mask_path, "Evaluation mask PNG (nonzero = evaluate)");
        eval->add_option("--error-map", error_map_path, "Write a color-coded error map PNG");

        std::string op = "all";
        int trials = 20;
        CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference diagnostics");
        gradcheck_cmd->add_option("--op", op, "Operation name or 'all'");
        gradcheck_cmd->add_option("--trials", trials, "Random instances per operation");
        opts.attach(gradcheck_cmd);

        CLI11_PARSE(app, argc, argv);

        if (complete->parsed()) {
            return cmd_complete(in_pair, ckpt, out_dir, pointcloud, gt_path, intrinsics_path, opts);
        }
        if (refine_cmd->parsed()) return cmd_refine(in_pair, out_dir, opts);
        if (superres->parsed()) {
            return cmd_superres(in_pair, ckpt, r, out_dir, orientation, pointcloud, opts);
        }
        if (pipeline->parsed()) {
            return cmd_pipeline(in_pair, ckpt, ckpt_sr, r, out_dir, orientation, pointcloud,
                                intrinsics_path, opts);
        }
        if (train_c->parsed()) {
            return cmd_train_completion(manifest_path, ckpt, epochs, batch, lr, log_path, opts);
        }
        if (train_s->parsed()) {
            return cmd_train_sr(manifest_path, ckpt, r, sr_epochs, sr_batch, sr_lr, orientation,
                                log_path, opts);
        }
        if (synth->parsed()) return cmd_synth_data(opts.seed, count, size, out_dir);
        if (eval->parsed()) return cmd_eval(gt_path, pred_path, mask_path, error_map_path);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(op, trials, opts.seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
