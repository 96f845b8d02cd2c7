#include "crackseg/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "crackseg/checkpoint.hpp"
#include "crackseg/dataset.hpp"
#include "crackseg/experiment.hpp"
#include "crackseg/inference.hpp"
#include "crackseg/metrics.hpp"
#include "crackseg/parallel.hpp"

namespace crackseg {

namespace fs = std::filesystem;

namespace {

void refuse_clobber(const fs::path& p, bool force) {
    if (fs::exists(p) && !force) {
        throw Error(p.string() + " already exists (use --force to overwrite)");
    }
}

std::vector<fs::path> images_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& de : fs::directory_iterator(dir)) {
        if (de.is_regular_file() && has_image_signature(de.path())) out.push_back(de.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct PrepareArgs {
    std::string dataset;
    std::string root;
    std::string out;
};

struct TrainArgs {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    std::string trace;
    int epochs = 0;
};

struct PredictArgs {
    std::string ckpt;
    std::string images;
    std::string tta;
    std::string aggregation = "mean";
    std::string out;
    bool raw = false;
};

struct EvaluateArgs {
    std::string pred;
    std::string manifest;
    int tolerance = -1;
    std::string metric = "euclidean";
    std::string split = "test";
    std::string out;
    std::string curves;
};

struct ExperimentArgs {
    std::string config;
    std::string out;
    std::string format = "markdown-table";
};

struct ReportArgs {
    std::string in;
    std::string format = "markdown-table";
    std::string out;
};

int do_prepare(const PrepareArgs& a, bool force, std::ostream& out) {
    refuse_clobber(a.out, force);
    const DatasetManifest m = build_manifest(a.root, parse_dataset_kind(a.dataset));
    m.save(a.out);
    out << m.name << ": " << m.count(Split::train) << " train, " << m.count(Split::test) << " test -> " << a.out
        << '\n';
    return 0;
}

int do_train(const TrainArgs& a, bool force, std::ostream& out) {
    refuse_clobber(a.out, force);
    const ExperimentConfig cfg = ExperimentConfig::load(a.config);
    const DatasetManifest manifest = DatasetManifest::load(cfg.train_manifest);
    std::optional<WeightArchive> pretrained;
    if (cfg.pretrained) pretrained = WeightArchive::load(*cfg.pretrained);
    Model model(cfg.model);
    initialize(model, a.seed, pretrained ? &*pretrained : nullptr);
    TrainConfig tc = cfg.training;
    tc.run_seed = a.seed;
    if (a.epochs > 0) tc.epochs = a.epochs;
    DatasetManifest loaded = manifest;
    loaded.color = cfg.model.input_channels == 3 ? ColorMode::rgb : ColorMode::grayscale;
    const TrainResult r = train(model, loaded, cfg.augment, tc, cfg.loss, [&](const EpochRecord& e, Model&) {
        out << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.mean_loss << '\n';
        return true;
    });
    save_checkpoint(a.out, model);
    write_loss_trace(a.trace.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.trace), r.trace);
    out << r.optimizer_steps << " optimizer steps; checkpoint " << a.out << '\n';
    return 0;
}

int do_predict(const PredictArgs& a, bool force, std::ostream& out) {
    if (fs::exists(a.out) && !fs::is_empty(a.out) && !force) {
        throw Error(a.out + " is not empty (use --force to overwrite)");
    }
    const Model model = load_checkpoint(a.ckpt);
    const ColorMode color = model.config().input_channels == 3 ? ColorMode::rgb : ColorMode::grayscale;
    std::optional<TtaPlan> plan;
    if (!a.tta.empty()) {
        plan = parse_tta_plan(a.tta);
        plan->aggregation = parse_tta_aggregation(a.aggregation);
    }
    const auto files = images_in(a.images);
    if (files.empty()) throw Error("no images in " + a.images);
    fs::create_directories(a.out);
    std::vector<std::string> lines(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        const ImageTensor img = read_image(files[i], color);
        ProbabilityMap p;
        std::ostringstream line;
        line << files[i].filename().string() << ": " << img.width << 'x' << img.height;
        if (plan) {
            const auto sizes = resolve_plan(*plan, img.width, img.height);
            line << " -> ";
            for (std::size_t k = 0; k < sizes.size(); ++k) {
                line << (k ? ", " : "") << sizes[k].width << 'x' << sizes[k].height;
            }
            p = predict_tta(model, img, *plan);
        } else {
            p = predict_padded(model, img);
        }
        const fs::path stem = fs::path(a.out) / files[i].stem();
        write_probability_png(stem.string() + ".png", p);
        if (a.raw) write_probability_raw(stem.string() + ".f32", p);
        lines[i] = line.str();
    });
    for (const auto& l : lines) out << l << '\n';
    return 0;
}

fs::path find_prediction(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".f32", ".png", ".tif", ".tiff", ".bmp", ".jpg"}) {
        const fs::path p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    throw Error("no prediction for '" + stem + "' in " + dir.string());
}

int do_evaluate(const EvaluateArgs& a, bool force, std::ostream& out) {
    refuse_clobber(a.out, force);
    if (!a.curves.empty()) refuse_clobber(a.curves, force);
    const DatasetManifest m = DatasetManifest::load(a.manifest);
    if (a.split != "train" && a.split != "test") throw ConfigError("--split must be train or test");
    const auto entries = m.entries_for(a.split == "train" ? Split::train : Split::test);
    if (entries.empty()) throw Error("manifest has no " + a.split + " entries");
    const int tolerance = a.tolerance >= 0 ? a.tolerance : m.tolerance;
    const DistanceMetric metric = parse_distance_metric(a.metric);
    const ThresholdGrid grid = ThresholdGrid::standard();
    std::vector<ImageCurve> curves(entries.size());
    parallel_for(entries.size(), [&](std::size_t i) {
        const auto& e = entries[i];
        const std::string stem = e.image.stem().string();
        const ProbabilityMap pred = read_probability(find_prediction(a.pred, stem));
        const BinaryMask truth = read_mask(e.mask);
        std::optional<BinaryMask> region;
        if (e.region) region = read_mask(*e.region);
        curves[i] = f1_curve(pred, truth, grid, tolerance, region ? &*region : nullptr, metric);
        curves[i].image = stem;
    });
    MetricReport r = aggregate(curves, grid);
    r.tolerance = tolerance;
    save_report(a.out, r);
    if (!a.curves.empty()) write_curves_csv(a.curves, curves, grid);
    auto fmt = [](double v) { return format_mean_std({v, std::nan(""), 1}, 1.0); };
    out << "OIS=" << fmt(r.ois) << " ODS=" << fmt(r.ods) << " cODS=" << fmt(r.cods) << " (" << r.n_images
        << " images, tolerance " << tolerance << ")\n";
    return 0;
}

fs::path results_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("CRACKSEG_RESULTS_ROOT"); env && *env) return env;
    return "results";
}

int do_experiment(const ExperimentArgs& a, bool force, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = ExperimentConfig::load(a.config);
    const ReportFormat format = parse_report_format(a.format);
    const fs::path root = results_root(a.out);
    const fs::path exp_dir = root / cfg.hash();
    if (force && fs::exists(exp_dir)) fs::remove_all(exp_dir);
    ExperimentOptions opts;
    opts.log = [&](const std::string& line) { err << line << '\n'; };
    const RunSummary s = run_experiment(cfg, root, opts);
    out << "results: " << exp_dir.string() << '\n' << report(s, format);
    return 0;
}

int do_report(const ReportArgs& a, bool force, std::ostream& out) {
    const ReportFormat format = parse_report_format(a.format);
    const RunSummary s = load_summary(results_root(a.in));
    const std::string text = report(s, format);
    if (a.out.empty()) {
        out << text;
    } else {
        refuse_clobber(a.out, force);
        std::ofstream os(a.out);
        if (!os) throw Error("cannot write " + a.out);
        os << text;
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Crack segmentation: dataset preparation, training, prediction, evaluation and experiments",
                 "crackseg"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 1;
    bool force = false;
    app.add_option("--threads", threads, "Worker threads for per-image work (0 = all cores)")->capture_default_str();
    app.add_flag("--force", force, "Overwrite existing outputs");

    PrepareArgs prep;
    auto* prepare = app.add_subcommand("prepare", "Scan a dataset directory and write its manifest");
    prepare->add_option("--dataset", prep.dataset, "CFD | CT260 | CRKWH100 | Stone331 | DeepCrack-DB")->required();
    prepare->add_option("--root", prep.root, "Dataset root directory")->required();
    prepare->add_option("--out", prep.out, "Manifest file to write")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on the config's train manifest");
    train_cmd->add_option("--config", tr.config, "Experiment config (JSON)")->required();
    train_cmd->add_option("--seed", tr.seed, "Run seed for initialisation and augmentation")->capture_default_str();
    train_cmd->add_option("--out", tr.out, "Checkpoint file to write")->required();
    train_cmd->add_option("--trace", tr.trace, "Loss trace CSV (default <out>.loss.csv)");
    train_cmd->add_option("--epochs", tr.epochs, "Override the configured epoch count");

    PredictArgs pr;
    auto* predict_cmd = app.add_subcommand("predict", "Predict crack probability maps for a directory of images");
    predict_cmd->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
    predict_cmd->add_option("--images", pr.images, "Directory of input images")->required();
    predict_cmd->add_option("--tta", pr.tta,
                            "Test-time scales: factors \"0.6,0.8,1.0,1.2,1.4\" or sizes \"288x192,416x288\"");
    predict_cmd->add_option("--aggregation", pr.aggregation, "mean | max")->capture_default_str();
    predict_cmd->add_option("--out", pr.out, "Output directory (16-bit PNG per image)")->required();
    predict_cmd->add_flag("--raw", pr.raw, "Also write float32 .f32 sidecars");

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute OIS / ODS / cODS of predictions");
    evaluate_cmd->add_option("--pred", ev.pred, "Directory of predictions named by image stem")->required();
    evaluate_cmd->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
    evaluate_cmd->add_option("--tolerance", ev.tolerance, "Distance tolerance in pixels (default: manifest's)")
        ->check(CLI::IsMember({0, 2}));
    evaluate_cmd->add_option("--metric", ev.metric, "euclidean | chebyshev")->capture_default_str();
    evaluate_cmd->add_option("--split", ev.split, "train | test")->capture_default_str();
    evaluate_cmd->add_option("--out", ev.out, "Report JSON to write")->required();
    evaluate_cmd->add_option("--curves", ev.curves, "Per-image threshold curves CSV");

    ExperimentArgs ex;
    auto* experiment_cmd = app.add_subcommand("experiment", "Run seeded train/predict/evaluate runs and summarise");
    experiment_cmd->add_option("--config", ex.config, "Experiment config (JSON)")->required();
    experiment_cmd->add_option("--out", ex.out, "Results root (default $CRACKSEG_RESULTS_ROOT or ./results)");
    experiment_cmd->add_option("--format", ex.format, "markdown-table | csv | json")->capture_default_str();

    ReportArgs rp;
    auto* report_cmd = app.add_subcommand("report", "Summarise completed runs from a results directory");
    report_cmd->add_option("--in", rp.in, "Experiment directory or results root")->required();
    report_cmd->add_option("--format", rp.format, "markdown-table | csv | json")->capture_default_str();
    report_cmd->add_option("--out", rp.out, "File to write instead of stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        set_thread_count(threads);
        if (prepare->parsed()) return do_prepare(prep, force, out);
        if (train_cmd->parsed()) return do_train(tr, force, out);
        if (predict_cmd->parsed()) return do_predict(pr, force, out);
        if (evaluate_cmd->parsed()) return do_evaluate(ev, force, out);
        if (experiment_cmd->parsed()) return do_experiment(ex, force, out, err);
        if (report_cmd->parsed()) return do_report(rp, force, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace crackseg
