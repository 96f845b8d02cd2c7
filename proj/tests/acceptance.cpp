// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crackseg/augment.hpp"
#include "crackseg/checkpoint.hpp"
#include "crackseg/dataset.hpp"
#include "crackseg/experiment.hpp"
#include "crackseg/inference.hpp"
#include "crackseg/metrics.hpp"
#include "crackseg/network.hpp"
#include "crackseg/training.hpp"
#include "support.hpp"

#ifndef CRACKSEG_FIXTURE_DIR
#error "CRACKSEG_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace crackseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. Distance-transform confusion == brute force on random 32x32 pairs, tolerance 0 and 2.
Outcome metric_oracle() {
    SeededRng rng(101);
    int pairs = 0, mismatches = 0;
    for (int i = 0; i < 250; ++i) {
        const double dp = rng.uniform(0.0, 0.3), dt = rng.uniform(0.0, 0.3);
        const BinaryMask pred = testing::random_mask(32, 32, dp, rng);
        const BinaryMask truth = testing::random_mask(32, 32, dt, rng);
        for (int tol : {0, 2}) {
            ++pairs;
            if (!(confusion(pred, truth, tol) == testing::brute_force_confusion(pred, truth, tol))) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(pairs) + " (pair, tolerance) cases, " + std::to_string(mismatches) +
                                 " mismatches"};
}

// 2. OIS >= ODS, strictly on a constructed pair and on random sets.
Outcome metric_ordering() {
    const ThresholdGrid grid = ThresholdGrid::standard();
    // Image A peaks early, image B late: each image's best threshold differs.
    const int h = 16, w = 16;
    BinaryMask truth(h, w);
    for (int x = 2; x < 14; ++x) truth.at(8, x) = 1;
    ProbabilityMap a(h, w, 0.0f), b(h, w, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool on = truth.at(y, x);
            // A: cracks at 0.3, background at 0.1; B: cracks at 0.9, background at 0.6.
            a.at(y, x) = on ? 0.3f : 0.1f;
            b.at(y, x) = on ? 0.9f : 0.6f;
        }
    }
    const MetricReport pair = aggregate({f1_curve(a, truth, grid, 0), f1_curve(b, truth, grid, 0)}, grid);
    bool ok = pair.ois > pair.ods;
    std::string detail = "constructed pair OIS " + fmt("%.4f", pair.ois) + " > ODS " + fmt("%.4f", pair.ods);

    SeededRng rng(202);
    int sets = 0, violations = 0;
    for (int s = 0; s < 60; ++s) {
        std::vector<ImageCurve> curves;
        const int n = static_cast<int>(rng.uniform_int(1, 5));
        for (int i = 0; i < n; ++i) {
            const BinaryMask t = testing::random_mask(24, 24, rng.uniform(0.0, 0.2), rng);
            curves.push_back(f1_curve(testing::random_map(24, 24, rng), t, grid, s % 2 ? 2 : 0));
        }
        const MetricReport r = aggregate(curves, grid);
        ++sets;
        if (!(r.ois >= r.ods)) ++violations;
    }
    ok = ok && violations == 0;
    detail += "; " + std::to_string(sets) + " random sets, " + std::to_string(violations) + " violations";
    return {ok, detail};
}

// 3. Analytic vs central-difference gradients of the full loss, 64-bit toy model.
Outcome gradient_check() {
    using M = nn::Model<double>;
    const ModelConfig cfg = testing::toy_config(4, true);
    M model(cfg);
    initialize(model, 5);
    SeededRng rng(303);
    // Six levels need 32 | H and 32 | W. At 32x32 the deepest level is 1x1, where batch norm over a
    // batch of two is nearly constant and its gradients sink below rounding noise, so use 64x64 x 4.
    const int n = 4, side = 64;
    nn::Tensor<double> x(n, 1, side, side), y(n, 1, side, side);
    for (int i = 0; i < n; ++i) {
        auto [img, mask] = testing::synthetic_crack(side, side, 700 + i);
        for (std::size_t j = 0; j < img.data.size(); ++j) {
            x.sample(i)[j] = img.data[j];
            y.sample(i)[j] = mask.data[j];
        }
    }
    const LossConfig lc;
    auto total = [&] { return compute_loss<double>(model.forward(x), y, lc).total; };

    model.zero_grad();
    std::vector<nn::Tensor<double>> grads;
    compute_loss<double>(model.forward(x), y, lc, &grads);
    model.backward(grads);

    auto params = model.params();
    std::vector<nn::Param<double>*> trainable;
    for (auto* p : params) {
        if (p->trainable) trainable.push_back(p);
    }
    // Larger steps straddle ReLU kinks, smaller ones drown tiny gradients in rounding noise:
    // a parameter passes when any step agrees.
    const double steps[] = {1e-5, 3e-6, 1e-6, 3e-7, 1e-7};
    double worst = 0;
    int checked = 0, failed = 0, fallback = 0;
    std::string worst_name;
    for (int k = 0; k < 150; ++k) {
        auto* p = trainable[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(trainable.size()) - 1))];
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p->value.size()) - 1));
        const double analytic = p->grad.data[j];
        const double saved = p->value.data[j];
        double best = std::numeric_limits<double>::infinity();
        int used = 0;
        for (int s = 0; s < 5 && best > 1e-4; ++s) {
            const double h = steps[s];
            p->value.data[j] = saved + h;
            const double up = total();
            p->value.data[j] = saved - h;
            const double down = total();
            p->value.data[j] = saved;
            const double numeric = (up - down) / (2 * h);
            const double scale = std::max(std::abs(analytic), std::abs(numeric));
            // Both below 1e-8: nothing to compare beyond finite-difference noise.
            const double rel = scale < 1e-8 ? 0.0 : std::abs(analytic - numeric) / scale;
            if (rel < best) best = rel;
            used = s;
        }
        if (used > 0) ++fallback;
        if (best > worst) {
            worst = best;
            worst_name = p->name + "[" + std::to_string(j) + "]";
        }
        if (best > 1e-4) ++failed;
        ++checked;
    }
    return {failed == 0, std::to_string(checked) + " parameters on a 4x1x64x64 batch, " + std::to_string(fallback) +
                             " needed a smaller step, max relative error " + fmt("%.2e", worst) +
                             (worst_name.empty() ? "" : " at " + worst_name) +
                             " (inputs below 32x32 violate the divisible-by-32 contract)"};
}

// 4. Output contract over {32, 64, 96, 160}^2 and rejection of non-divisible sizes.
Outcome shape_contract() {
    Model model(testing::toy_config(4, true));
    initialize(model, 9);
    SeededRng rng(404);
    int cases = 0, bad = 0;
    for (int h : {32, 64, 96, 160}) {
        for (int w : {32, 64, 96, 160}) {
            ++cases;
            const NetworkOutputs out = forward(model, testing::random_image(h, w, 1, rng));
            bool ok = out.auxiliary.size() == 4;
            std::vector<const ProbabilityMap*> maps = {&out.final};
            for (const auto& a : out.auxiliary) maps.push_back(&a);
            for (const auto* m : maps) {
                ok = ok && m->height == h && m->width == w;
                for (float v : m->data) ok = ok && v > 0.0f && v < 1.0f;
            }
            if (!ok) ++bad;
        }
    }
    int rejected = 0;
    const std::vector<std::pair<int, int>> illegal = {{100, 100}, {33, 64}, {64, 48}, {16, 16}};
    for (const auto& [h, w] : illegal) {
        try {
            forward(model, ImageTensor(h, w, 1));
        } catch (const ShapeError& e) {
            if (std::string(e.what()).find("divisible by 32") != std::string::npos) ++rejected;
        }
    }
    const bool ok = bad == 0 && rejected == static_cast<int>(illegal.size());
    return {ok, std::to_string(cases - bad) + "/" + std::to_string(cases) + " sizes conform, " +
                    std::to_string(rejected) + "/" + std::to_string(illegal.size()) + " illegal sizes rejected"};
}

double training_ods(const Model& model, const std::vector<TrainingSample>& set) {
    const ThresholdGrid grid = ThresholdGrid::standard();
    std::vector<ImageCurve> curves;
    for (const auto& s : set) curves.push_back(f1_curve(predict(model, s.image), s.mask, grid, 2));
    return aggregate(curves, grid).ods;
}

// 5. Toy encoder + full decoder overfits 8 synthetic crack images.
Outcome overfit() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<TrainingSample> base;
    for (int i = 0; i < 8; ++i) {
        auto [img, mask] = testing::synthetic_crack(32, 32, 500 + i);
        base.push_back({std::move(img), std::move(mask)});
    }
    ModelConfig cfg;
    cfg.encoder.kind = EncoderKind::residual_style;
    cfg.encoder.width_multiplier = 0.125;
    Model model(cfg);
    initialize(model, 1);
    AugmentPolicy policy;
    policy.patch_size = 32;
    policy.crop_min = 16;
    TrainConfig tc;
    tc.epochs = 200;
    tc.patch_size = 32;
    tc.run_seed = 1;
    double ods = 0;
    int reached = -1;
    double first_loss = 0, last_loss = 0;
    train(model, expand_d4(base), policy, tc, {}, [&](const EpochRecord& r, Model& m) {
        if (r.epoch == 0) first_loss = r.mean_loss;
        last_loss = r.mean_loss;
        if ((r.epoch + 1) % 5 != 0) return true;
        ods = training_ods(m, base);
        if (ods >= 0.95) {
            reached = r.epoch + 1;
            return false;
        }
        return true;
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = reached > 0 && reached <= 200 && secs < 600;
    return {ok, "training-set ODS " + fmt("%.4f", ods) + (reached > 0 ? " at epoch " + std::to_string(reached) : " (not reached)") +
                    ", loss " + fmt("%.4f", first_loss) + " -> " + fmt("%.4f", last_loss) + ", " + fmt("%.1f", secs) + " s"};
}

// 6. TTA identity, arithmetic against an explicit mean, and CFD factor resolution.
Outcome tta() {
    Model model(testing::toy_config(4, true));
    initialize(model, 11);
    SeededRng rng(606);
    const ImageTensor img = testing::random_image(64, 96, 1, rng);

    TtaPlan unit;
    unit.factors = {1.0};
    const bool identity = predict_tta(model, img, unit) == predict(model, img);

    TtaPlan three;
    three.factors = {0.5, 1.0, 1.5};
    const ProbabilityMap got = predict_tta(model, img, three);
    std::vector<double> oracle(got.data.size(), 0.0);
    for (const auto& [w, h] : std::vector<std::pair<int, int>>{{64, 32}, {96, 64}, {160, 96}}) {
        const ProbabilityMap scaled = (w == img.width && h == img.height)
                                          ? predict(model, img)
                                          : resize_bilinear(predict(model, resize_bilinear(img, h, w)), img.height, img.width);
        for (std::size_t i = 0; i < oracle.size(); ++i) oracle[i] += scaled.data[i] / 3.0;
    }
    double max_diff = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) max_diff = std::max(max_diff, std::abs(oracle[i] - got.data[i]));

    const auto sizes = resolve_plan(cfd_plan(), 480, 320);
    const std::vector<WorkingSize> expected = {{288, 192}, {384, 256}, {480, 320}, {576, 384}, {672, 448}};
    bool divisible = true;
    for (const auto& s : sizes) divisible = divisible && s.width % 32 == 0 && s.height % 32 == 0;
    const bool ok = identity && max_diff <= 1e-6 && sizes == expected && divisible;
    std::string res;
    for (const auto& s : sizes) res += (res.empty() ? "" : ",") + std::to_string(s.width) + "x" + std::to_string(s.height);
    return {ok, std::string("unit plan ") + (identity ? "bitwise identical" : "DIFFERS") + ", 3-scale max |diff| " +
                    fmt("%.2e", max_diff) + ", CFD 480x320 -> " + res};
}

// 7. lr_at(e) == 0.01 * 0.96^e within 1e-12 for e in [0, 120).
Outcome schedule() {
    double worst = 0;
    double expected = 0.01;
    for (int e = 0; e < 120; ++e) {
        worst = std::max(worst, std::abs(lr_at(LrSchedule{}, e) - 0.01 * std::pow(0.96, e)));
        // independent running product as a second reference
        worst = std::max(worst, std::abs(lr_at(LrSchedule{}, e) - expected));
        expected *= 0.96;
    }
    return {worst <= 1e-12, "max deviation " + fmt("%.2e", worst) + " over 120 epochs"};
}

// 8. Golden patches, output invariants over 10^4 draws, D4 distinctness and closure.
Outcome augmentation() {
    const fs::path dir = fs::path(CRACKSEG_FIXTURE_DIR) / "golden";
    std::ifstream index(dir / "golden.tsv");
    std::set<std::string> lines;
    for (std::string line; std::getline(index, line);) {
        if (!line.empty() && line[0] != '#') lines.insert(line);
    }
    int golden_ok = 0;
    for (const auto seed : testing::kGoldenSeeds) {
        const Patch p = testing::golden_patch(seed);
        bool ok = lines.count(testing::golden_manifest_line(seed, p)) == 1;
        const std::string stem = "patch-" + std::to_string(seed);
        const ImageTensor stored = read_image(dir / (stem + "-image.png"), ColorMode::grayscale);
        const BinaryMask stored_mask = read_mask(dir / (stem + "-mask.png"));
        ok = ok && stored_mask == p.mask && stored.data.size() == p.image.data.size();
        for (std::size_t i = 0; ok && i < stored.data.size(); ++i) {
            ok = std::lround(stored.data[i] * 65535.0) == std::lround(p.image.data[i] * 65535.0);
        }
        golden_ok += ok;
    }

    SeededRng src_rng(808);
    const auto a = testing::synthetic_crack(320, 320, 31);
    const auto b = testing::synthetic_crack(300, 352, 32);
    int draws = 0, bad = 0;
    const AugmentPolicy policy;
    for (int i = 0; i < 10000; ++i) {
        const auto& src = i % 2 ? a : b;
        SeededRng rng(derive_seed(8, 0, static_cast<std::uint64_t>(i)));
        const Patch p = sample_patch(src.first, src.second, policy, rng);
        bool ok = p.image.height == 288 && p.image.width == 288 && p.mask.height == 288 && p.mask.width == 288;
        for (float v : p.image.data) ok = ok && v >= 0.0f && v <= 1.0f;
        for (auto v : p.mask.data) ok = ok && (v == 0 || v == 1);
        ++draws;
        bad += !ok;
    }

    ImageTensor asym(3, 3, 1);
    for (int i = 0; i < 9; ++i) asym.data[i] = static_cast<float>(i) / 8.0f;
    BinaryMask am(3, 3);
    am.at(0, 1) = 1;
    const auto variants = d4_expand(asym, am);
    std::set<std::vector<float>> distinct;
    for (const auto& v : variants) distinct.insert(v.first.data);
    bool closed = true;
    for (const auto& v : variants) {
        std::set<std::vector<float>> again;
        for (const auto& w : d4_expand(v.first, v.second)) again.insert(w.first.data);
        closed = closed && again == distinct;
    }
    const bool ok = golden_ok == static_cast<int>(testing::kGoldenSeeds.size()) && bad == 0 && distinct.size() == 8 && closed;
    return {ok, std::to_string(golden_ok) + "/" + std::to_string(testing::kGoldenSeeds.size()) + " golden patches match, " +
                    std::to_string(draws - bad) + "/" + std::to_string(draws) + " draws valid, " +
                    std::to_string(distinct.size()) + " distinct D4 variants, closure " + (closed ? "holds" : "FAILS")};
}

// 9. Manifest counts on conforming CFD and DeepCrack-DB trees.
Outcome dataset_counts() {
    testing::TempDir tmp("accept-data");
    testing::write_cfd_tree(tmp / "cfd");
    testing::write_deepcrack_tree(tmp / "deepcrack", false);
    testing::write_deepcrack_tree(tmp / "deepcrack-split", true);
    const auto cfd = build_manifest(tmp / "cfd", DatasetKind::cfd);
    const auto dc = build_manifest(tmp / "deepcrack", DatasetKind::deepcrack_db);
    const auto dcs = build_manifest(tmp / "deepcrack-split", DatasetKind::deepcrack_db);
    const bool ok = cfd.count(Split::train) == 71 && cfd.count(Split::test) == 46 && dc.count(Split::train) == 300 &&
                    dc.count(Split::test) == 237 && dcs.count(Split::train) == 300 && dcs.count(Split::test) == 237 &&
                    dc.tolerance == 0 && cfd.tolerance == 2;
    return {ok, "CFD " + std::to_string(cfd.count(Split::train)) + "/" + std::to_string(cfd.count(Split::test)) +
                    ", DeepCrack-DB " + std::to_string(dc.count(Split::train)) + "/" + std::to_string(dc.count(Split::test)) +
                    " (split subdirs) and " + std::to_string(dcs.count(Split::train)) + "/" +
                    std::to_string(dcs.count(Split::test)) + " (split file)"};
}

std::string tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& de : fs::recursive_directory_iterator(root)) {
        if (de.is_regular_file()) files.push_back(fs::relative(de.path(), root));
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
        const std::string name = f.generic_string();
        const std::string body = testing::read_file(root / f);
        h = testing::fnv1a(name.data(), name.size(), h);
        h = testing::fnv1a(body.data(), body.size(), h);
    }
    return std::to_string(files.size()) + " files, digest " + std::to_string(h);
}

// 10. Mean and sample std; constant series; bit-identical end-to-end rerun.
Outcome statistics() {
    const MeanStd s = mean_std({97.0, 97.2, 97.4});
    // 0.2 has no exact binary representation; the computed value is within a few ulps.
    const bool arith = s.mean == 97.2 && std::abs(s.stdev - 0.2) <= 1e-12 && format_mean_std(s, 1.0) == "97.20±0.20";
    const MeanStd c = mean_std({0.9, 0.9, 0.9, 0.9});
    const bool constant = c.stdev == 0.0 && c.mean == 0.9;

    testing::TempDir tmp("accept-exp");
    DatasetManifest train_m, test_m;
    train_m.name = "synthetic-train";
    test_m.name = "synthetic-test";
    fs::create_directories(tmp / "data");
    for (int i = 0; i < 3; ++i) {
        auto [img, mask] = testing::synthetic_crack(32, 32, 900 + i);
        const fs::path ip = tmp / ("data/train" + std::to_string(i) + ".png");
        const fs::path mp = tmp / ("data/train" + std::to_string(i) + "-mask.png");
        write_image_png(ip, img, 16);
        write_mask_png(mp, mask);
        train_m.entries.push_back({Split::train, ip, mp, std::nullopt});
    }
    for (int i = 0; i < 2; ++i) {
        auto [img, mask] = testing::synthetic_crack(48, 64, 950 + i);
        const fs::path ip = tmp / ("data/test" + std::to_string(i) + ".png");
        const fs::path mp = tmp / ("data/test" + std::to_string(i) + "-mask.png");
        write_image_png(ip, img, 16);
        write_mask_png(mp, mask);
        test_m.entries.push_back({Split::test, ip, mp, std::nullopt});
    }
    train_m.save(tmp / "train.tsv");
    test_m.save(tmp / "test.tsv");

    ExperimentConfig cfg;
    cfg.train_manifest = tmp / "train.tsv";
    cfg.test_manifests = {tmp / "test.tsv"};
    cfg.runs = 2;
    cfg.model = testing::toy_config(4, true);
    cfg.augment.patch_size = 32;
    cfg.augment.crop_min = 16;
    cfg.training.patch_size = 32;
    cfg.training.epochs = 2;
    cfg.training.batch_size = 4;
    cfg.tta = TtaChoice::fixed;
    cfg.tta_plan.factors = {0.75, 1.0};

    const RunSummary first = run_experiment(cfg, tmp / "out-a");
    const RunSummary second = run_experiment(cfg, tmp / "out-b");
    const std::string da = tree_digest(tmp / "out-a"), db = tree_digest(tmp / "out-b");
    const std::string ja = report(first, ReportFormat::json), jb = report(second, ReportFormat::json);
    const std::string disk = report(load_summary(tmp / "out-a" / cfg.hash()), ReportFormat::json);
    const bool rerun = da == db && ja == jb && disk == ja;
    const bool ok = arith && constant && rerun;
    return {ok, "mean " + fmt("%.17g", s.mean) + ", std " + fmt("%.17g", s.stdev) + (arith ? " (ok)" : " (BAD)") +
                    ", constant std " + fmt("%g", c.stdev) + ", rerun " + (rerun ? "bit-identical" : "DIFFERS") + " (" +
                    da + ")"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"metric-oracle equivalence", metric_oracle},
        {"metric ordering OIS >= ODS", metric_ordering},
        {"gradient check", gradient_check},
        {"shape/output contract", shape_contract},
        {"overfit sanity", overfit},
        {"TTA identity and arithmetic", tta},
        {"schedule exactness", schedule},
        {"augmentation determinism and invariants", augmentation},
        {"dataset counts", dataset_counts},
        {"statistics and rerun determinism", statistics},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("%s  [%2zu] %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
