#include <doctest.h>

#include <cmath>
#include <numeric>

#include "crackseg/training.hpp"
#include "support.hpp"

using namespace crackseg;
namespace fs = std::filesystem;

namespace {

using Td = nn::Tensor<double>;

/// Scalar re-derivation: sum over outputs of w_o * mean over batch of (BCE + 1 - Dice).
double reference_loss(const std::vector<Td>& outs, const Td& y, const LossConfig& cfg) {
    double total = 0;
    for (std::size_t o = 0; o < outs.size(); ++o) {
        double per_output = 0;
        for (int i = 0; i < y.n; ++i) {
            double bce = 0, inter = 0, sy = 0, sp = 0;
            const std::size_t p = y.plane();
            for (std::size_t j = 0; j < p; ++j) {
                const double t = y.sample(i)[j];
                const double q = outs[o].sample(i)[j];
                const double qc = std::min(std::max(q, cfg.bce_epsilon), 1 - cfg.bce_epsilon);
                bce += -(t * std::log(qc) + (1 - t) * std::log(1 - qc));
                inter += t * q;
                sy += t;
                sp += q;
            }
            if (cfg.bce_reduction == BceReduction::mean) bce /= static_cast<double>(p);
            const double dice = (2 * inter + cfg.dice_smoothing) / (sy + sp + cfg.dice_smoothing);
            per_output += bce + (1 - dice);
        }
        total += cfg.output_weights[o] * per_output / y.n;
    }
    return total;
}

Td random_probs(int n, int h, int w, SeededRng& rng) {
    Td t(n, 1, h, w);
    for (auto& v : t.data) v = rng.uniform(0.01, 0.99);
    return t;
}

Td random_target(int n, int h, int w, SeededRng& rng) {
    Td t(n, 1, h, w);
    for (auto& v : t.data) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    return t;
}

DatasetManifest write_train_set(const testing::TempDir& dir, int count, int size) {
    DatasetManifest m;
    m.name = "toy";
    for (int i = 0; i < count; ++i) {
        auto [img, mask] = testing::synthetic_crack(size, size, 300 + static_cast<std::uint64_t>(i));
        const fs::path ip = dir / ("i" + std::to_string(i) + ".png");
        const fs::path mp = dir / ("m" + std::to_string(i) + ".png");
        write_image_png(ip, img, 16);
        write_mask_png(mp, mask);
        m.entries.push_back({Split::train, ip, mp, std::nullopt});
    }
    return m;
}

TrainConfig toy_train(int epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.patch_size = 32;
    c.batch_size = 8;
    c.run_seed = 5;
    return c;
}

AugmentPolicy toy_policy() {
    AugmentPolicy p;
    p.patch_size = 32;
    p.crop_min = 16;
    return p;
}

}  // namespace

TEST_CASE("loss matches a scalar re-derivation") {
    SeededRng rng(1);
    for (auto reduction : {BceReduction::mean, BceReduction::sum}) {
        LossConfig cfg;
        cfg.bce_reduction = reduction;
        cfg.output_weights = {1.0, 0.5, 0.25, 2.0, 1.0};
        const Td y = random_target(2, 4, 4, rng);
        std::vector<Td> outs;
        for (int o = 0; o < 5; ++o) outs.push_back(random_probs(2, 4, 4, rng));
        const auto l = compute_loss(outs, y, cfg);
        CHECK(std::abs(l.total - reference_loss(outs, y, cfg)) < 1e-10);
        REQUIRE(l.per_output.size() == 5);
        CHECK(std::abs(std::accumulate(l.per_output.begin(), l.per_output.end(), 0.0) - l.total) < 1e-12);
        for (double d : l.dice) CHECK((d >= 0.0 && d < 1.0));
        for (double b : l.bce) CHECK(b >= 0.0);
    }
}

TEST_CASE("perfect prediction has zero Dice loss") {
    SeededRng rng(2);
    const Td y = random_target(1, 4, 4, rng);
    const auto l = compute_loss<double>({y}, y, LossConfig{});
    CHECK(l.dice[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(l.bce[0] < 1e-6);
}

TEST_CASE("empty target and empty prediction give zero loss") {
    const Td zero(1, 1, 4, 4);
    const auto l = compute_loss<double>({zero}, zero, LossConfig{});
    CHECK(l.dice[0] == 0.0);
    CHECK(l.bce[0] < 1e-6);
}

TEST_CASE("loss gradients match central differences") {
    SeededRng rng(3);
    LossConfig cfg;
    cfg.output_weights = {1.0, 0.3, 1.0, 1.0, 1.0};
    const Td y = random_target(2, 4, 4, rng);
    std::vector<Td> outs{random_probs(2, 4, 4, rng), random_probs(2, 4, 4, rng)};
    std::vector<Td> grads;
    compute_loss(outs, y, cfg, &grads);
    const double h = 1e-7;
    for (std::size_t o = 0; o < outs.size(); ++o) {
        for (std::size_t j = 0; j < outs[o].size(); ++j) {
            const double s = outs[o].data[j];
            outs[o].data[j] = s + h;
            const double up = compute_loss(outs, y, cfg).total;
            outs[o].data[j] = s - h;
            const double down = compute_loss(outs, y, cfg).total;
            outs[o].data[j] = s;
            CHECK(grads[o].data[j] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
        }
    }
}

TEST_CASE("loss rejects mismatched shapes and bad configs") {
    CHECK_THROWS_AS(compute_loss<double>({Td(1, 1, 4, 4)}, Td(1, 1, 4, 5), LossConfig{}), ShapeError);
    LossConfig c;
    c.dice_smoothing = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.output_weights = {0, 0, 0, 0, 0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("learning-rate schedule") {
    const LrSchedule s;
    CHECK(lr_at(s, 0) == 0.01);
    CHECK(lr_at(s, 1) == doctest::Approx(0.0096).epsilon(1e-15));
    CHECK(lr_at(s, 10) == doctest::Approx(6.648326359915e-3).epsilon(1e-12));
    CHECK_THROWS_AS(lr_at(s, -1), ConfigError);
    for (int e = 1; e < 120; ++e) CHECK(lr_at(s, e) < lr_at(s, e - 1));
}

TEST_CASE("weight decay applies to convolution kernels only") {
    Model m(testing::toy_config(4, true));
    for (const auto* p : m.params()) {
        const bool kernel = p->name.size() > 7 && p->name.compare(p->name.size() - 7, 7, ".weight") == 0;
        CHECK(p->decay == kernel);
    }
}

TEST_CASE("two images in one epoch with batch 8 take two steps") {
    testing::TempDir dir("steps");
    const auto manifest = write_train_set(dir, 2, 40);
    Model m(testing::toy_config(4, true));
    initialize(m, 1);
    const auto r = train(m, manifest, toy_policy(), toy_train(1));
    CHECK(r.optimizer_steps == 2);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].lr == 0.01);
}

TEST_CASE("loss trace learning rates follow the schedule and runs are bit-identical") {
    testing::TempDir dir("det");
    const auto manifest = write_train_set(dir, 2, 40);
    auto run = [&] {
        Model m(testing::toy_config(4, true));
        initialize(m, 1);
        return train(m, manifest, toy_policy(), toy_train(3)).trace;
    };
    const auto a = run(), b = run();
    REQUIRE(a.size() == 3);
    for (int e = 0; e < 3; ++e) {
        CHECK(a[e].lr == lr_at(LrSchedule{}, e));
        CHECK(a[e].mean_loss == b[e].mean_loss);
    }
    write_loss_trace(dir / "loss.csv", a);
    const std::string csv = testing::read_file(dir / "loss.csv");
    CHECK(csv.rfind("epoch,mean_loss,lr\n0,", 0) == 0);
}

TEST_CASE("training without weight decay equals a plain momentum loop") {
    testing::TempDir dir("wd");
    const auto manifest = write_train_set(dir, 2, 40);
    TrainConfig cfg = toy_train(2);
    cfg.weight_decay = 0;
    cfg.batch_size = 4;

    Model trained(testing::toy_config(4, true));
    initialize(trained, 2);
    const auto result = train(trained, manifest, toy_policy(), cfg);

    // Independent loop: same patches, v = m v - lr g, w += v, nothing else.
    std::vector<TrainingSample> base;
    for (const auto& e : manifest.entries) {
        auto p = load_pair(e, ColorMode::grayscale);
        base.push_back({std::move(p.image), std::move(p.mask)});
    }
    const auto samples = expand_d4(base);
    Model ref(testing::toy_config(4, true));
    initialize(ref, 2);
    auto params = ref.params();
    std::vector<std::vector<float>> vel;
    for (auto* p : params) vel.emplace_back(p->value.size(), 0.0f);
    std::vector<double> losses;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        SeededRng shuffle(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(epoch), ~std::uint64_t{0}));
        shuffle.shuffle(order);
        double sum = 0;
        int batches = 0;
        for (std::size_t first = 0; first < order.size(); first += 4) {
            std::vector<ImageTensor> imgs;
            nn::Tensor<float> y(4, 1, 32, 32);
            for (std::size_t k = 0; k < 4; ++k) {
                const std::size_t idx = order[first + k];
                SeededRng rng(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(epoch), idx));
                auto patch = sample_patch(samples[idx].image, samples[idx].mask, toy_policy(), rng);
                for (std::size_t j = 0; j < patch.mask.data.size(); ++j) {
                    y.sample(static_cast<int>(k))[j] = patch.mask.data[j] ? 1.0f : 0.0f;
                }
                imgs.push_back(std::move(patch.image));
            }
            ref.zero_grad();
            std::vector<nn::Tensor<float>> grads;
            sum += compute_loss(ref.forward(to_tensor(imgs)), y, LossConfig{}, &grads).total;
            ref.backward(grads);
            const auto lr = static_cast<float>(lr_at(cfg.lr, epoch));
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (!params[i]->trainable) continue;
                for (std::size_t j = 0; j < vel[i].size(); ++j) {
                    vel[i][j] = 0.9f * vel[i][j] - lr * params[i]->grad.data[j];
                    params[i]->value.data[j] += vel[i][j];
                }
            }
            ++batches;
        }
        losses.push_back(sum / batches);
    }
    for (int e = 0; e < cfg.epochs; ++e) CHECK(result.trace[e].mean_loss == losses[e]);
    auto pt = trained.params();
    for (std::size_t i = 0; i < pt.size(); ++i) CHECK(pt[i]->value.data == params[i]->value.data);
}

TEST_CASE("empty training set is rejected") {
    Model m(testing::toy_config(4, true));
    DatasetManifest empty;
    CHECK_THROWS_AS(train(m, empty, toy_policy(), toy_train(1)), ConfigError);
    CHECK_THROWS_AS(train(m, std::vector<TrainingSample>{}, toy_policy(), toy_train(1)), ConfigError);
}

TEST_CASE("epoch callback can stop training") {
    testing::TempDir dir("cb");
    const auto manifest = write_train_set(dir, 1, 32);
    Model m(testing::toy_config(4, true));
    initialize(m, 1);
    int calls = 0;
    const auto r = train(m, manifest, toy_policy(), toy_train(5), LossConfig{}, [&](const EpochRecord&, Model&) {
        return ++calls < 2;
    });
    CHECK(r.trace.size() == 2);
}
