#include <doctest.h>

#include "crackseg/inference.hpp"
#include "support.hpp"

using namespace crackseg;

namespace {

Model toy_model(std::uint64_t seed) {
    Model m(testing::toy_config(4, true));
    initialize(m, seed);
    return m;
}

Model constant_model(float bias) {
    Model m(testing::toy_config(4, true));
    for (auto* p : m.params()) {
        if (p->trainable) p->value.zero();
        if (p->name == "decoder.head.bias") p->value.data[0] = bias;
    }
    return m;
}

}  // namespace

TEST_CASE("predict returns the input size in [0,1]") {
    const Model m = toy_model(1);
    SeededRng rng(1);
    const auto map = predict(m, testing::random_image(64, 96, 1, rng));
    CHECK(map.height == 64);
    CHECK(map.width == 96);
    for (float v : map.data) CHECK((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("padded prediction crops back to the input size") {
    const Model m = toy_model(2);
    SeededRng rng(2);
    const auto img = testing::random_image(50, 70, 1, rng);
    CHECK_THROWS_AS(predict(m, img), ShapeError);
    const auto map = predict_padded(m, img);
    CHECK(map.height == 50);
    CHECK(map.width == 70);
    const auto aligned = testing::random_image(64, 64, 1, rng);
    CHECK(predict_padded(m, aligned) == predict(m, aligned));
}

TEST_CASE("constant model gives a constant map at every scale") {
    const Model m = constant_model(-0.4f);
    SeededRng rng(3);
    const auto img = testing::random_image(64, 64, 1, rng);
    const auto map = predict(m, img);
    const float c = map.data[0];
    for (float v : map.data) CHECK(v == c);
    const auto tta = predict_tta(m, img, cfd_plan());
    for (float v : tta.data) CHECK(v == doctest::Approx(c).epsilon(1e-6));
}

TEST_CASE("plan resolution") {
    CHECK(resolve_plan(cfd_plan(), 480, 320) ==
          std::vector<WorkingSize>{{288, 192}, {384, 256}, {480, 320}, {576, 384}, {672, 448}});
    CHECK(resolve_plan(deepcrack_plan(), 544, 384) ==
          std::vector<WorkingSize>{{288, 192}, {416, 288}, {544, 384}, {672, 480}, {832, 576}});
    TtaPlan unit;
    CHECK(resolve_plan(unit, 480, 320) == std::vector<WorkingSize>{{480, 320}});
    TtaPlan dup;
    dup.factors = {1.0, 1.01, 0.5};
    CHECK(resolve_plan(dup, 64, 64) == std::vector<WorkingSize>{{64, 64}, {32, 32}});
    TtaPlan tiny;
    tiny.factors = {0.1};
    CHECK_THROWS_AS(resolve_plan(tiny, 64, 64), ShapeError);
    for (const auto& s : resolve_plan(wide_plan(), 500, 333)) {
        CHECK(s.width % 32 == 0);
        CHECK(s.height % 32 == 0);
    }
}

TEST_CASE("plan parsing and formatting") {
    const auto f = parse_tta_plan("0.6,0.8,1.0,1.2,1.4");
    CHECK(f.mode == TtaMode::relative_factors);
    CHECK(f.factors == std::vector<double>{0.6, 0.8, 1.0, 1.2, 1.4});
    const auto s = parse_tta_plan("288x192,416x288");
    CHECK(s.mode == TtaMode::fixed_sizes);
    CHECK(s.sizes == std::vector<WorkingSize>{{288, 192}, {416, 288}});
    CHECK(parse_tta_plan(format_tta_plan(s)).sizes == s.sizes);
    CHECK(parse_tta_plan(format_tta_plan(f)).factors == f.factors);
    CHECK_THROWS_AS(parse_tta_plan(""), ConfigError);
    CHECK_THROWS_AS(parse_tta_plan("0.5,abc"), ConfigError);
    CHECK_THROWS_AS(parse_tta_plan("-1"), ConfigError);
    CHECK(parse_tta_aggregation("max") == TtaAggregation::max);
}

TEST_CASE("unit plan reproduces plain prediction bitwise") {
    const Model m = toy_model(4);
    SeededRng rng(4);
    const auto img = testing::random_image(32, 64, 1, rng);
    CHECK(predict_tta(m, img, TtaPlan{}) == predict(m, img));
}

TEST_CASE("mean and max aggregation against explicit oracles") {
    const Model m = toy_model(5);
    SeededRng rng(5);
    const auto img = testing::random_image(64, 64, 1, rng);
    TtaPlan plan;
    plan.factors = {0.5, 1.0, 1.5};
    std::vector<ProbabilityMap> maps;
    for (const auto& s : resolve_plan(plan, 64, 64)) {
        maps.push_back(s.width == 64 ? predict(m, img)
                                     : resize_bilinear(predict(m, resize_bilinear(img, s.height, s.width)), 64, 64));
    }
    const auto mean = predict_tta(m, img, plan);
    plan.aggregation = TtaAggregation::max;
    const auto mx = predict_tta(m, img, plan);
    for (std::size_t i = 0; i < mean.data.size(); ++i) {
        double sum = 0;
        float hi = 0;
        for (const auto& p : maps) {
            sum += p.data[i];
            hi = std::max(hi, p.data[i]);
        }
        CHECK(std::abs(mean.data[i] - sum / 3) <= 1e-6);
        CHECK(mx.data[i] == hi);
        CHECK((mean.data[i] >= 0.0f && mean.data[i] <= 1.0f));
    }
}

TEST_CASE("prediction files round-trip") {
    testing::TempDir dir("pred");
    SeededRng rng(6);
    const auto map = testing::random_map(8, 12, rng);
    write_probability_raw(dir / "p.f32", map);
    CHECK(read_probability(dir / "p.f32") == map);
    write_probability_png(dir / "p.png", map);
    const auto back = read_probability(dir / "p.png");
    for (std::size_t i = 0; i < map.data.size(); ++i) CHECK(std::abs(back.data[i] - map.data[i]) <= 0.5f / 65535);
}
