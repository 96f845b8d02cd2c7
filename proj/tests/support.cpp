#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <cstdio>

#include <unistd.h>

namespace testing {

namespace fs = std::filesystem;
using namespace crackseg;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("crackseg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

namespace {

void draw_line(ImageTensor& img, BinaryMask& mask, double y0, double x0, double y1, double x1, int thickness,
               float value) {
    const int steps = static_cast<int>(std::ceil(std::hypot(y1 - y0, x1 - x0) * 2)) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int cy = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
        const int cx = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
        for (int dy = 0; dy < thickness; ++dy) {
            for (int dx = 0; dx < thickness; ++dx) {
                const int y = cy + dy, x = cx + dx;
                if (y < 0 || y >= img.height || x < 0 || x >= img.width) continue;
                mask.at(y, x) = 1;
                for (int c = 0; c < img.channels; ++c) img.at(c, y, x) = value;
            }
        }
    }
}

}  // namespace

std::pair<ImageTensor, BinaryMask> synthetic_crack(int height, int width, std::uint64_t seed, int channels) {
    SeededRng rng(seed);
    ImageTensor img(height, width, channels);
    // Smooth texture: coarse random grid, bilinearly upsampled, plus fine noise.
    const int gh = std::max(2, height / 8), gw = std::max(2, width / 8);
    ImageTensor coarse(gh, gw, 1);
    for (auto& v : coarse.data) v = static_cast<float>(rng.uniform(0.45, 0.8));
    const ImageTensor smooth = resize_bilinear(coarse, height, width);
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                img.at(c, y, x) = std::clamp(smooth.at(0, y, x) + static_cast<float>(rng.normal(0.0, 0.03)), 0.0f, 1.0f);
            }
        }
    }
    BinaryMask mask(height, width);
    const int lines = static_cast<int>(rng.uniform_int(1, 3));
    for (int i = 0; i < lines; ++i) {
        const double y0 = rng.uniform(0, height), x0 = rng.uniform(0, width);
        const double y1 = rng.uniform(0, height), x1 = rng.uniform(0, width);
        draw_line(img, mask, y0, x0, y1, x1, static_cast<int>(rng.uniform_int(1, 2)),
                  static_cast<float>(rng.uniform(0.05, 0.2)));
    }
    return {std::move(img), std::move(mask)};
}

ImageTensor random_image(int height, int width, int channels, SeededRng& rng) {
    ImageTensor img(height, width, channels);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

BinaryMask random_mask(int height, int width, double density, SeededRng& rng) {
    BinaryMask m(height, width);
    for (auto& v : m.data) v = rng.bernoulli(density) ? 1 : 0;
    return m;
}

ProbabilityMap random_map(int height, int width, SeededRng& rng) {
    ProbabilityMap m(height, width);
    // Quantised to the grid's resolution and its midpoints so that thresholds hit exact values.
    for (auto& v : m.data) v = static_cast<float>(rng.uniform_int(0, 200) / 200.0);
    return m;
}

ConfusionCounts brute_force_confusion(const BinaryMask& pred, const BinaryMask& truth, int tolerance,
                                      const BinaryMask* region, DistanceMetric metric) {
    std::vector<std::pair<int, int>> p, t;
    for (int y = 0; y < pred.height; ++y) {
        for (int x = 0; x < pred.width; ++x) {
            const bool inside = !region || region->at(y, x);
            if (inside && pred.at(y, x)) p.emplace_back(y, x);
            if (inside && truth.at(y, x)) t.emplace_back(y, x);
        }
    }
    auto close = [&](const std::pair<int, int>& a, const std::pair<int, int>& b) {
        const int dy = std::abs(a.first - b.first), dx = std::abs(a.second - b.second);
        if (metric == DistanceMetric::chebyshev) return std::max(dy, dx) <= tolerance;
        return dy * dy + dx * dx <= tolerance * tolerance;
    };
    ConfusionCounts c;
    c.tolerance = tolerance;
    for (const auto& a : p) {
        bool hit = false;
        for (const auto& b : t) hit = hit || close(a, b);
        (hit ? c.tp : c.fp) += 1;
    }
    for (const auto& b : t) {
        bool hit = false;
        for (const auto& a : p) hit = hit || close(a, b);
        (hit ? c.matched_truth : c.fn) += 1;
    }
    return c;
}

namespace {

void write_pair(const fs::path& image, const fs::path& mask, int h, int w, std::uint64_t seed, int channels) {
    auto [img, m] = synthetic_crack(h, w, seed, channels);
    write_image_png(image, img);
    write_mask_png(mask, m);
}

std::string three_digits(int i) {
    std::string s = std::to_string(i);
    return std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
}

}  // namespace

void write_cfd_tree(const fs::path& root, int height, int width) {
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    for (int i = 1; i <= 118; ++i) {
        // JPEG containers are what CFD ships; the encoder picks format by extension.
        write_pair(root / "images" / (three_digits(i) + ".jpg"), root / "masks" / (three_digits(i) + ".png"), height,
                   width, static_cast<std::uint64_t>(i), 3);
    }
}

void write_deepcrack_tree(const fs::path& root, bool split_file, int n_train, int n_test) {
    auto name = [](int i) { return "dc" + std::to_string(10000 + i); };
    if (!split_file) {
        for (const char* d : {"train_img", "train_lab", "test_img", "test_lab"}) fs::create_directories(root / d);
        for (int i = 0; i < n_train; ++i) {
            write_pair(root / "train_img" / (name(i) + ".jpg"), root / "train_lab" / (name(i) + ".png"), 4, 4,
                       static_cast<std::uint64_t>(i), 3);
        }
        for (int i = 0; i < n_test; ++i) {
            write_pair(root / "test_img" / (name(n_train + i) + ".jpg"),
                       root / "test_lab" / (name(n_train + i) + ".png"), 4, 4, static_cast<std::uint64_t>(i), 3);
        }
        return;
    }
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    std::ofstream split(root / "split.txt");
    for (int i = 0; i < n_train + n_test; ++i) {
        write_pair(root / "images" / (name(i) + ".jpg"), root / "masks" / (name(i) + ".png"), 4, 4,
                   static_cast<std::uint64_t>(i), 3);
        split << name(i) << '\t' << (i < n_train ? "train" : "test") << '\n';
    }
}

ModelConfig toy_config(int width, bool deep_supervision, int input_channels) {
    ModelConfig c;
    c.input_channels = input_channels;
    c.encoder.kind = EncoderKind::residual_style;
    c.encoder.level_channels = {width, width, width, width, width, width};
    c.decoder.filters = {width, width, width, width, width};
    c.decoder.deep_supervision = deep_supervision;
    return c;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace testing

namespace testing {

crackseg::Patch golden_patch(std::uint64_t seed) {
    static const auto source = synthetic_crack(320, 352, 2024, 1);
    crackseg::SeededRng rng(seed);
    return crackseg::sample_patch(source.first, source.second, crackseg::AugmentPolicy{}, rng);
}

std::string golden_manifest_line(std::uint64_t seed, const crackseg::Patch& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%llu\t%016llx\t%016llx", static_cast<unsigned long long>(seed),
                  static_cast<unsigned long long>(fnv1a(p.image.data.data(), p.image.data.size() * sizeof(float))),
                  static_cast<unsigned long long>(fnv1a(p.mask.data.data(), p.mask.data.size())));
    return buf;
}

}  // namespace testing
