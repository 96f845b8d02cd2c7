#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crackseg/image.hpp"
#include "crackseg/metrics.hpp"
#include "crackseg/network.hpp"
#include "crackseg/rng.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Textured noise background with 1-3 dark line segments; the mask marks line pixels.
std::pair<crackseg::ImageTensor, crackseg::BinaryMask> synthetic_crack(int height, int width, std::uint64_t seed,
                                                                       int channels = 1);

crackseg::ImageTensor random_image(int height, int width, int channels, crackseg::SeededRng& rng);
crackseg::BinaryMask random_mask(int height, int width, double density, crackseg::SeededRng& rng);
crackseg::ProbabilityMap random_map(int height, int width, crackseg::SeededRng& rng);

/// Direct O(|pred| * |truth|) pairwise-distance counting.
crackseg::ConfusionCounts brute_force_confusion(const crackseg::BinaryMask& pred, const crackseg::BinaryMask& truth,
                                                int tolerance, const crackseg::BinaryMask* region = nullptr,
                                                crackseg::DistanceMetric metric = crackseg::DistanceMetric::euclidean);

/// CFD-style tree with images/001.jpg..118.jpg (042 included) and masks/*.png.
void write_cfd_tree(const std::filesystem::path& root, int height = 8, int width = 8);
/// DeepCrack-DB tree: either train_img/train_lab/test_img/test_lab, or images/masks + split.txt.
void write_deepcrack_tree(const std::filesystem::path& root, bool split_file, int n_train = 300, int n_test = 237);

/// Residual-style encoder with every level `width` channels and decoder filters all `width`.
crackseg::ModelConfig toy_config(int width = 4, bool deep_supervision = true, int input_channels = 1);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string read_file(const std::filesystem::path& p);

}  // namespace testing

#include "crackseg/augment.hpp"

namespace testing {

inline const std::vector<std::uint64_t> kGoldenSeeds = {42, 43, 44, 45, 46, 47, 48, 49};

/// Patch drawn with the default policy from a fixed synthetic 320x352 source image.
crackseg::Patch golden_patch(std::uint64_t seed);

/// One line per seed: seed, image hash, mask hash (FNV-1a over raw float / byte data).
std::string golden_manifest_line(std::uint64_t seed, const crackseg::Patch& p);

}  // namespace testing
