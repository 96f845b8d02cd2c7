#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crackseg/image.hpp"

namespace crackseg {

enum class DistanceMetric { euclidean, chebyshev };

std::string to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(const std::string& s);

/// Binarisation thresholds; a pixel is predicted positive when p >= t.
struct ThresholdGrid {
    std::vector<double> values;

    /// {0.01, 0.02, ..., 0.99}, each value k / 100.
    static ThresholdGrid standard();
    std::size_t size() const { return values.size(); }
};

/// Coverage-based counts under a distance tolerance.
///   tp:            predicted pixels within tolerance of some truth pixel
///   fp:            predicted pixels farther than tolerance from every truth pixel
///   fn:            truth pixels farther than tolerance from every predicted pixel
///   matched_truth: truth pixels within tolerance of some predicted pixel
/// At tolerance 0, tp == matched_truth.
struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t matched_truth = 0;
    int tolerance = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

struct ScoreTriple {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// precision = tp / (tp + fp), recall = matched_truth / (matched_truth + fn).
/// Nothing predicted and nothing to find gives 1 for all three; predictions on an empty
/// truth give f1 = 0.
ScoreTriple scores(const ConfusionCounts& c);

/// Pixels within `tolerance` of a set pixel of `mask` (Euclidean uses an exact distance
/// transform; Chebyshev a square dilation).
BinaryMask within_tolerance(const BinaryMask& mask, int tolerance, DistanceMetric metric);

/// Exact squared Euclidean distance to the nearest set pixel, or a value larger than
/// (height^2 + width^2) when the mask is empty.
std::vector<std::int64_t> squared_distance_transform(const BinaryMask& mask);

/// Pixels outside `region` (when given) are removed from both masks before counting.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth, int tolerance,
                          const BinaryMask* region = nullptr,
                          DistanceMetric metric = DistanceMetric::euclidean);

struct ImageCurve {
    std::string image;
    std::vector<ConfusionCounts> counts;  // one per grid threshold
    std::vector<ScoreTriple> scores;
};

/// Counts and scores at every grid threshold.
ImageCurve f1_curve(const ProbabilityMap& pred, const BinaryMask& truth, const ThresholdGrid& grid,
                    int tolerance, const BinaryMask* region = nullptr,
                    DistanceMetric metric = DistanceMetric::euclidean);

BinaryMask binarize(const ProbabilityMap& pred, double threshold);

struct ImageBest {
    std::string image;
    double f1 = 0;
    double threshold = 0;
};

struct MetricReport {
    double ois = 0;
    double ods = 0;
    double cods = 0;
    double ods_threshold = 0;
    double cods_threshold = 0;
    std::vector<ImageBest> per_image_best;
    std::size_t n_images = 0;
    int tolerance = 0;
    std::vector<double> thresholds;
    std::vector<double> mean_f1;        // mean over images, per threshold
    std::vector<double> cumulative_f1;  // from summed counts, per threshold
};

/// OIS = mean of per-image best F1; ODS = best per-threshold mean F1; cODS = best F1 of the
/// dataset-summed counts. Ties go to the smallest threshold. Throws on empty input.
MetricReport aggregate(const std::vector<ImageCurve>& curves, const ThresholdGrid& grid);

/// Columns: image,t,tp,fp,fn,pr,re,f1.
void write_curves_csv(const std::filesystem::path& path, const std::vector<ImageCurve>& curves,
                      const ThresholdGrid& grid);

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
void save_report(const std::filesystem::path& path, const MetricReport& report);
MetricReport load_report(const std::filesystem::path& path);

}  // namespace crackseg
