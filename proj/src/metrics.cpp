#include "crackseg/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace crackseg {

std::string to_string(DistanceMetric m) { return m == DistanceMetric::euclidean ? "euclidean" : "chebyshev"; }

DistanceMetric parse_distance_metric(const std::string& s) {
    if (s == "euclidean") return DistanceMetric::euclidean;
    if (s == "chebyshev") return DistanceMetric::chebyshev;
    throw ConfigError("unknown distance metric '" + s + "' (euclidean | chebyshev)");
}

ThresholdGrid ThresholdGrid::standard() {
    ThresholdGrid g;
    for (int k = 1; k <= 99; ++k) g.values.push_back(k / 100.0);
    return g;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    matched_truth += o.matched_truth;
    return *this;
}

ScoreTriple scores(const ConfusionCounts& c) {
    const std::int64_t truth = c.matched_truth + c.fn;
    const std::int64_t predicted = c.tp + c.fp;
    if (truth == 0 && predicted == 0) return {1.0, 1.0, 1.0};
    if (truth == 0) return {0.0, 1.0, 0.0};
    ScoreTriple s;
    s.precision = predicted > 0 ? static_cast<double>(c.tp) / static_cast<double>(predicted) : 0.0;
    s.recall = static_cast<double>(c.matched_truth) / static_cast<double>(truth);
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

namespace {

/// Lower envelope of parabolas over the finite sites of f (Felzenszwalb & Huttenlocher).
void distance_1d(const std::int64_t* f, std::size_t stride, int n, std::int64_t inf, std::int64_t* out,
                 std::vector<int>& v, std::vector<double>& z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        const std::int64_t fq = f[q * stride];
        if (fq >= inf) continue;
        const double fqq = static_cast<double>(fq) + static_cast<double>(q) * q;
        double s = -std::numeric_limits<double>::infinity();
        while (k >= 0) {
            const int p = v[k];
            s = (fqq - (static_cast<double>(f[p * stride]) + static_cast<double>(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        if (k < 0) s = -std::numeric_limits<double>::infinity();
        ++k;
        v[k] = q;
        z[k] = s;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) out[q * stride] = inf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (j < k && z[j + 1] <= q) ++j;
        const std::int64_t d = q - v[j];
        out[q * stride] = d * d + f[v[j] * stride];
    }
}

std::vector<std::pair<int, int>> neighbourhood(int tolerance, DistanceMetric metric) {
    std::vector<std::pair<int, int>> out;
    for (int dy = -tolerance; dy <= tolerance; ++dy) {
        for (int dx = -tolerance; dx <= tolerance; ++dx) {
            if (metric == DistanceMetric::chebyshev || dx * dx + dy * dy <= tolerance * tolerance) {
                out.emplace_back(dy, dx);
            }
        }
    }
    return out;
}

void check_tolerance(int tolerance) {
    if (tolerance < 0) throw ConfigError("tolerance must be nonnegative");
}

void check_same(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError(std::string(what) + ": " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                         " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
}

BinaryMask restrict_to(const BinaryMask& m, const BinaryMask* region) {
    if (!region) return m;
    check_same(m, *region, "region mask");
    BinaryMask out = m;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = out.data[i] && region->data[i];
    return out;
}

}  // namespace

std::vector<std::int64_t> squared_distance_transform(const BinaryMask& mask) {
    const int h = mask.height, w = mask.width;
    const std::int64_t inf = static_cast<std::int64_t>(h) * h + static_cast<std::int64_t>(w) * w + 1;
    std::vector<std::int64_t> f(mask.data.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = mask.data[i] ? 0 : inf;
    std::vector<std::int64_t> cols(f.size());
    std::vector<int> v(static_cast<std::size_t>(std::max(h, w)) + 1);
    std::vector<double> z(v.size() + 1);
    for (int x = 0; x < w; ++x) distance_1d(f.data() + x, w, h, inf, cols.data() + x, v, z);
    std::vector<std::int64_t> out(f.size());
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        distance_1d(cols.data() + row, 1, w, inf, out.data() + row, v, z);
    }
    return out;
}

BinaryMask within_tolerance(const BinaryMask& mask, int tolerance, DistanceMetric metric) {
    check_tolerance(tolerance);
    BinaryMask out(mask.height, mask.width);
    if (metric == DistanceMetric::euclidean) {
        const auto d2 = squared_distance_transform(mask);
        const std::int64_t limit = static_cast<std::int64_t>(tolerance) * tolerance;
        for (std::size_t i = 0; i < d2.size(); ++i) out.data[i] = d2[i] <= limit;
        return out;
    }
    // Square dilation, separable: rows then columns.
    BinaryMask rows(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            std::uint8_t any = 0;
            for (int dx = std::max(0, x - tolerance); dx <= std::min(mask.width - 1, x + tolerance) && !any; ++dx) {
                any = mask.at(y, dx);
            }
            rows.at(y, x) = any;
        }
    }
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            std::uint8_t any = 0;
            for (int dy = std::max(0, y - tolerance); dy <= std::min(mask.height - 1, y + tolerance) && !any;
                 ++dy) {
                any = rows.at(dy, x);
            }
            out.at(y, x) = any;
        }
    }
    return out;
}

ConfusionCounts confusion(const BinaryMask& pred_in, const BinaryMask& truth_in, int tolerance,
                          const BinaryMask* region, DistanceMetric metric) {
    check_tolerance(tolerance);
    check_same(pred_in, truth_in, "confusion");
    const BinaryMask pred = restrict_to(pred_in, region);
    const BinaryMask truth = restrict_to(truth_in, region);
    const BinaryMask near_truth = within_tolerance(truth, tolerance, metric);
    const BinaryMask near_pred = within_tolerance(pred, tolerance, metric);
    ConfusionCounts c;
    c.tolerance = tolerance;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        if (pred.data[i]) (near_truth.data[i] ? c.tp : c.fp) += 1;
        if (truth.data[i]) (near_pred.data[i] ? c.matched_truth : c.fn) += 1;
    }
    return c;
}

BinaryMask binarize(const ProbabilityMap& pred, double threshold) {
    BinaryMask out(pred.height, pred.width);
    for (std::size_t i = 0; i < pred.data.size(); ++i) out.data[i] = static_cast<double>(pred.data[i]) >= threshold;
    return out;
}

ImageCurve f1_curve(const ProbabilityMap& pred, const BinaryMask& truth_in, const ThresholdGrid& grid,
                    int tolerance, const BinaryMask* region, DistanceMetric metric) {
    check_tolerance(tolerance);
    if (pred.height != truth_in.height || pred.width != truth_in.width) {
        throw ShapeError("f1_curve: prediction " + std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                         " vs truth " + std::to_string(truth_in.width) + "x" + std::to_string(truth_in.height));
    }
    if (grid.values.empty() || !std::is_sorted(grid.values.begin(), grid.values.end())) {
        throw ConfigError("threshold grid must be nonempty and sorted");
    }
    const BinaryMask truth = restrict_to(truth_in, region);
    const int h = pred.height, w = pred.width;
    const std::size_t levels = grid.size();

    // level[i] = number of thresholds at which pixel i is predicted positive.
    std::vector<int> level(pred.data.size(), 0);
    for (std::size_t i = 0; i < level.size(); ++i) {
        if (region && !region->data[i]) continue;
        const double p = pred.data[i];
        level[i] = static_cast<int>(std::upper_bound(grid.values.begin(), grid.values.end(), p) - grid.values.begin());
    }

    const BinaryMask near_truth = within_tolerance(truth, tolerance, metric);
    std::vector<std::int64_t> near_hist(levels + 1, 0), far_hist(levels + 1, 0), miss_hist(levels + 1, 0);
    for (std::size_t i = 0; i < level.size(); ++i) (near_truth.data[i] ? near_hist : far_hist)[level[i]] += 1;

    const auto offsets = neighbourhood(tolerance, metric);
    std::int64_t truth_total = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!truth.at(y, x)) continue;
            ++truth_total;
            int best = 0;
            for (const auto& [dy, dx] : offsets) {
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                best = std::max(best, level[static_cast<std::size_t>(yy) * w + xx]);
            }
            miss_hist[best] += 1;
        }
    }

    ImageCurve curve;
    curve.counts.resize(levels);
    curve.scores.resize(levels);
    // Pixels with level > k are positive at threshold index k; truth pixels whose best
    // neighbour level is <= k are missed.
    std::int64_t tp = 0, fp = 0;
    for (std::size_t c = 1; c <= levels; ++c) {
        tp += near_hist[c];
        fp += far_hist[c];
    }
    std::int64_t fn = 0;
    for (std::size_t k = 0; k < levels; ++k) {
        fn += miss_hist[k];
        ConfusionCounts& cc = curve.counts[k];
        cc.tolerance = tolerance;
        cc.tp = tp;
        cc.fp = fp;
        cc.fn = fn;
        cc.matched_truth = truth_total - fn;
        curve.scores[k] = scores(cc);
        tp -= near_hist[k + 1];
        fp -= far_hist[k + 1];
    }
    return curve;
}

MetricReport aggregate(const std::vector<ImageCurve>& curves, const ThresholdGrid& grid) {
    if (curves.empty()) throw ConfigError("aggregate: no images");
    const std::size_t levels = grid.size();
    MetricReport r;
    r.n_images = curves.size();
    r.thresholds = grid.values;
    r.tolerance = curves.front().counts.empty() ? 0 : curves.front().counts.front().tolerance;
    r.mean_f1.assign(levels, 0.0);
    std::vector<ConfusionCounts> total(levels);
    double ois_sum = 0;
    for (const auto& c : curves) {
        if (c.scores.size() != levels || c.counts.size() != levels) {
            throw ShapeError("aggregate: curve for '" + c.image + "' does not match the threshold grid");
        }
        std::size_t best = 0;
        for (std::size_t k = 0; k < levels; ++k) {
            if (c.scores[k].f1 > c.scores[best].f1) best = k;
            r.mean_f1[k] += c.scores[k].f1;
            total[k] += c.counts[k];
        }
        r.per_image_best.push_back({c.image, c.scores[best].f1, grid.values[best]});
        ois_sum += c.scores[best].f1;
    }
    r.ois = ois_sum / static_cast<double>(curves.size());
    std::size_t ods_k = 0, cods_k = 0;
    r.cumulative_f1.resize(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        r.mean_f1[k] /= static_cast<double>(curves.size());
        r.cumulative_f1[k] = scores(total[k]).f1;
        if (r.mean_f1[k] > r.mean_f1[ods_k]) ods_k = k;
        if (r.cumulative_f1[k] > r.cumulative_f1[cods_k]) cods_k = k;
    }
    r.ods = r.mean_f1[ods_k];
    r.ods_threshold = grid.values[ods_k];
    r.cods = r.cumulative_f1[cods_k];
    r.cods_threshold = grid.values[cods_k];
    return r;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<ImageCurve>& curves,
                      const ThresholdGrid& grid) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os.precision(17);
    os << "image,t,tp,fp,fn,pr,re,f1\n";
    for (const auto& c : curves) {
        for (std::size_t k = 0; k < c.counts.size(); ++k) {
            const auto& n = c.counts[k];
            const auto& s = c.scores[k];
            os << c.image << ',' << grid.values[k] << ',' << n.tp << ',' << n.fp << ',' << n.fn << ','
               << s.precision << ',' << s.recall << ',' << s.f1 << '\n';
        }
    }
}

std::string report_to_json(const MetricReport& r) {
    nlohmann::json j;
    j["ois"] = r.ois;
    j["ods"] = r.ods;
    j["cods"] = r.cods;
    j["ods_threshold"] = r.ods_threshold;
    j["cods_threshold"] = r.cods_threshold;
    j["n_images"] = r.n_images;
    j["tolerance"] = r.tolerance;
    j["thresholds"] = r.thresholds;
    j["mean_f1"] = r.mean_f1;
    j["cumulative_f1"] = r.cumulative_f1;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& b : r.per_image_best) per.push_back({{"image", b.image}, {"f1", b.f1}, {"threshold", b.threshold}});
    j["per_image_best"] = per;
    return j.dump(2);
}

MetricReport report_from_json(const std::string& text) {
    MetricReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.ois = j.at("ois").get<double>();
        r.ods = j.at("ods").get<double>();
        r.cods = j.at("cods").get<double>();
        r.ods_threshold = j.at("ods_threshold").get<double>();
        r.cods_threshold = j.at("cods_threshold").get<double>();
        r.n_images = j.at("n_images").get<std::size_t>();
        r.tolerance = j.at("tolerance").get<int>();
        r.thresholds = j.value("thresholds", std::vector<double>{});
        r.mean_f1 = j.value("mean_f1", std::vector<double>{});
        r.cumulative_f1 = j.value("cumulative_f1", std::vector<double>{});
        for (const auto& b : j.value("per_image_best", nlohmann::json::array())) {
            r.per_image_best.push_back(
                {b.at("image").get<std::string>(), b.at("f1").get<double>(), b.at("threshold").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed metric report: ") + e.what());
    }
    return r;
}

void save_report(const std::filesystem::path& path, const MetricReport& report) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << report_to_json(report) << '\n';
}

MetricReport load_report(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return report_from_json(ss.str());
}

}  // namespace crackseg
