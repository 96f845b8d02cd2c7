#include "crackseg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crackseg {

ProbabilityMap predict(const Model& model, const ImageTensor& image) { return forward(model, image).final; }

ProbabilityMap predict_padded(const Model& model, const ImageTensor& image) {
    const int h = (image.height + kSizeDivisor - 1) / kSizeDivisor * kSizeDivisor;
    const int w = (image.width + kSizeDivisor - 1) / kSizeDivisor * kSizeDivisor;
    if (h == image.height && w == image.width) return predict(model, image);
    const int top = (h - image.height) / 2;
    const int left = (w - image.width) / 2;
    const ImageTensor padded = pad_reflect(image, top, h - image.height - top, left, w - image.width - left);
    return crop(predict(model, padded), top, left, image.height, image.width);
}

void TtaPlan::validate() const {
    if (mode == TtaMode::relative_factors) {
        if (factors.empty()) throw ConfigError("TTA plan has no factors");
        for (double f : factors) {
            if (!(f > 0) || !std::isfinite(f)) throw ConfigError("TTA factors must be positive");
        }
    } else {
        if (sizes.empty()) throw ConfigError("TTA plan has no sizes");
    }
}

TtaPlan cfd_plan() {
    TtaPlan p;
    p.factors = {0.6, 0.8, 1.0, 1.2, 1.4};
    return p;
}

TtaPlan wide_plan() {
    TtaPlan p;
    p.factors = {0.5, 0.75, 1.0, 1.25, 1.5};
    return p;
}

TtaPlan deepcrack_plan() {
    TtaPlan p;
    p.mode = TtaMode::fixed_sizes;
    p.factors.clear();
    p.sizes = {{288, 192}, {416, 288}, {544, 384}, {672, 480}, {832, 576}};
    return p;
}

TtaPlan parse_tta_plan(const std::string& text) {
    TtaPlan plan;
    plan.factors.clear();
    std::stringstream ss(text);
    std::string item;
    bool sized = false, relative = false;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (item.empty()) continue;
        const auto x = item.find_first_of("xX");
        try {
            std::size_t used = 0;
            if (x != std::string::npos) {
                sized = true;
                WorkingSize s;
                s.width = std::stoi(item.substr(0, x), &used);
                if (used != x) throw std::invalid_argument(item);
                s.height = std::stoi(item.substr(x + 1), &used);
                if (used != item.size() - x - 1) throw std::invalid_argument(item);
                plan.sizes.push_back(s);
            } else {
                relative = true;
                plan.factors.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad TTA plan entry '" + item + "'");
        }
    }
    if (sized && relative) throw ConfigError("TTA plan mixes factors and fixed sizes: " + text);
    plan.mode = sized ? TtaMode::fixed_sizes : TtaMode::relative_factors;
    plan.validate();
    return plan;
}

std::string format_tta_plan(const TtaPlan& plan) {
    std::ostringstream os;
    if (plan.mode == TtaMode::relative_factors) {
        for (std::size_t i = 0; i < plan.factors.size(); ++i) os << (i ? "," : "") << plan.factors[i];
    } else {
        for (std::size_t i = 0; i < plan.sizes.size(); ++i) {
            os << (i ? "," : "") << plan.sizes[i].width << 'x' << plan.sizes[i].height;
        }
    }
    return os.str();
}

std::vector<WorkingSize> resolve_plan(const TtaPlan& plan, int width, int height) {
    plan.validate();
    std::vector<WorkingSize> candidates;
    if (plan.mode == TtaMode::relative_factors) {
        for (double f : plan.factors) {
            const auto snap = [&](int dim) {
                return static_cast<int>(std::round(f * dim / kSizeDivisor)) * kSizeDivisor;
            };
            candidates.push_back({snap(width), snap(height)});
        }
    } else {
        candidates = plan.sizes;
    }
    std::vector<WorkingSize> out;
    for (const auto& s : candidates) {
        if (s.width < kSizeDivisor || s.height < kSizeDivisor) {
            throw ShapeError("TTA working size " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                             " is below the minimum of 32 for a " + std::to_string(width) + "x" +
                             std::to_string(height) + " image");
        }
        if (s.width % kSizeDivisor != 0 || s.height % kSizeDivisor != 0) {
            throw ShapeError("TTA working size " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                             " is not divisible by 32");
        }
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

ProbabilityMap predict_tta(const Model& model, const ImageTensor& image, const TtaPlan& plan) {
    const auto sizes = resolve_plan(plan, image.width, image.height);
    ProbabilityMap acc;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto& s = sizes[k];
        ProbabilityMap p;
        if (s.width == image.width && s.height == image.height) {
            p = predict(model, image);
        } else {
            p = resize_bilinear(predict(model, resize_bilinear(image, s.height, s.width)), image.height,
                                image.width);
        }
        if (k == 0) {
            acc = std::move(p);
        } else if (plan.aggregation == TtaAggregation::mean) {
            for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += p.data[i];
        } else {
            for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] = std::max(acc.data[i], p.data[i]);
        }
    }
    if (plan.aggregation == TtaAggregation::mean && sizes.size() > 1) {
        const float n = static_cast<float>(sizes.size());
        for (auto& v : acc.data) v = std::clamp(v / n, 0.0f, 1.0f);
    }
    return acc;
}

std::string to_string(TtaAggregation a) { return a == TtaAggregation::mean ? "mean" : "max"; }

TtaAggregation parse_tta_aggregation(const std::string& s) {
    if (s == "mean") return TtaAggregation::mean;
    if (s == "max") return TtaAggregation::max;
    throw ConfigError("unknown TTA aggregation '" + s + "' (mean | max)");
}

}  // namespace crackseg
