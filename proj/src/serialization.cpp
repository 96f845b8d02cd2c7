#include "crackseg/serialization.hpp"

namespace crackseg {

using nlohmann::json;

namespace {

template <typename V>
void get_if(const json& j, const char* key, V& out) {
    const auto it = j.find(key);
    if (it != j.end()) it->get_to(out);
}

void check_object(const json& j, const char* what, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* allowed) { return k == allowed; }) ==
            keys.end()) {
            throw ConfigError("unknown key '" + k + "' in " + what);
        }
    }
}

}  // namespace

void to_json(json& j, const EncoderSpec& v) {
    j = json{{"kind", to_string(v.kind)}, {"width_multiplier", v.width_multiplier},
             {"level_channels", v.level_channels}};
}

void from_json(const json& j, EncoderSpec& v) {
    check_object(j, "encoder", {"kind", "width_multiplier", "level_channels"});
    if (j.contains("kind")) v.kind = parse_encoder_kind(j.at("kind").get<std::string>());
    get_if(j, "width_multiplier", v.width_multiplier);
    get_if(j, "level_channels", v.level_channels);
}

void to_json(json& j, const DecoderSpec& v) {
    j = json{{"filters", v.filters}, {"upsample", to_string(v.upsample)}, {"deep_supervision", v.deep_supervision}};
}

void from_json(const json& j, DecoderSpec& v) {
    check_object(j, "decoder", {"filters", "upsample", "deep_supervision"});
    get_if(j, "filters", v.filters);
    if (j.contains("upsample")) v.upsample = parse_upsample_mode(j.at("upsample").get<std::string>());
    get_if(j, "deep_supervision", v.deep_supervision);
}

void to_json(json& j, const ModelConfig& v) {
    j = json{{"encoder", v.encoder},
             {"decoder", v.decoder},
             {"input_channels", v.input_channels},
             {"bn_epsilon", v.bn_epsilon},
             {"bn_momentum", v.bn_momentum}};
}

void from_json(const json& j, ModelConfig& v) {
    check_object(j, "model", {"encoder", "decoder", "input_channels", "bn_epsilon", "bn_momentum"});
    get_if(j, "encoder", v.encoder);
    get_if(j, "decoder", v.decoder);
    get_if(j, "input_channels", v.input_channels);
    get_if(j, "bn_epsilon", v.bn_epsilon);
    get_if(j, "bn_momentum", v.bn_momentum);
}

void to_json(json& j, const AugmentPolicy& v) {
    j = json{{"patch_size", v.patch_size},
             {"brightness_range", v.brightness_range},
             {"contrast_range", v.contrast_range},
             {"gaussian_sigma_max", v.gaussian_sigma_max},
             {"multiplicative_range", {v.multiplicative_low, v.multiplicative_high}},
             {"shrink_range", {v.shrink_low, v.shrink_high}},
             {"crop_min", v.crop_min},
             {"brightness_mode", v.brightness_mode == BrightnessMode::additive ? "additive" : "multiplicative"},
             {"p_brightness", v.p_brightness},
             {"p_contrast", v.p_contrast},
             {"p_noise", v.p_noise},
             {"p_gaussian_branch", v.p_gaussian_branch},
             {"p_zoom", v.p_zoom},
             {"p_shrink_branch", v.p_shrink_branch}};
}

void from_json(const json& j, AugmentPolicy& v) {
    check_object(j, "augment",
                 {"patch_size", "brightness_range", "contrast_range", "gaussian_sigma_max", "multiplicative_range",
                  "shrink_range", "crop_min", "brightness_mode", "p_brightness", "p_contrast", "p_noise",
                  "p_gaussian_branch", "p_zoom", "p_shrink_branch"});
    get_if(j, "patch_size", v.patch_size);
    get_if(j, "brightness_range", v.brightness_range);
    get_if(j, "contrast_range", v.contrast_range);
    get_if(j, "gaussian_sigma_max", v.gaussian_sigma_max);
    if (j.contains("multiplicative_range")) {
        const auto r = j.at("multiplicative_range").get<std::array<double, 2>>();
        v.multiplicative_low = r[0];
        v.multiplicative_high = r[1];
    }
    if (j.contains("shrink_range")) {
        const auto r = j.at("shrink_range").get<std::array<double, 2>>();
        v.shrink_low = r[0];
        v.shrink_high = r[1];
    }
    get_if(j, "crop_min", v.crop_min);
    if (j.contains("brightness_mode")) {
        const auto m = j.at("brightness_mode").get<std::string>();
        if (m == "additive") {
            v.brightness_mode = BrightnessMode::additive;
        } else if (m == "multiplicative") {
            v.brightness_mode = BrightnessMode::multiplicative;
        } else {
            throw ConfigError("unknown brightness_mode '" + m + "' (additive | multiplicative)");
        }
    }
    get_if(j, "p_brightness", v.p_brightness);
    get_if(j, "p_contrast", v.p_contrast);
    get_if(j, "p_noise", v.p_noise);
    get_if(j, "p_gaussian_branch", v.p_gaussian_branch);
    get_if(j, "p_zoom", v.p_zoom);
    get_if(j, "p_shrink_branch", v.p_shrink_branch);
}

void to_json(json& j, const LossConfig& v) {
    j = json{{"dice_smoothing", v.dice_smoothing},
             {"bce_reduction", v.bce_reduction == BceReduction::mean ? "mean" : "sum"},
             {"output_weights", v.output_weights},
             {"bce_epsilon", v.bce_epsilon}};
}

void from_json(const json& j, LossConfig& v) {
    check_object(j, "loss", {"dice_smoothing", "bce_reduction", "output_weights", "bce_epsilon"});
    get_if(j, "dice_smoothing", v.dice_smoothing);
    if (j.contains("bce_reduction")) {
        const auto r = j.at("bce_reduction").get<std::string>();
        if (r != "mean" && r != "sum") throw ConfigError("unknown bce_reduction '" + r + "' (mean | sum)");
        v.bce_reduction = r == "mean" ? BceReduction::mean : BceReduction::sum;
    }
    get_if(j, "output_weights", v.output_weights);
    get_if(j, "bce_epsilon", v.bce_epsilon);
}

void to_json(json& j, const LrSchedule& v) { j = json{{"initial", v.initial}, {"decay_base", v.decay_base}}; }

void from_json(const json& j, LrSchedule& v) {
    check_object(j, "lr", {"initial", "decay_base"});
    get_if(j, "initial", v.initial);
    get_if(j, "decay_base", v.decay_base);
}

void to_json(json& j, const TrainConfig& v) {
    j = json{{"epochs", v.epochs},         {"batch_size", v.batch_size}, {"weight_decay", v.weight_decay},
             {"momentum", v.momentum},     {"patch_size", v.patch_size}, {"run_seed", v.run_seed},
             {"lr", v.lr},                 {"shuffle", v.shuffle}};
}

void from_json(const json& j, TrainConfig& v) {
    check_object(j, "training",
                 {"epochs", "batch_size", "weight_decay", "momentum", "patch_size", "run_seed", "lr", "shuffle"});
    get_if(j, "epochs", v.epochs);
    get_if(j, "batch_size", v.batch_size);
    get_if(j, "weight_decay", v.weight_decay);
    get_if(j, "momentum", v.momentum);
    get_if(j, "patch_size", v.patch_size);
    get_if(j, "run_seed", v.run_seed);
    get_if(j, "lr", v.lr);
    get_if(j, "shuffle", v.shuffle);
}

void to_json(json& j, const TtaPlan& v) {
    j = json{{"mode", v.mode == TtaMode::relative_factors ? "relative-factors" : "fixed-sizes"},
             {"aggregation", to_string(v.aggregation)}};
    if (v.mode == TtaMode::relative_factors) {
        j["factors"] = v.factors;
    } else {
        json sizes = json::array();
        for (const auto& s : v.sizes) sizes.push_back({s.width, s.height});
        j["sizes"] = sizes;
    }
}

void from_json(const json& j, TtaPlan& v) {
    check_object(j, "tta", {"mode", "factors", "sizes", "aggregation"});
    if (j.contains("mode")) {
        const auto m = j.at("mode").get<std::string>();
        if (m == "relative-factors") {
            v.mode = TtaMode::relative_factors;
        } else if (m == "fixed-sizes") {
            v.mode = TtaMode::fixed_sizes;
        } else {
            throw ConfigError("unknown TTA mode '" + m + "' (relative-factors | fixed-sizes)");
        }
    } else if (j.contains("sizes")) {
        v.mode = TtaMode::fixed_sizes;
    }
    get_if(j, "factors", v.factors);
    if (j.contains("sizes")) {
        v.sizes.clear();
        for (const auto& s : j.at("sizes")) {
            const auto wh = s.get<std::array<int, 2>>();
            v.sizes.push_back({wh[0], wh[1]});
        }
    }
    if (j.contains("aggregation")) v.aggregation = parse_tta_aggregation(j.at("aggregation").get<std::string>());
    v.validate();
}

}  // namespace crackseg
