#pragma once

#include <json.hpp>

#include "crackseg/augment.hpp"
#include "crackseg/inference.hpp"
#include "crackseg/network.hpp"
#include "crackseg/training.hpp"

namespace crackseg {

// JSON mapping of the configuration types. Missing keys keep their defaults.

void to_json(nlohmann::json& j, const EncoderSpec& v);
void from_json(const nlohmann::json& j, EncoderSpec& v);
void to_json(nlohmann::json& j, const DecoderSpec& v);
void from_json(const nlohmann::json& j, DecoderSpec& v);
void to_json(nlohmann::json& j, const ModelConfig& v);
void from_json(const nlohmann::json& j, ModelConfig& v);

void to_json(nlohmann::json& j, const AugmentPolicy& v);
void from_json(const nlohmann::json& j, AugmentPolicy& v);

void to_json(nlohmann::json& j, const LossConfig& v);
void from_json(const nlohmann::json& j, LossConfig& v);
void to_json(nlohmann::json& j, const LrSchedule& v);
void from_json(const nlohmann::json& j, LrSchedule& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);

void to_json(nlohmann::json& j, const TtaPlan& v);
void from_json(const nlohmann::json& j, TtaPlan& v);

}  // namespace crackseg
