#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "crackseg/augment.hpp"
#include "crackseg/dataset.hpp"
#include "crackseg/network.hpp"

namespace crackseg {

enum class BceReduction { mean, sum };

struct LossConfig {
    double dice_smoothing = 1.0;
    BceReduction bce_reduction = BceReduction::mean;
    /// Weights for [final, aux l=2..5]; only the first is used without deep supervision.
    std::array<double, 5> output_weights = {1, 1, 1, 1, 1};
    double bce_epsilon = 1e-7;

    void validate() const;
};

struct LossBreakdown {
    double total = 0;
    std::vector<double> per_output;  // weighted sum of bce + dice for each output
    std::vector<double> bce;
    std::vector<double> dice;        // 1 - Dice coefficient
};

/// Per output o: L_o = BCE(y, p_o) + 1 - (2 sum(y p_o) + s) / (sum(y) + sum(p_o) + s), with
/// p clamped to [eps, 1-eps] inside the BCE. Total = sum_o w_o L_o, averaged over the batch.
/// When `grads` is given it receives d(total)/d(output) for each output.
template <typename T>
LossBreakdown compute_loss(const std::vector<nn::Tensor<T>>& outputs, const nn::Tensor<T>& target,
                           const LossConfig& cfg, std::vector<nn::Tensor<T>>* grads = nullptr);

/// Loss of one image's network outputs against its mask.
LossBreakdown loss(const NetworkOutputs& outputs, const BinaryMask& target, const LossConfig& cfg);

struct LrSchedule {
    double initial = 0.01;
    double decay_base = 0.96;
};

/// initial * decay_base^epoch. Throws ConfigError for a negative epoch.
double lr_at(const LrSchedule& schedule, int epoch);

struct TrainConfig {
    int epochs = 120;
    int batch_size = 8;
    double weight_decay = 1e-5;
    double momentum = 0.9;
    int patch_size = 288;
    std::uint64_t run_seed = 1;
    LrSchedule lr;
    bool shuffle = true;

    void validate() const;
};

struct TrainingSample {
    ImageTensor image;
    BinaryMask mask;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0;
    double lr = 0;
};

struct TrainResult {
    std::vector<EpochRecord> trace;
    std::size_t optimizer_steps = 0;
};

/// Called after each epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&, Model&)>;

/// SGD with momentum (v = m v - lr g; w += v) and decoupled weight decay on convolution
/// kernels (w -= lr * wd * w). Each epoch visits every sample once, drawing one augmented
/// patch per sample from the stream derive_seed(run_seed, epoch, index).
TrainResult train(Model& model, const std::vector<TrainingSample>& samples, const AugmentPolicy& policy,
                  const TrainConfig& cfg, const LossConfig& loss_cfg = {},
                  const EpochCallback& on_epoch = {});

/// Loads the manifest's train split, expands every pair to its 8 D4 variants, and trains.
TrainResult train(Model& model, const DatasetManifest& manifest, const AugmentPolicy& policy,
                  const TrainConfig& cfg, const LossConfig& loss_cfg = {},
                  const EpochCallback& on_epoch = {});

std::vector<TrainingSample> expand_d4(const std::vector<TrainingSample>& samples);

/// CSV with header `epoch,mean_loss,lr`.
void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochRecord>& trace);

}  // namespace crackseg
