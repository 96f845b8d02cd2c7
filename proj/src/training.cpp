#include "crackseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace crackseg {

void LossConfig::validate() const {
    if (!(dice_smoothing > 0)) throw ConfigError("dice smoothing must be positive");
    if (!(bce_epsilon > 0 && bce_epsilon < 0.5)) throw ConfigError("bce epsilon must be in (0, 0.5)");
    bool any = false;
    for (double w : output_weights) {
        if (w < 0) throw ConfigError("output weights must be nonnegative");
        any = any || w > 0;
    }
    if (!any) throw ConfigError("at least one output weight must be positive");
}

template <typename T>
LossBreakdown compute_loss(const std::vector<nn::Tensor<T>>& outputs, const nn::Tensor<T>& target,
                           const LossConfig& cfg, std::vector<nn::Tensor<T>>* grads) {
    cfg.validate();
    if (outputs.empty() || outputs.size() > cfg.output_weights.size()) {
        throw ShapeError("loss: expected 1 to 5 outputs");
    }
    const int batch = target.n;
    const std::size_t pixels = target.plane();
    LossBreakdown result;
    if (grads) grads->assign(outputs.size(), nn::Tensor<T>());
    for (std::size_t o = 0; o < outputs.size(); ++o) {
        const auto& pred = outputs[o];
        nn::require_same_shape(pred, target, "loss");
        const double weight = cfg.output_weights[o];
        const double bce_scale = cfg.bce_reduction == BceReduction::mean ? 1.0 / static_cast<double>(pixels) : 1.0;
        double bce_sum = 0, dice_sum = 0;
        if (grads) (*grads)[o] = nn::Tensor<T>(pred.n, pred.c, pred.h, pred.w);
        for (int i = 0; i < batch; ++i) {
            const T* p = pred.sample(i);
            const T* y = target.sample(i);
            double bce = 0, sy = 0, sp = 0, syp = 0;
            for (std::size_t j = 0; j < pixels; ++j) {
                const double pv = p[j];
                const double yv = y[j];
                const double pc = std::clamp(pv, cfg.bce_epsilon, 1.0 - cfg.bce_epsilon);
                bce -= yv * std::log(pc) + (1.0 - yv) * std::log(1.0 - pc);
                sy += yv;
                sp += pv;
                syp += yv * pv;
            }
            bce *= bce_scale;
            const double s = cfg.dice_smoothing;
            const double num = 2.0 * syp + s;
            const double den = sy + sp + s;
            const double dice_loss = 1.0 - num / den;
            bce_sum += bce;
            dice_sum += dice_loss;
            if (grads) {
                T* g = (*grads)[o].sample(i);
                const double scale = weight / batch;
                for (std::size_t j = 0; j < pixels; ++j) {
                    const double pv = p[j];
                    const double yv = y[j];
                    double d_bce = 0;
                    if (pv > cfg.bce_epsilon && pv < 1.0 - cfg.bce_epsilon) {
                        d_bce = (-yv / pv + (1.0 - yv) / (1.0 - pv)) * bce_scale;
                    }
                    const double d_dice = -(2.0 * yv * den - num) / (den * den);
                    g[j] = static_cast<T>(scale * (d_bce + d_dice));
                }
            }
        }
        const double bce_mean = bce_sum / batch;
        const double dice_mean = dice_sum / batch;
        result.bce.push_back(bce_mean);
        result.dice.push_back(dice_mean);
        result.per_output.push_back(weight * (bce_mean + dice_mean));
        result.total += weight * (bce_mean + dice_mean);
    }
    return result;
}

template LossBreakdown compute_loss(const std::vector<nn::Tensor<float>>&, const nn::Tensor<float>&,
                                    const LossConfig&, std::vector<nn::Tensor<float>>*);
template LossBreakdown compute_loss(const std::vector<nn::Tensor<double>>&, const nn::Tensor<double>&,
                                    const LossConfig&, std::vector<nn::Tensor<double>>*);

namespace {

nn::Tensor<float> mask_tensor(const std::vector<const BinaryMask*>& masks) {
    const auto& f = *masks.front();
    nn::Tensor<float> t(static_cast<int>(masks.size()), 1, f.height, f.width);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& m = *masks[i];
        if (m.height != f.height || m.width != f.width) throw ShapeError("loss: target shapes differ");
        std::transform(m.data.begin(), m.data.end(), t.sample(static_cast<int>(i)),
                       [](std::uint8_t v) { return v ? 1.0f : 0.0f; });
    }
    return t;
}

nn::Tensor<float> map_tensor(const ProbabilityMap& m) {
    nn::Tensor<float> t(1, 1, m.height, m.width);
    std::copy(m.data.begin(), m.data.end(), t.data.begin());
    return t;
}

}  // namespace

LossBreakdown loss(const NetworkOutputs& outputs, const BinaryMask& target, const LossConfig& cfg) {
    std::vector<nn::Tensor<float>> outs;
    outs.push_back(map_tensor(outputs.final));
    for (const auto& a : outputs.auxiliary) outs.push_back(map_tensor(a));
    return compute_loss(outs, mask_tensor({&target}), cfg);
}

double lr_at(const LrSchedule& schedule, int epoch) {
    if (epoch < 0) throw ConfigError("lr_at: epoch must be nonnegative, got " + std::to_string(epoch));
    return schedule.initial * std::pow(schedule.decay_base, epoch);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (weight_decay < 0) throw ConfigError("weight decay must be nonnegative");
    if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0, 1)");
    if (patch_size < 32 || patch_size % 32 != 0) throw ConfigError("patch size must be a positive multiple of 32");
    if (!(lr.initial > 0) || !(lr.decay_base > 0)) throw ConfigError("learning rate schedule must be positive");
}

std::vector<TrainingSample> expand_d4(const std::vector<TrainingSample>& samples) {
    std::vector<TrainingSample> out;
    out.reserve(samples.size() * 8);
    for (const auto& s : samples) {
        for (auto& [img, mask] : d4_expand(s.image, s.mask)) out.push_back({std::move(img), std::move(mask)});
    }
    return out;
}

TrainResult train(Model& model, const std::vector<TrainingSample>& samples, const AugmentPolicy& policy,
                  const TrainConfig& cfg, const LossConfig& loss_cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    loss_cfg.validate();
    if (samples.empty()) throw ConfigError("training set is empty");
    AugmentPolicy patch_policy = policy;
    patch_policy.patch_size = cfg.patch_size;
    patch_policy.validate();

    auto params = model.params();
    std::vector<nn::Tensor<float>> velocity;
    for (auto* p : params) {
        velocity.emplace_back(p->trainable ? nn::Tensor<float>(p->value.n, p->value.c, p->value.h, p->value.w)
                                           : nn::Tensor<float>());
    }

    TrainResult result;
    const std::size_t n = samples.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.lr, epoch);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        if (cfg.shuffle) {
            SeededRng shuffle_rng(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(epoch), ~std::uint64_t{0}));
            shuffle_rng.shuffle(order);
        }
        double loss_sum = 0;
        std::size_t batches = 0;
        for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t last = std::min(n, first + static_cast<std::size_t>(cfg.batch_size));
            std::vector<ImageTensor> images;
            std::vector<BinaryMask> masks;
            for (std::size_t k = first; k < last; ++k) {
                const std::size_t idx = order[k];
                SeededRng rng(derive_seed(cfg.run_seed, static_cast<std::uint64_t>(epoch), idx));
                Patch patch = sample_patch(samples[idx].image, samples[idx].mask, patch_policy, rng);
                images.push_back(std::move(patch.image));
                masks.push_back(std::move(patch.mask));
            }
            std::vector<const BinaryMask*> mask_ptrs;
            for (const auto& m : masks) mask_ptrs.push_back(&m);

            model.zero_grad();
            const auto outputs = model.forward(to_tensor(images));
            std::vector<nn::Tensor<float>> grads;
            const LossBreakdown lb = compute_loss(outputs, mask_tensor(mask_ptrs), loss_cfg, &grads);
            model.backward(grads);

            for (std::size_t i = 0; i < params.size(); ++i) {
                auto* p = params[i];
                if (!p->trainable) continue;
                auto& v = velocity[i].data;
                auto& w = p->value.data;
                const auto& g = p->grad.data;
                const auto mom = static_cast<float>(cfg.momentum);
                const auto step = static_cast<float>(lr);
                for (std::size_t j = 0; j < w.size(); ++j) {
                    v[j] = mom * v[j] - step * g[j];
                    w[j] += v[j];
                }
                if (cfg.weight_decay > 0 && p->decay) {
                    const auto shrink = static_cast<float>(lr * cfg.weight_decay);
                    for (auto& x : w) x -= shrink * x;
                }
            }
            loss_sum += lb.total;
            ++batches;
            ++result.optimizer_steps;
        }
        const EpochRecord rec{epoch, loss_sum / static_cast<double>(batches), lr};
        result.trace.push_back(rec);
        if (on_epoch && !on_epoch(rec, model)) break;
    }
    return result;
}

TrainResult train(Model& model, const DatasetManifest& manifest, const AugmentPolicy& policy,
                  const TrainConfig& cfg, const LossConfig& loss_cfg, const EpochCallback& on_epoch) {
    const auto entries = manifest.entries_for(Split::train);
    if (entries.empty()) throw ConfigError("manifest '" + manifest.name + "' has no training entries");
    std::vector<TrainingSample> base;
    for (const auto& e : entries) {
        LoadedPair p = load_pair(e, manifest.color);
        base.push_back({std::move(p.image), std::move(p.mask)});
    }
    return train(model, expand_d4(base), policy, cfg, loss_cfg, on_epoch);
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochRecord>& trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os.precision(17);
    os << "epoch,mean_loss,lr\n";
    for (const auto& r : trace) os << r.epoch << ',' << r.mean_loss << ',' << r.lr << '\n';
}

}  // namespace crackseg
