#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drumscribe/checkpoint.hpp"
#include "drumscribe/classifier.hpp"
#include "drumscribe/data.hpp"
#include "drumscribe/errors.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

struct TrainConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch = 16;
    int epochs = 50;
    uint64_t seed = 1;
    std::string arch = "vit";
    bool augment = false;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
        if (batch < 1) throw ConfigError("train: batch must be >= 1");
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("train: betas must be in [0,1)");
        if (!(eps > 0.0)) throw ConfigError("train: eps must be positive");
        if (arch != "vit" && arch != "cnn" && arch != "rnn")
            throw ConfigError("train: arch must be vit, cnn, or rnn");
    }
};

/// Adam moments, one slot per parameter tensor (same order as the ParamList).
template <typename S>
struct AdamState {
    std::vector<std::vector<S>> m, v;
    int64_t step = 0;
};

/// One bias-corrected Adam update from the gradients currently stored on the
/// parameters. Gradients are left untouched (callers zero them afterwards).
template <typename S>
void adam_step(ParamList<S>& params, AdamState<S>& state, const TrainConfig& cfg) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(static_cast<size_t>(params[i].tensor.size()), S(0));
            state.v[i].assign(static_cast<size_t>(params[i].tensor.size()), S(0));
        }
    }
    if (state.m.size() != params.size())
        throw ShapeError("adam_step: state was created for a different parameter list");
    ++state.step;
    const S b1 = static_cast<S>(cfg.beta1);
    const S b2 = static_cast<S>(cfg.beta2);
    const S corr1 = S(1) - static_cast<S>(std::pow(cfg.beta1, static_cast<double>(state.step)));
    const S corr2 = S(1) - static_cast<S>(std::pow(cfg.beta2, static_cast<double>(state.step)));
    const S lr = static_cast<S>(cfg.lr);
    const S eps = static_cast<S>(cfg.eps);
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].tensor;
        const auto& g = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (size_t j = 0; j < g.size(); ++j) {
            m[j] = b1 * m[j] + (S(1) - b1) * g[j];
            v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
            const S mhat = m[j] / corr1;
            const S vhat = v[j] / corr2;
            p(static_cast<int64_t>(j)) -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;  // percent
    double val_acc = 0.0;    // percent
};

struct EvalReport {
    double top1_accuracy = 0.0;  // percent
    std::array<std::array<int64_t, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> precision{};
    int64_t total = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    Checkpoint best;  // parameters at the best-validation epoch
    double best_val_acc = -1.0;
    int best_epoch = -1;
};

/// Invoked after every epoch; return true to stop training early.
using EpochCallback = std::function<bool(const EpochLog&)>;

/// Adam + mean cross-entropy training with a per-epoch seeded shuffle.
/// The log holds one row per completed epoch; the checkpoint with the best
/// validation accuracy is retained (ties keep the earlier epoch). When the
/// validation set is empty, training accuracy drives checkpoint selection
/// and the val_acc column is reported as 0. A non-finite loss aborts with
/// TrainingDivergedError. `checkpoint_extra` entries are stored into every
/// snapshot's config blob.
TrainResult train(Classifier& model, const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, const TrainConfig& cfg,
                  const std::map<std::string, std::string>& checkpoint_extra = {},
                  const EpochCallback& on_epoch = nullptr);

/// Index of the largest logit; ties resolve to the lowest class code.
int argmax_lowest(const Tensor<float>& logits);

/// Top-1 accuracy, confusion matrix, and per-class precision/recall.
EvalReport evaluate(Classifier& model, const std::vector<LabeledExample>& examples);

struct BenchRow {
    std::string method;  // RNN / CNN / Ours
    std::string arch;    // rnn / cnn / vit
    double top1 = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;               // RNN, CNN, Ours order
    std::vector<std::vector<EpochLog>> logs;  // per row
};

/// Trains all three architectures on the identical split, seed, and epoch
/// budget, then scores each best checkpoint on the validation set.
BenchResult bench(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, const TrainConfig& cfg,
                  const VitConfig& vit_cfg, const EpochCallback& on_epoch = nullptr);

/// Shifts the frame axis by a few columns and adds Gaussian noise; used when
/// TrainConfig.augment is on.
Tensor<float> augment_input(const Tensor<float>& input, Rng& rng);

/// Fresh, initialized model for cfg.arch. The init seed is derived from
/// cfg.seed per architecture, so single-arch runs and bench runs that share a
/// master seed build identical models.
std::unique_ptr<Classifier> new_model(const TrainConfig& cfg, const VitConfig& vit_cfg);

std::string format_report(const EvalReport& report);
std::string format_bench_table(const std::vector<BenchRow>& rows);

/// CSV emitters (fixed-precision, deterministic bytes).
void write_loss_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);
void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path);
void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

}  // namespace drumscribe
