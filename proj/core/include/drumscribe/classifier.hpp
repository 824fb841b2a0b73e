#pragma once

#include <map>
#include <memory>
#include <string>

#include "drumscribe/checkpoint.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/tensor.hpp"
#include "drumscribe/vit.hpp"

namespace drumscribe {

/// Uniform production-precision (float) interface over the three
/// architectures, used by the training loop, evaluation, and checkpointing.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual const std::string& arch() const = 0;
    virtual uint8_t arch_id() const = 0;

    /// Logits of shape [num_classes]. Records onto the active tape, if any.
    /// `dropout_rng` enables dropout for architectures that support it.
    virtual Tensor<float> forward(const Tensor<float>& input, Rng* dropout_rng = nullptr) = 0;

    virtual ParamList<float> parameters() = 0;

    /// Model hyperparameters as section.key=value entries (for checkpoints).
    virtual std::map<std::string, std::string> config() const = 0;
};

/// Fresh model with seeded initialization. `arch` is one of vit/cnn/rnn;
/// the ViT uses `vit_cfg`, the baselines their fixed architectures.
std::unique_ptr<Classifier> make_classifier(const std::string& arch, const VitConfig& vit_cfg,
                                            uint64_t seed);

/// Restores a model (architecture, hyperparameters, weights).
std::unique_ptr<Classifier> classifier_from_checkpoint(const Checkpoint& ckpt);

/// Snapshot of the model for saving. Parameter data is deep-copied;
/// `extra` entries (for example the DSP settings) are merged into the config.
Checkpoint make_checkpoint(Classifier& model,
                           const std::map<std::string, std::string>& extra = {});

}  // namespace drumscribe
