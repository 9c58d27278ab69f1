#pragma once

#include <variant>

#include "sbir/adam.hpp"
#include "sbir/encoders.hpp"
#include "sbir/sampling.hpp"

namespace sbir {

using EncoderConfig = std::variant<CnnEncoderConfig, VitEncoderConfig>;

NamedParams init_params(const EncoderConfig& config, std::uint64_t seed);
EncoderOutput encoder_forward(const NamedParams& params, const EncoderConfig& config,
                              const Tensor& image);
int encoder_embedding_dim(const EncoderConfig& config);
int encoder_num_classes(const EncoderConfig& config);

struct LossConfig {
    double margin = 3.0;
    double classification_weight = 1.0;

    void validate() const;
};

struct TrainSchedule {
    int epochs = 100;
    double initial_lr = 1e-4;
    int drop_epoch = 30;
    double dropped_lr = 1e-5;
    double finetune_lr = 1e-6;
    int batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Checkpoint {
    EncoderConfig photo_config;
    EncoderConfig sketch_config;
    NamedParams photo_params;
    NamedParams sketch_params;
    AdamState photo_adam;
    AdamState sketch_adam;
    int epoch = 0;
    std::vector<double> loss_history;  // per-epoch mean training loss
};

/// Mean over the batch of [ ||a-p||^2 - ||a-n||^2 + margin ]_+ with squared
/// Euclidean distances and hinge subgradient 0 at the kink.
Tensor triplet_loss(const std::vector<Tensor>& anchor_embs,
                    const std::vector<Tensor>& positive_embs,
                    const std::vector<Tensor>& negative_embs, double margin);

/// triplet + weight * (CE(photo_logits, labels) + CE(sketch_logits, labels)) / 2.
Tensor multitask_loss(const Tensor& triplet, const Tensor& photo_logits,
                      const Tensor& sketch_logits, const std::vector<int>& labels,
                      double classification_weight);

/// Trains independent photo and sketch encoders from scratch; photos embed
/// as anchors, sketches as positives and negatives. Deterministic in
/// sched.seed; throws on divergence (NaN loss).
Checkpoint train(const DatasetIndex& ds, const EncoderConfig& photo_config,
                 const EncoderConfig& sketch_config, const BatchSpec& batch_spec,
                 const LossConfig& loss, const TrainSchedule& sched);

/// Continues training a checkpoint at sched.finetune_lr for sched.epochs
/// more epochs using batch_spec's strategy. finetune_lr == 0 runs the loop
/// without updates (useful as a no-op control).
Checkpoint finetune(Checkpoint ckpt, const DatasetIndex& ds,
                    const BatchSpec& batch_spec, const LossConfig& loss,
                    const TrainSchedule& sched);

}  // namespace sbir
