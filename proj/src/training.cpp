#include "sbir/training.hpp"

#include <cmath>
#include <stdexcept>

namespace sbir {

NamedParams init_params(const EncoderConfig& config, std::uint64_t seed) {
    return std::visit(
        [seed](const auto& c) -> NamedParams {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CnnEncoderConfig>)
                return init_cnn_params(c, seed);
            else
                return init_vit_params(c, seed);
        },
        config);
}

EncoderOutput encoder_forward(const NamedParams& params, const EncoderConfig& config,
                              const Tensor& image) {
    return std::visit(
        [&](const auto& c) -> EncoderOutput {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CnnEncoderConfig>)
                return cnn_forward(params, c, image);
            else
                return vit_forward(params, c, image);
        },
        config);
}

int encoder_embedding_dim(const EncoderConfig& config) {
    return std::visit([](const auto& c) { return c.embedding_dim(); }, config);
}

int encoder_num_classes(const EncoderConfig& config) {
    return std::visit([](const auto& c) { return c.num_classes; }, config);
}

void LossConfig::validate() const {
    if (margin <= 0.0) throw std::invalid_argument("LossConfig: margin must be positive");
    if (classification_weight < 0.0)
        throw std::invalid_argument("LossConfig: classification weight must be >= 0");
}

void TrainSchedule::validate() const {
    if (epochs <= 0) throw std::invalid_argument("TrainSchedule: epochs must be positive");
    if (drop_epoch >= epochs)
        throw std::invalid_argument("TrainSchedule: drop_epoch must precede epochs");
    if (initial_lr <= 0.0 || dropped_lr <= 0.0)
        throw std::invalid_argument("TrainSchedule: learning rates must be positive");
    if (dropped_lr >= initial_lr || (finetune_lr > 0.0 && finetune_lr >= dropped_lr))
        throw std::invalid_argument("TrainSchedule: learning rates must decrease");
    if (batch_size < 2)
        throw std::invalid_argument("TrainSchedule: batch_size must be >= 2");
}

Tensor triplet_loss(const std::vector<Tensor>& anchor_embs,
                    const std::vector<Tensor>& positive_embs,
                    const std::vector<Tensor>& negative_embs, double margin) {
    const size_t n = anchor_embs.size();
    if (n == 0 || positive_embs.size() != n || negative_embs.size() != n)
        throw std::invalid_argument("triplet_loss: batch columns must align");
    Tensor margin_t = Tensor::scalar(margin);
    Tensor total;
    for (size_t i = 0; i < n; ++i) {
        if (anchor_embs[i].numel() != positive_embs[i].numel() ||
            anchor_embs[i].numel() != negative_embs[i].numel())
            throw std::invalid_argument("triplet_loss: embedding dimension mismatch");
        Tensor violation =
            relu(add(sub(squared_distance(anchor_embs[i], positive_embs[i]),
                         squared_distance(anchor_embs[i], negative_embs[i])),
                     margin_t));
        total = total.defined() ? add(total, violation) : violation;
    }
    return scale(total, 1.0 / static_cast<double>(n));
}

Tensor multitask_loss(const Tensor& triplet, const Tensor& photo_logits,
                      const Tensor& sketch_logits, const std::vector<int>& labels,
                      double classification_weight) {
    if (classification_weight == 0.0) return triplet;
    Tensor ce = add(cross_entropy(photo_logits, labels),
                    cross_entropy(sketch_logits, labels));
    return add(triplet, scale(ce, classification_weight * 0.5));
}

namespace {

double run_step(const DatasetIndex& ds, const TripletBatch& batch, Checkpoint& ckpt,
                const LossConfig& loss_cfg, double lr) {
    std::vector<Tensor> anchor_embs, pos_embs, neg_embs;
    std::vector<Tensor> photo_logit_rows, sketch_logit_rows;
    std::vector<int> labels;
    const int num_classes = encoder_num_classes(ckpt.photo_config);
    for (const TripletSlot& slot : batch.slots) {
        const SampleRecord& rec = ds.items[slot.anchor_item];
        const SampleRecord& neg = ds.items[slot.negative_item];
        EncoderOutput a = encoder_forward(ckpt.photo_params, ckpt.photo_config,
                                          rec.photo.to_tensor(slot.flip));
        EncoderOutput p = encoder_forward(
            ckpt.sketch_params, ckpt.sketch_config,
            rec.sketches[static_cast<size_t>(slot.positive_sketch)].to_tensor(slot.flip));
        EncoderOutput n = encoder_forward(
            ckpt.sketch_params, ckpt.sketch_config,
            neg.sketches[static_cast<size_t>(slot.negative_sketch)].to_tensor(slot.flip));
        anchor_embs.push_back(a.embedding);
        pos_embs.push_back(p.embedding);
        neg_embs.push_back(n.embedding);
        photo_logit_rows.push_back(reshape(a.logits, {1, num_classes}));
        sketch_logit_rows.push_back(reshape(p.logits, {1, num_classes}));
        labels.push_back(rec.category_id);
    }
    Tensor trip = triplet_loss(anchor_embs, pos_embs, neg_embs, loss_cfg.margin);
    Tensor loss = multitask_loss(trip, concat_rows(photo_logit_rows),
                                 concat_rows(sketch_logit_rows), labels,
                                 loss_cfg.classification_weight);
    const double loss_value = loss.scalar_value();
    if (!std::isfinite(loss_value))
        throw std::runtime_error("training diverged: loss is not finite at step " +
                                 std::to_string(ckpt.photo_adam.step));
    if (lr > 0.0) {
        ckpt.photo_params.zero_all_grads();
        ckpt.sketch_params.zero_all_grads();
        backward(loss);
        auto photo_tensors = ckpt.photo_params.tensors();
        auto sketch_tensors = ckpt.sketch_params.tensors();
        adam_step(photo_tensors, ckpt.photo_adam, lr);
        adam_step(sketch_tensors, ckpt.sketch_adam, lr);
    }
    return loss_value;
}

int steps_per_epoch(const DatasetIndex& ds, const BatchSpec& spec) {
    return std::max<int>(1, static_cast<int>(ds.items.size()) / spec.batch_size);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
}

void run_epochs(const DatasetIndex& ds, Checkpoint& ckpt, const BatchSpec& batch_spec,
                const LossConfig& loss_cfg, int epochs,
                const std::function<double(int)>& lr_for_epoch, std::uint64_t seed) {
    const int steps = steps_per_epoch(ds, batch_spec);
    for (int e = 0; e < epochs; ++e) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(ckpt.epoch)));
        const double lr = lr_for_epoch(e);
        double epoch_loss = 0.0;
        for (int s = 0; s < steps; ++s) {
            TripletBatch batch = sample_batch(ds, batch_spec, rng);
            batch.validate(ds, batch_spec.batch_size);
            epoch_loss += run_step(ds, batch, ckpt, loss_cfg, lr);
        }
        ckpt.loss_history.push_back(epoch_loss / steps);
        ckpt.epoch += 1;
    }
}

}  // namespace

Checkpoint train(const DatasetIndex& ds, const EncoderConfig& photo_config,
                 const EncoderConfig& sketch_config, const BatchSpec& batch_spec,
                 const LossConfig& loss, const TrainSchedule& sched) {
    if (ds.items.empty()) throw std::invalid_argument("train: empty dataset");
    loss.validate();
    sched.validate();
    BatchSpec spec = batch_spec;
    spec.batch_size = sched.batch_size;

    Checkpoint ckpt;
    ckpt.photo_config = photo_config;
    ckpt.sketch_config = sketch_config;
    ckpt.photo_params = init_params(photo_config, mix_seed(sched.seed, 0x70686f74ULL));
    ckpt.sketch_params = init_params(sketch_config, mix_seed(sched.seed, 0x736b6574ULL));
    ckpt.photo_adam = AdamState::for_params(ckpt.photo_params.tensors());
    ckpt.sketch_adam = AdamState::for_params(ckpt.sketch_params.tensors());

    run_epochs(ds, ckpt, spec, loss, sched.epochs,
               [&sched](int e) {
                   return e < sched.drop_epoch ? sched.initial_lr : sched.dropped_lr;
               },
               sched.seed);
    return ckpt;
}

Checkpoint finetune(Checkpoint ckpt, const DatasetIndex& ds,
                    const BatchSpec& batch_spec, const LossConfig& loss,
                    const TrainSchedule& sched) {
    if (ds.items.empty()) throw std::invalid_argument("finetune: empty dataset");
    loss.validate();
    if (sched.finetune_lr < 0.0)
        throw std::invalid_argument("finetune: negative learning rate");
    BatchSpec spec = batch_spec;
    spec.batch_size = sched.batch_size;
    run_epochs(ds, ckpt, spec, loss, sched.epochs,
               [&sched](int) { return sched.finetune_lr; }, sched.seed);
    return ckpt;
}

}  // namespace sbir
