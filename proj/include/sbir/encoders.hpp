#pragma once

#include <random>
#include <unordered_map>

#include "sbir/ops.hpp"
#include "sbir/tensor.hpp"

namespace sbir {

enum class EmbeddingPool { Global1x1, Spatial2x2 };

/// Small residual CNN with a dual head: classification from 1x1 global
/// pooling, embedding from 1x1 or 2x2 adaptive pooling of the same final
/// feature maps. Downsampling between stages is a 2x2 average pool so the
/// body commutes exactly with horizontal mirroring.
struct CnnEncoderConfig {
    std::vector<int> stage_channels{16, 32, 64};
    int blocks_per_stage = 1;
    int input_channels = 1;
    int input_h = 32;
    int input_w = 32;
    int num_classes = 10;
    EmbeddingPool embedding_pool = EmbeddingPool::Global1x1;

    void validate() const;
    int embedding_dim() const;
    // Spatial size of the final feature map (input halved between stages).
    std::pair<int, int> final_feature_size() const;
};

struct VitEncoderConfig {
    int patch_size = 8;
    int model_dim = 32;
    int num_heads = 4;
    int depth = 2;
    int input_channels = 1;
    int input_h = 32;
    int input_w = 32;
    int num_classes = 10;

    void validate() const;
    int num_patches() const { return (input_h / patch_size) * (input_w / patch_size); }
    int num_tokens() const { return num_patches() + 1; }
    int embedding_dim() const { return model_dim; }
};

struct EncoderOutput {
    Tensor embedding;  // not L2-normalized; Euclidean distance downstream
    Tensor logits;
};

/// Ordered, named parameter set; order is the checkpoint/optimizer order.
class NamedParams {
public:
    Tensor& add(const std::string& name, Tensor t);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    size_t size() const { return items_.size(); }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<Tensor> tensors() const;
    void zero_all_grads();

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, size_t> index_;
};

NamedParams init_cnn_params(const CnnEncoderConfig& config, std::uint64_t seed);
NamedParams init_vit_params(const VitEncoderConfig& config, std::uint64_t seed);

EncoderOutput cnn_forward(const NamedParams& params, const CnnEncoderConfig& config,
                          const Tensor& image);

/// If `attention_probs` is given, the per-layer softmax attention matrices
/// ([heads*tokens x tokens] each) are appended to it.
EncoderOutput vit_forward(const NamedParams& params, const VitEncoderConfig& config,
                          const Tensor& image,
                          std::vector<Tensor>* attention_probs = nullptr);

/// Seeded standard-normal draws (Box-Muller over mt19937_64), used so that
/// initialization is reproducible independent of the standard library.
Array normal_array(std::int64_t n, double stddev, std::mt19937_64& rng);

}  // namespace sbir
