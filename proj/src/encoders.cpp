#include "sbir/encoders.hpp"

#include <cmath>
#include <random>

namespace sbir {

void CnnEncoderConfig::validate() const {
    if (stage_channels.empty())
        throw std::invalid_argument("CnnEncoderConfig: need at least one stage");
    for (int c : stage_channels)
        if (c <= 0) throw std::invalid_argument("CnnEncoderConfig: non-positive channels");
    if (blocks_per_stage < 0)
        throw std::invalid_argument("CnnEncoderConfig: negative blocks_per_stage");
    if (input_channels <= 0 || input_h <= 0 || input_w <= 0 || num_classes <= 0)
        throw std::invalid_argument("CnnEncoderConfig: non-positive dimensions");
    int h = input_h, w = input_w;
    for (size_t s = 1; s < stage_channels.size(); ++s) {
        if (h % 2 != 0 || w % 2 != 0)
            throw std::invalid_argument(
                "CnnEncoderConfig: input size must halve evenly at every stage");
        h /= 2;
        w /= 2;
    }
    if (embedding_pool == EmbeddingPool::Spatial2x2 && (h < 2 || w < 2))
        throw std::invalid_argument(
            "CnnEncoderConfig: final feature map too small for 2x2 pooling");
}

std::pair<int, int> CnnEncoderConfig::final_feature_size() const {
    int h = input_h, w = input_w;
    for (size_t s = 1; s < stage_channels.size(); ++s) {
        h /= 2;
        w /= 2;
    }
    return {h, w};
}

int CnnEncoderConfig::embedding_dim() const {
    const int c_last = stage_channels.back();
    return embedding_pool == EmbeddingPool::Spatial2x2 ? 4 * c_last : c_last;
}

void VitEncoderConfig::validate() const {
    if (patch_size <= 0 || model_dim <= 0 || num_heads <= 0 || depth <= 0)
        throw std::invalid_argument("VitEncoderConfig: non-positive dimensions");
    if (input_h % patch_size != 0 || input_w % patch_size != 0)
        throw std::invalid_argument("VitEncoderConfig: patch size must divide input size");
    if (model_dim % num_heads != 0)
        throw std::invalid_argument("VitEncoderConfig: model_dim must divide by num_heads");
    if (input_channels <= 0 || num_classes <= 0)
        throw std::invalid_argument("VitEncoderConfig: non-positive dimensions");
}

Tensor& NamedParams::add(const std::string& name, Tensor t) {
    if (!index_.emplace(name, items_.size()).second)
        throw std::logic_error("NamedParams: duplicate name " + name);
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

const Tensor& NamedParams::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("NamedParams: no parameter " + name);
    return items_[it->second].second;
}

std::vector<Tensor> NamedParams::tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [name, t] : items_) out.push_back(t);
    return out;
}

void NamedParams::zero_all_grads() {
    for (auto& [name, t] : items_) t.zero_grad();
}

Array normal_array(std::int64_t n, double stddev, std::mt19937_64& rng) {
    Array out(n);
    auto uniform01 = [&rng]() {
        // (0, 1]; avoids log(0) in Box-Muller.
        return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    };
    for (std::int64_t i = 0; i < n; i += 2) {
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out(i) = r * std::cos(2.0 * M_PI * u2) * stddev;
        if (i + 1 < n) out(i + 1) = r * std::sin(2.0 * M_PI * u2) * stddev;
    }
    return out;
}

namespace {

Tensor he_conv(int c_out, int c_in, int k, std::mt19937_64& rng) {
    const double stddev = std::sqrt(2.0 / (c_in * k * k));
    return Tensor::from_array({c_out, c_in, k, k},
                              normal_array(static_cast<std::int64_t>(c_out) * c_in * k * k,
                                           stddev, rng),
                              /*requires_grad=*/true);
}

Tensor he_linear(int in_dim, int out_dim, std::mt19937_64& rng) {
    const double stddev = std::sqrt(2.0 / in_dim);
    return Tensor::from_array({in_dim, out_dim},
                              normal_array(static_cast<std::int64_t>(in_dim) * out_dim,
                                           stddev, rng),
                              /*requires_grad=*/true);
}

Tensor zeros_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }
Tensor ones_param(Shape shape) {
    return Tensor::full(std::move(shape), 1.0, true);
}

std::string stage_prefix(int s) { return "s" + std::to_string(s); }

}  // namespace

NamedParams init_cnn_params(const CnnEncoderConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    NamedParams p;
    int prev = config.input_channels;
    for (size_t s = 0; s < config.stage_channels.size(); ++s) {
        const int ch = config.stage_channels[s];
        const std::string sp = stage_prefix(static_cast<int>(s));
        p.add(sp + ".in.k", he_conv(ch, prev, 3, rng));
        p.add(sp + ".in.b", zeros_param({ch}));
        for (int j = 0; j < config.blocks_per_stage; ++j) {
            const std::string bp = sp + ".b" + std::to_string(j);
            p.add(bp + ".c1.k", he_conv(ch, ch, 3, rng));
            p.add(bp + ".c1.g", ones_param({ch}));
            p.add(bp + ".c1.b", zeros_param({ch}));
            p.add(bp + ".c2.k", he_conv(ch, ch, 3, rng));
            p.add(bp + ".c2.g", ones_param({ch}));
            p.add(bp + ".c2.b", zeros_param({ch}));
        }
        prev = ch;
    }
    p.add("fc.w", he_linear(config.stage_channels.back(), config.num_classes, rng));
    p.add("fc.b", zeros_param({config.num_classes}));
    return p;
}

EncoderOutput cnn_forward(const NamedParams& params, const CnnEncoderConfig& config,
                          const Tensor& image) {
    config.validate();
    if (image.rank() != 3 || image.dim(0) != config.input_channels ||
        image.dim(1) != config.input_h || image.dim(2) != config.input_w)
        throw std::invalid_argument("cnn_forward: image does not match config input size");

    Tensor x = image;
    int h = config.input_h, w = config.input_w;
    for (size_t s = 0; s < config.stage_channels.size(); ++s) {
        if (s > 0) {
            h /= 2;
            w /= 2;
            x = adaptive_avg_pool2d(x, h, w);
        }
        const std::string sp = stage_prefix(static_cast<int>(s));
        auto norm_conv = [&params](const Tensor& in, const std::string& prefix) {
            return instance_norm(conv2d(in, params.at(prefix + ".k"), 1, 1),
                                 params.at(prefix + ".g"), params.at(prefix + ".b"));
        };
        // The stage stem keeps raw conv magnitudes so image-level intensity
        // statistics survive to the pooled embedding; only the residual
        // branches are normalized.
        x = relu(add_channel_bias(conv2d(x, params.at(sp + ".in.k"), 1, 1),
                                  params.at(sp + ".in.b")));
        for (int j = 0; j < config.blocks_per_stage; ++j) {
            const std::string bp = sp + ".b" + std::to_string(j);
            Tensor y = relu(norm_conv(x, bp + ".c1"));
            y = norm_conv(y, bp + ".c2");
            x = relu(add(x, y));
        }
    }

    const int c_last = config.stage_channels.back();
    // Classification always reads the 1x1-pooled features.
    Tensor pooled1 = reshape(adaptive_avg_pool2d(x, 1, 1), {1, c_last});
    Tensor logits = flatten(add_rowwise(matmul(pooled1, params.at("fc.w")),
                                        params.at("fc.b")));
    Tensor embedding;
    if (config.embedding_pool == EmbeddingPool::Spatial2x2)
        embedding = flatten(adaptive_avg_pool2d(x, 2, 2));
    else
        embedding = flatten(pooled1);
    return {embedding, logits};
}

NamedParams init_vit_params(const VitEncoderConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    NamedParams p;
    const int d = config.model_dim;
    const int patch_dim = config.input_channels * config.patch_size * config.patch_size;
    const int tokens = config.num_tokens();
    const int hidden = 2 * d;
    p.add("patch.w", he_linear(patch_dim, d, rng));
    p.add("patch.b", zeros_param({d}));
    p.add("cls", Tensor::from_array({1, d}, normal_array(d, 0.02, rng), true));
    p.add("pos", Tensor::from_array({tokens, d},
                                    normal_array(static_cast<std::int64_t>(tokens) * d,
                                                 0.02, rng),
                                    true));
    for (int l = 0; l < config.depth; ++l) {
        const std::string lp = "l" + std::to_string(l);
        p.add(lp + ".ln1.g", ones_param({d}));
        p.add(lp + ".ln1.b", zeros_param({d}));
        for (const char* n : {"q", "k", "v", "o"}) {
            p.add(lp + ".w" + n, he_linear(d, d, rng));
            p.add(lp + ".b" + n, zeros_param({d}));
        }
        p.add(lp + ".ln2.g", ones_param({d}));
        p.add(lp + ".ln2.b", zeros_param({d}));
        p.add(lp + ".mlp.w1", he_linear(d, hidden, rng));
        p.add(lp + ".mlp.b1", zeros_param({hidden}));
        p.add(lp + ".mlp.w2", he_linear(hidden, d, rng));
        p.add(lp + ".mlp.b2", zeros_param({d}));
    }
    p.add("ln_f.g", ones_param({d}));
    p.add("ln_f.b", zeros_param({d}));
    p.add("head.emb.w", he_linear(d, d, rng));
    p.add("head.cls.w", he_linear(d, config.num_classes, rng));
    p.add("head.cls.b", zeros_param({config.num_classes}));
    return p;
}

namespace {

Tensor patchify(const Tensor& image, const VitEncoderConfig& cfg) {
    const int ps = cfg.patch_size;
    const int gh = cfg.input_h / ps, gw = cfg.input_w / ps;
    const int patch_dim = cfg.input_channels * ps * ps;
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<size_t>(gh) * gw * patch_dim);
    for (int py = 0; py < gh; ++py)
        for (int px = 0; px < gw; ++px)
            for (int ci = 0; ci < cfg.input_channels; ++ci)
                for (int u = 0; u < ps; ++u)
                    for (int v = 0; v < ps; ++v)
                        idx.push_back(
                            (static_cast<std::int64_t>(ci) * cfg.input_h + py * ps + u) *
                                cfg.input_w +
                            px * ps + v);
    return gather(image, {gh * gw, patch_dim}, std::move(idx));
}

}  // namespace

EncoderOutput vit_forward(const NamedParams& params, const VitEncoderConfig& config,
                          const Tensor& image, std::vector<Tensor>* attention_probs) {
    config.validate();
    if (image.rank() != 3 || image.dim(0) != config.input_channels ||
        image.dim(1) != config.input_h || image.dim(2) != config.input_w)
        throw std::invalid_argument("vit_forward: image does not match config input size");

    const int d = config.model_dim;
    const int heads = config.num_heads;
    const int dh = d / heads;

    Tensor patches = patchify(image, config);
    Tensor patch_emb = add_rowwise(matmul(patches, params.at("patch.w")),
                                   params.at("patch.b"));
    Tensor x = add(concat_rows({params.at("cls"), patch_emb}), params.at("pos"));

    for (int l = 0; l < config.depth; ++l) {
        const std::string lp = "l" + std::to_string(l);
        // Pre-norm attention block.
        Tensor h = layer_norm(x, params.at(lp + ".ln1.g"), params.at(lp + ".ln1.b"));
        Tensor q = add_rowwise(matmul(h, params.at(lp + ".wq")), params.at(lp + ".bq"));
        Tensor k = add_rowwise(matmul(h, params.at(lp + ".wk")), params.at(lp + ".bk"));
        Tensor v = add_rowwise(matmul(h, params.at(lp + ".wv")), params.at(lp + ".bv"));
        std::vector<Tensor> head_outs;
        for (int hi = 0; hi < heads; ++hi) {
            Tensor qh = slice_cols(q, hi * dh, (hi + 1) * dh);
            Tensor kh = slice_cols(k, hi * dh, (hi + 1) * dh);
            Tensor vh = slice_cols(v, hi * dh, (hi + 1) * dh);
            Tensor scores = scale(matmul(qh, transpose2d(kh)), 1.0 / std::sqrt(dh));
            Tensor probs = softmax(scores);
            if (attention_probs) attention_probs->push_back(probs);
            head_outs.push_back(matmul(probs, vh));
        }
        Tensor attn = add_rowwise(matmul(concat_cols(head_outs), params.at(lp + ".wo")),
                                  params.at(lp + ".bo"));
        x = add(x, attn);
        // Pre-norm MLP block.
        Tensor h2 = layer_norm(x, params.at(lp + ".ln2.g"), params.at(lp + ".ln2.b"));
        Tensor m = relu(add_rowwise(matmul(h2, params.at(lp + ".mlp.w1")),
                                    params.at(lp + ".mlp.b1")));
        m = add_rowwise(matmul(m, params.at(lp + ".mlp.w2")), params.at(lp + ".mlp.b2"));
        x = add(x, m);
    }

    Tensor cls = slice_rows(layer_norm(x, params.at("ln_f.g"), params.at("ln_f.b")), 0, 1);
    Tensor embedding = flatten(matmul(cls, params.at("head.emb.w")));
    Tensor logits = flatten(add_rowwise(matmul(cls, params.at("head.cls.w")),
                                        params.at("head.cls.b")));
    return {embedding, logits};
}

}  // namespace sbir
