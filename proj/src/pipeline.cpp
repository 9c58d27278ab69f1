#include "sbir/pipeline.hpp"

namespace sbir {

DatasetEmbeddings embed_dataset(const Checkpoint& ckpt, const DatasetIndex& ds) {
    if (ds.items.empty()) throw std::invalid_argument("embed_dataset: empty dataset");
    const int photo_dim = encoder_embedding_dim(ckpt.photo_config);
    const int sketch_dim = encoder_embedding_dim(ckpt.sketch_config);
    DatasetEmbeddings out;
    size_t num_sketches = 0;
    for (const SampleRecord& s : ds.items) num_sketches += s.sketches.size();
    out.photo_embeddings.resize(static_cast<Eigen::Index>(ds.items.size()), photo_dim);
    out.sketch_embeddings.resize(static_cast<Eigen::Index>(num_sketches), sketch_dim);

    Eigen::Index photo_row = 0, sketch_row = 0;
    for (const SampleRecord& s : ds.items) {
        EncoderOutput p = encoder_forward(ckpt.photo_params, ckpt.photo_config,
                                          s.photo.to_tensor());
        out.photo_ids.push_back(s.instance_id);
        out.photo_categories.push_back(s.category_id);
        out.photo_embeddings.row(photo_row++) =
            Eigen::Map<const Eigen::VectorXd>(p.embedding.values().data(), photo_dim);
        for (size_t k = 0; k < s.sketches.size(); ++k) {
            EncoderOutput q = encoder_forward(ckpt.sketch_params, ckpt.sketch_config,
                                              s.sketches[k].to_tensor());
            out.sketch_ids.push_back(sketch_query_id(s.instance_id, static_cast<int>(k)));
            out.sketch_ground_truth.push_back(s.instance_id);
            out.sketch_categories.push_back(s.category_id);
            out.sketch_embeddings.row(sketch_row++) =
                Eigen::Map<const Eigen::VectorXd>(q.embedding.values().data(), sketch_dim);
        }
    }
    return out;
}

EmbeddingIndex build_photo_index(const DatasetEmbeddings& embs, const DatasetIndex& ds) {
    EmbeddingIndex index;
    index.ids = embs.photo_ids;
    index.embeddings = embs.photo_embeddings;
    index.categories = embs.photo_categories;
    for (const SampleRecord& s : ds.items)
        if (s.mirror_sibling_id)
            index.mirror_map[s.instance_id] = *s.mirror_sibling_id;
    index.validate();
    return index;
}

RetrievalReport evaluate_checkpoint(const Checkpoint& ckpt, const DatasetIndex& ds,
                                    const std::vector<int>& ks) {
    DatasetEmbeddings embs = embed_dataset(ckpt, ds);
    EmbeddingIndex index = build_photo_index(embs, ds);
    return evaluate(index, embs.sketch_ids, embs.sketch_embeddings,
                    embs.sketch_ground_truth, embs.sketch_categories, ks);
}

}  // namespace sbir
