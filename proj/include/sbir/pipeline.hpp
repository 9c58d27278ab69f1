#pragma once

#include "sbir/retrieval.hpp"
#include "sbir/training.hpp"

namespace sbir {

/// Sketch query ids pack the instance id and sketch slot together.
inline std::uint64_t sketch_query_id(std::uint64_t instance_id, int sketch_index) {
    return instance_id * 256 + static_cast<std::uint64_t>(sketch_index);
}
inline std::uint64_t instance_of_query(std::uint64_t query_id) { return query_id / 256; }

struct DatasetEmbeddings {
    std::vector<std::uint64_t> photo_ids;
    Eigen::MatrixXd photo_embeddings;
    std::vector<int> photo_categories;
    std::vector<std::uint64_t> sketch_ids;
    Eigen::MatrixXd sketch_embeddings;
    std::vector<std::uint64_t> sketch_ground_truth;  // paired photo id
    std::vector<int> sketch_categories;
};

/// Embeds every photo with the photo encoder and every sketch with the
/// sketch encoder (no gradients recorded).
DatasetEmbeddings embed_dataset(const Checkpoint& ckpt, const DatasetIndex& ds);

/// Photo index over the embeddings, with the dataset's mirror map attached.
EmbeddingIndex build_photo_index(const DatasetEmbeddings& embs, const DatasetIndex& ds);

/// embed + index + evaluate in one call.
RetrievalReport evaluate_checkpoint(const Checkpoint& ckpt, const DatasetIndex& ds,
                                    const std::vector<int>& ks);

}  // namespace sbir
