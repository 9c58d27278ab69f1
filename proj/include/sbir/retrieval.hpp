#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sbir {

/// Photo embeddings searched by exact Euclidean k-NN.
struct EmbeddingIndex {
    std::vector<std::uint64_t> ids;
    Eigen::MatrixXd embeddings;  // N x D, row i belongs to ids[i]
    std::vector<int> categories;
    // photo id -> id of its mirrored counterpart (synthetic data only)
    std::unordered_map<std::uint64_t, std::uint64_t> mirror_map;

    void validate() const;
    int size() const { return static_cast<int>(ids.size()); }
    int dim() const { return static_cast<int>(embeddings.cols()); }
};

struct RankedHit {
    std::uint64_t photo_id;
    double distance;
};

struct RetrievalResult {
    std::uint64_t query_id = 0;
    std::uint64_t ground_truth_id = 0;
    int query_category = 0;
    std::vector<RankedHit> ranked;  // ascending distance, ties by ascending id
    std::vector<int> ranked_categories;
};

struct RetrievalReport {
    std::map<int, double> recall_at;  // k -> recall
    std::optional<double> flip_confusion_rate;
    double category_mismatch_rate = 0.0;
    // raw counts so reports can be compared
    int num_queries = 0;
    int flip_confusion_count = 0;
    int category_mismatch_count = 0;
    std::vector<RetrievalResult> per_query;
};

/// Exact k smallest Euclidean distances, ties broken by ascending photo id.
std::vector<RankedHit> knn(const EmbeddingIndex& index, const Eigen::VectorXd& query,
                           int k);

double recall_at_k(const std::vector<RetrievalResult>& results, int k);

/// Fraction of queries whose ground truth sits at rank 2 while rank 1 is
/// the ground truth's mirror counterpart.
double flip_confusion_rate(const std::vector<RetrievalResult>& results,
                           const EmbeddingIndex& index);

/// Fraction of queries whose rank-1 category differs from the query's,
/// among queries with the ground truth at rank 2.
double category_mismatch_rate(const std::vector<RetrievalResult>& results);

/// 100 * (baseline - current) / baseline; negative when errors grew.
double improvement_percentage(int baseline_error_count, int new_error_count);

/// Runs every query against the index and assembles the full report.
/// `ks` chooses which recall@k values to record.
RetrievalReport evaluate(const EmbeddingIndex& index,
                         const std::vector<std::uint64_t>& query_ids,
                         const Eigen::MatrixXd& query_embeddings,
                         const std::vector<std::uint64_t>& ground_truth_ids,
                         const std::vector<int>& query_categories,
                         const std::vector<int>& ks, int keep_top_k = 10);

}  // namespace sbir
