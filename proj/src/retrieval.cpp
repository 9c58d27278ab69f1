#include "sbir/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace sbir {

void EmbeddingIndex::validate() const {
    if (static_cast<Eigen::Index>(ids.size()) != embeddings.rows())
        throw std::invalid_argument("EmbeddingIndex: id/row count mismatch");
    if (categories.size() != ids.size())
        throw std::invalid_argument("EmbeddingIndex: category count mismatch");
    std::unordered_set<std::uint64_t> seen(ids.begin(), ids.end());
    if (seen.size() != ids.size())
        throw std::invalid_argument("EmbeddingIndex: duplicate photo ids");
    for (const auto& [a, b] : mirror_map) {
        auto it = mirror_map.find(b);
        if (it == mirror_map.end() || it->second != a)
            throw std::invalid_argument("EmbeddingIndex: mirror map not symmetric");
    }
}

std::vector<RankedHit> knn(const EmbeddingIndex& index, const Eigen::VectorXd& query,
                           int k) {
    const int n = index.size();
    if (k < 1 || k > n) throw std::invalid_argument("knn: k out of range");
    if (query.size() != index.embeddings.cols())
        throw std::invalid_argument("knn: dimension mismatch");
    std::vector<RankedHit> hits(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        hits[static_cast<size_t>(i)] = {
            index.ids[static_cast<size_t>(i)],
            (index.embeddings.row(i).transpose() - query).norm()};
    }
    auto cmp = [](const RankedHit& a, const RankedHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.photo_id < b.photo_id;
    };
    std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), cmp);
    hits.resize(static_cast<size_t>(k));
    return hits;
}

double recall_at_k(const std::vector<RetrievalResult>& results, int k) {
    if (results.empty()) throw std::invalid_argument("recall_at_k: no results");
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    int hit = 0;
    for (const RetrievalResult& r : results) {
        const int top = std::min<int>(k, static_cast<int>(r.ranked.size()));
        for (int i = 0; i < top; ++i)
            if (r.ranked[static_cast<size_t>(i)].photo_id == r.ground_truth_id) {
                ++hit;
                break;
            }
    }
    return static_cast<double>(hit) / static_cast<double>(results.size());
}

namespace {

bool ground_truth_at_rank2(const RetrievalResult& r) {
    return r.ranked.size() >= 2 && r.ranked[1].photo_id == r.ground_truth_id;
}

}  // namespace

double flip_confusion_rate(const std::vector<RetrievalResult>& results,
                           const EmbeddingIndex& index) {
    if (index.mirror_map.empty())
        throw std::invalid_argument("flip_confusion_rate: index has no mirror map");
    if (results.empty()) throw std::invalid_argument("flip_confusion_rate: no results");
    int confused = 0;
    for (const RetrievalResult& r : results) {
        if (!ground_truth_at_rank2(r)) continue;
        auto it = index.mirror_map.find(r.ground_truth_id);
        if (it != index.mirror_map.end() && it->second == r.ranked[0].photo_id)
            ++confused;
    }
    return static_cast<double>(confused) / static_cast<double>(results.size());
}

double category_mismatch_rate(const std::vector<RetrievalResult>& results) {
    if (results.empty()) throw std::invalid_argument("category_mismatch_rate: no results");
    int mismatched = 0;
    for (const RetrievalResult& r : results)
        if (ground_truth_at_rank2(r) && !r.ranked_categories.empty() &&
            r.ranked_categories[0] != r.query_category)
            ++mismatched;
    return static_cast<double>(mismatched) / static_cast<double>(results.size());
}

double improvement_percentage(int baseline_error_count, int new_error_count) {
    if (baseline_error_count <= 0)
        throw std::invalid_argument("improvement_percentage: baseline count must be > 0");
    return 100.0 * static_cast<double>(baseline_error_count - new_error_count) /
           static_cast<double>(baseline_error_count);
}

RetrievalReport evaluate(const EmbeddingIndex& index,
                         const std::vector<std::uint64_t>& query_ids,
                         const Eigen::MatrixXd& query_embeddings,
                         const std::vector<std::uint64_t>& ground_truth_ids,
                         const std::vector<int>& query_categories,
                         const std::vector<int>& ks, int keep_top_k) {
    index.validate();
    const size_t q = query_ids.size();
    if (static_cast<size_t>(query_embeddings.rows()) != q ||
        ground_truth_ids.size() != q || query_categories.size() != q)
        throw std::invalid_argument("evaluate: query columns must align");
    if (q == 0) throw std::invalid_argument("evaluate: empty query set");

    std::unordered_map<std::uint64_t, int> cat_of;
    for (size_t i = 0; i < index.ids.size(); ++i)
        cat_of[index.ids[i]] = index.categories[i];

    int k = std::max(keep_top_k, 2);
    for (int kk : ks) k = std::max(k, kk);
    k = std::min(k, index.size());
    RetrievalReport report;
    report.num_queries = static_cast<int>(q);
    report.per_query.reserve(q);
    for (size_t i = 0; i < q; ++i) {
        RetrievalResult r;
        r.query_id = query_ids[i];
        r.ground_truth_id = ground_truth_ids[i];
        r.query_category = query_categories[i];
        r.ranked = knn(index, query_embeddings.row(static_cast<Eigen::Index>(i)).transpose(), k);
        for (const RankedHit& h : r.ranked)
            r.ranked_categories.push_back(cat_of.at(h.photo_id));
        report.per_query.push_back(std::move(r));
    }
    for (int kk : ks)
        report.recall_at[kk] = recall_at_k(report.per_query, kk);

    report.category_mismatch_rate = category_mismatch_rate(report.per_query);
    for (const RetrievalResult& r : report.per_query)
        if (ground_truth_at_rank2(r) && r.ranked_categories[0] != r.query_category)
            ++report.category_mismatch_count;
    if (!index.mirror_map.empty()) {
        report.flip_confusion_rate = flip_confusion_rate(report.per_query, index);
        for (const RetrievalResult& r : report.per_query) {
            if (!ground_truth_at_rank2(r)) continue;
            auto it = index.mirror_map.find(r.ground_truth_id);
            if (it != index.mirror_map.end() && it->second == r.ranked[0].photo_id)
                ++report.flip_confusion_count;
        }
    }
    return report;
}

}  // namespace sbir
