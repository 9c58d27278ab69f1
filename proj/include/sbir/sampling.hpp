#pragma once

#include <random>

#include "sbir/dataset.hpp"

namespace sbir {

enum class SamplingStrategy { Baseline, Flip, Category, FlipCategory };

struct BatchSpec {
    int batch_size = 128;
    SamplingStrategy strategy = SamplingStrategy::Baseline;
    double flip_duplicate_fraction = 0.5;  // fraction of slots used by dup pairs
    int category_repeat_min = 2;
    int category_repeat_max = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One triplet: anchor photo, positive sketch of the same instance,
/// negative sketch of a different instance. `flip` applies jointly to the
/// whole triplet (the paper's only augmentation).
struct TripletSlot {
    size_t anchor_item = 0;    // index into DatasetIndex::items; also positive's
    int positive_sketch = 0;   // sketch index within the anchor instance
    size_t negative_item = 0;
    int negative_sketch = 0;
    bool flip = false;
};

struct TripletBatch {
    std::vector<TripletSlot> slots;

    int anchor_label(const DatasetIndex& ds, size_t i) const;
    int negative_label(const DatasetIndex& ds, size_t i) const;

    /// Checks the cross-strategy invariants: exact size, positive matches
    /// anchor instance, negative is a different instance, joint flip.
    void validate(const DatasetIndex& ds, int expected_size) const;
};

TripletBatch sample_baseline_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                   std::mt19937_64& rng);
TripletBatch sample_flip_batch(const DatasetIndex& ds, const BatchSpec& spec,
                               std::mt19937_64& rng);
TripletBatch sample_category_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                   std::mt19937_64& rng);
TripletBatch sample_flip_category_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                        std::mt19937_64& rng);

/// Dispatch on spec.strategy.
TripletBatch sample_batch(const DatasetIndex& ds, const BatchSpec& spec,
                          std::mt19937_64& rng);

/// The category sampler's group-size draw, Uniform{repeat_min..repeat_max}.
int draw_category_repeat(const BatchSpec& spec, std::mt19937_64& rng);

/// Instances that appear in both orientations (flip duplication contract):
/// returns anchor_item -> (has unflipped slot, has flipped slot).
bool flip_duplication_holds(const TripletBatch& batch, int expected_pairs);

/// Category sampler contract: every present category occurs within
/// [repeat_min, repeat_max] times, except at most one truncated group.
bool category_multiplicity_holds(const TripletBatch& batch, const DatasetIndex& ds,
                                 const BatchSpec& spec);

}  // namespace sbir
