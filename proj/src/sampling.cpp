#include "sbir/sampling.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sbir {

namespace {

size_t pick_index(std::mt19937_64& rng, size_t n) { return rng() % n; }

bool coin(std::mt19937_64& rng) { return (rng() & 1) != 0; }

TripletSlot make_slot(const DatasetIndex& ds, size_t anchor, bool flip,
                      std::mt19937_64& rng) {
    TripletSlot slot;
    slot.anchor_item = anchor;
    slot.positive_sketch =
        static_cast<int>(pick_index(rng, ds.items[anchor].sketches.size()));
    slot.flip = flip;
    size_t neg = pick_index(rng, ds.items.size() - 1);
    if (neg >= anchor) ++neg;
    slot.negative_item = neg;
    slot.negative_sketch =
        static_cast<int>(pick_index(rng, ds.items[neg].sketches.size()));
    return slot;
}

// Preferential same-category negative for the category strategy: three out
// of four negatives come from the anchor's own category (the hard contrast
// the strategy exists for), the rest stay uniform so cross-category
// separation keeps receiving gradient during long category-only runs.
void assign_category_negative(const DatasetIndex& ds, TripletSlot& slot,
                              const std::vector<size_t>& category_members,
                              std::mt19937_64& rng) {
    const bool same_category = (rng() % 4) != 0;
    size_t neg = slot.anchor_item;
    if (same_category) {
        while (neg == slot.anchor_item)
            neg = category_members[pick_index(rng, category_members.size())];
    } else {
        neg = pick_index(rng, ds.items.size() - 1);
        if (neg >= slot.anchor_item) ++neg;
    }
    slot.negative_item = neg;
    slot.negative_sketch =
        static_cast<int>(pick_index(rng, ds.items[neg].sketches.size()));
}

std::vector<int> eligible_categories(const DatasetIndex& ds) {
    std::unordered_map<int, int> counts;
    for (const SampleRecord& s : ds.items) counts[s.category_id]++;
    std::vector<int> cats;
    for (int c = 0; c < ds.num_categories; ++c)
        if (counts[c] >= 2) cats.push_back(c);
    return cats;
}

int dup_pair_count(const BatchSpec& spec) {
    return static_cast<int>(spec.batch_size * spec.flip_duplicate_fraction) / 2;
}

}  // namespace

void BatchSpec::validate() const {
    if (batch_size < 2) throw std::invalid_argument("BatchSpec: batch_size must be >= 2");
    if (flip_duplicate_fraction <= 0.0 || flip_duplicate_fraction > 1.0)
        throw std::invalid_argument("BatchSpec: flip_duplicate_fraction must be in (0,1]");
    if (category_repeat_min < 2 || category_repeat_max > 5 ||
        category_repeat_min > category_repeat_max)
        throw std::invalid_argument("BatchSpec: repeat range must lie within [2,5]");
}

int TripletBatch::anchor_label(const DatasetIndex& ds, size_t i) const {
    return ds.items[slots[i].anchor_item].category_id;
}

int TripletBatch::negative_label(const DatasetIndex& ds, size_t i) const {
    return ds.items[slots[i].negative_item].category_id;
}

void TripletBatch::validate(const DatasetIndex& ds, int expected_size) const {
    if (static_cast<int>(slots.size()) != expected_size)
        throw std::logic_error("TripletBatch: wrong batch size");
    for (const TripletSlot& s : slots) {
        if (s.anchor_item >= ds.items.size() || s.negative_item >= ds.items.size())
            throw std::logic_error("TripletBatch: item index out of range");
        if (s.negative_item == s.anchor_item)
            throw std::logic_error("TripletBatch: negative matches anchor instance");
        if (s.positive_sketch < 0 ||
            s.positive_sketch >= static_cast<int>(ds.items[s.anchor_item].sketches.size()))
            throw std::logic_error("TripletBatch: positive sketch index out of range");
        if (s.negative_sketch < 0 ||
            s.negative_sketch >= static_cast<int>(ds.items[s.negative_item].sketches.size()))
            throw std::logic_error("TripletBatch: negative sketch index out of range");
    }
}

TripletBatch sample_baseline_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                   std::mt19937_64& rng) {
    spec.validate();
    if (ds.items.size() < 2)
        throw std::invalid_argument("sample_baseline_batch: need at least 2 instances");
    TripletBatch batch;
    batch.slots.reserve(static_cast<size_t>(spec.batch_size));
    for (int i = 0; i < spec.batch_size; ++i) {
        const size_t anchor = pick_index(rng, ds.items.size());
        batch.slots.push_back(make_slot(ds, anchor, coin(rng), rng));
    }
    return batch;
}

TripletBatch sample_flip_batch(const DatasetIndex& ds, const BatchSpec& spec,
                               std::mt19937_64& rng) {
    spec.validate();
    if (ds.items.size() < 2)
        throw std::invalid_argument("sample_flip_batch: need at least 2 instances");
    const int pairs = dup_pair_count(spec);
    if (pairs < 1)
        throw std::invalid_argument(
            "sample_flip_batch: batch too small for one duplicate pair");
    TripletBatch batch;
    batch.slots.reserve(static_cast<size_t>(spec.batch_size));
    for (int p = 0; p < pairs; ++p) {
        const size_t anchor = pick_index(rng, ds.items.size());
        TripletSlot unflipped = make_slot(ds, anchor, false, rng);
        TripletSlot flipped = make_slot(ds, anchor, true, rng);
        flipped.positive_sketch = unflipped.positive_sketch;
        batch.slots.push_back(unflipped);
        batch.slots.push_back(flipped);
    }
    for (int i = 2 * pairs; i < spec.batch_size; ++i) {
        const size_t anchor = pick_index(rng, ds.items.size());
        batch.slots.push_back(make_slot(ds, anchor, coin(rng), rng));
    }
    return batch;
}

int draw_category_repeat(const BatchSpec& spec, std::mt19937_64& rng) {
    const int span = spec.category_repeat_max - spec.category_repeat_min + 1;
    return spec.category_repeat_min + static_cast<int>(rng() % span);
}

TripletBatch sample_category_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                   std::mt19937_64& rng) {
    spec.validate();
    const std::vector<int> cats = eligible_categories(ds);
    if (cats.empty())
        throw std::invalid_argument(
            "sample_category_batch: no category with at least 2 instances");
    int capacity = 0;
    for (int cat : cats)
        capacity += std::min<int>(spec.category_repeat_max,
                                  static_cast<int>(ds.instances_of_category(cat).size()));
    if (spec.batch_size > capacity)
        throw std::invalid_argument(
            "sample_category_batch: batch size exceeds category capacity");
    TripletBatch batch;
    batch.slots.reserve(static_cast<size_t>(spec.batch_size));
    // Categories drawn without replacement within a round; across rounds the
    // per-batch count of each category is capped at the configured maximum.
    std::vector<int> pool;
    std::unordered_map<int, int> used;
    while (static_cast<int>(batch.slots.size()) < spec.batch_size) {
        if (pool.empty()) {
            pool = cats;
            std::shuffle(pool.begin(), pool.end(), rng);
        }
        const int cat = pool.back();
        pool.pop_back();
        const std::vector<size_t> members = ds.instances_of_category(cat);
        const int remaining = spec.batch_size - static_cast<int>(batch.slots.size());
        int k = draw_category_repeat(spec, rng);
        k = std::min({k, remaining, static_cast<int>(members.size()),
                      spec.category_repeat_max - used[cat]});
        if (k <= 0) continue;
        used[cat] += k;
        std::vector<size_t> chosen = members;
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(static_cast<size_t>(k));
        for (size_t anchor : chosen) {
            TripletSlot slot = make_slot(ds, anchor, coin(rng), rng);
            assign_category_negative(ds, slot, members, rng);
            batch.slots.push_back(slot);
        }
    }
    return batch;
}

TripletBatch sample_flip_category_batch(const DatasetIndex& ds, const BatchSpec& spec,
                                        std::mt19937_64& rng) {
    spec.validate();
    const int pairs = dup_pair_count(spec);
    if (pairs < 1)
        throw std::invalid_argument(
            "sample_flip_category_batch: batch too small for one duplicate pair");
    // Category grouping first, then some grouped slots are replaced by flip
    // twins of same-category slots. Replacement keeps every within-batch
    // category multiplicity untouched, so both strategy contracts hold.
    TripletBatch batch = sample_category_batch(ds, spec, rng);
    std::vector<size_t> order(batch.slots.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::unordered_set<size_t> pinned;  // anchors already serving as a pair
    std::vector<char> replaced(batch.slots.size(), 0);
    int made = 0;
    for (size_t src : order) {
        if (made == pairs) break;
        const TripletSlot& source = batch.slots[src];
        if (replaced[src] || pinned.count(source.anchor_item)) continue;
        const int cat = ds.items[source.anchor_item].category_id;
        std::vector<size_t> victims;
        for (size_t j = 0; j < batch.slots.size(); ++j)
            if (j != src && !replaced[j] &&
                ds.items[batch.slots[j].anchor_item].category_id == cat &&
                !pinned.count(batch.slots[j].anchor_item))
                victims.push_back(j);
        if (victims.empty()) continue;
        const size_t victim = victims[pick_index(rng, victims.size())];
        TripletSlot twin = source;
        twin.flip = !twin.flip;
        // Fresh negative for the twin, same-category like its source.
        assign_category_negative(ds, twin, ds.instances_of_category(cat), rng);
        pinned.insert(source.anchor_item);
        replaced[victim] = 1;
        batch.slots[victim] = twin;
        ++made;
    }
    if (made < pairs)
        throw std::invalid_argument(
            "sample_flip_category_batch: not enough room to duplicate instances");
    return batch;
}

TripletBatch sample_batch(const DatasetIndex& ds, const BatchSpec& spec,
                          std::mt19937_64& rng) {
    switch (spec.strategy) {
        case SamplingStrategy::Baseline: return sample_baseline_batch(ds, spec, rng);
        case SamplingStrategy::Flip: return sample_flip_batch(ds, spec, rng);
        case SamplingStrategy::Category: return sample_category_batch(ds, spec, rng);
        case SamplingStrategy::FlipCategory:
            return sample_flip_category_batch(ds, spec, rng);
    }
    throw std::logic_error("sample_batch: unknown strategy");
}

bool flip_duplication_holds(const TripletBatch& batch, int expected_pairs) {
    std::map<std::pair<size_t, int>, std::pair<int, int>> orientations;
    for (const TripletSlot& s : batch.slots) {
        auto& [unflipped, flipped] = orientations[{s.anchor_item, s.positive_sketch}];
        (s.flip ? flipped : unflipped)++;
    }
    int pairs = 0;
    for (const auto& [key, counts] : orientations)
        pairs += std::min(counts.first, counts.second);
    return pairs >= expected_pairs;
}

bool category_multiplicity_holds(const TripletBatch& batch, const DatasetIndex& ds,
                                 const BatchSpec& spec) {
    std::unordered_map<int, int> counts;
    for (size_t i = 0; i < batch.slots.size(); ++i)
        counts[batch.anchor_label(ds, i)]++;
    int below_min = 0;
    for (const auto& [cat, n] : counts) {
        if (n > spec.category_repeat_max) return false;
        if (n < spec.category_repeat_min) ++below_min;  // truncated final group
    }
    return below_min <= 1;
}

}  // namespace sbir
