#pragma once

#include "sbir/dataset.hpp"

namespace sbir {

/// Generator settings for the procedural photo/sketch corpus. Each category
/// is a polygon family with an off-center marker dot so horizontal
/// orientation is semantically meaningful; a configurable fraction of
/// instances comes with an exactly mirrored sibling instance.
struct SynthSpec {
    int num_categories = 10;
    int instances_per_category = 20;
    int sketches_per_instance = 3;
    int image_h = 32;
    int image_w = 32;
    double mirror_fraction = 1.0;
    double stroke_jitter = 0.03;
    double background_noise = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic in spec.seed; mirror siblings share geometry exactly
/// (the sibling's noiseless photo raster is the columnwise mirror of the
/// original's) and always share the category.
DatasetIndex generate_dataset(const SynthSpec& spec);

/// Category-stratified split at instance granularity; mirror siblings stay
/// on the same side.
std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed);

}  // namespace sbir
