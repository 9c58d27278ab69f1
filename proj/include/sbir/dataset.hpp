#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbir/tensor.hpp"

namespace sbir {

/// Grayscale raster, row-major, intensities in [0, 1].
struct Raster {
    int h = 0;
    int w = 0;
    std::vector<double> pixels;

    double& at(int y, int x) { return pixels[static_cast<size_t>(y) * w + x]; }
    double at(int y, int x) const { return pixels[static_cast<size_t>(y) * w + x]; }

    static Raster filled(int h, int w, double value = 0.0);
    Raster mirrored() const;  // horizontal flip (columns reversed)
    Tensor to_tensor(bool flip = false) const;  // [1 x h x w]
};

/// One photo with its matching sketches.
struct SampleRecord {
    std::uint64_t instance_id = 0;
    int category_id = 0;
    Raster photo;
    std::vector<Raster> sketches;
    std::optional<std::uint64_t> mirror_sibling_id;
    // Pre-noise render, kept by the synthetic generator for the
    // mirror-exactness checks; empty for ingested data.
    std::optional<Raster> noiseless_photo;
};

struct DatasetIndex {
    std::vector<SampleRecord> items;
    int num_categories = 0;
    std::string split_tag = "full";

    void validate() const;
    const SampleRecord& by_instance(std::uint64_t instance_id) const;
    std::vector<size_t> instances_of_category(int category_id) const;
};

}  // namespace sbir
