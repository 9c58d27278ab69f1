#include "sbir/dataset.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sbir {

Raster Raster::filled(int h, int w, double value) {
    Raster r;
    r.h = h;
    r.w = w;
    r.pixels.assign(static_cast<size_t>(h) * w, value);
    return r;
}

Raster Raster::mirrored() const {
    Raster out = filled(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = at(y, w - 1 - x);
    return out;
}

Tensor Raster::to_tensor(bool flip) const {
    if (!flip) return Tensor::from_values({1, h, w}, pixels);
    return mirrored().to_tensor(false);
}

void DatasetIndex::validate() const {
    std::unordered_set<std::uint64_t> ids;
    std::unordered_set<int> cats;
    for (const SampleRecord& s : items) {
        if (s.sketches.empty())
            throw std::invalid_argument("dataset: every instance needs at least one sketch");
        if (!ids.insert(s.instance_id).second)
            throw std::invalid_argument("dataset: duplicate instance id");
        if (s.category_id < 0 || s.category_id >= num_categories)
            throw std::invalid_argument("dataset: category id out of range");
        cats.insert(s.category_id);
        if (s.mirror_sibling_id) {
            const SampleRecord& sib = by_instance(*s.mirror_sibling_id);
            if (!sib.mirror_sibling_id || *sib.mirror_sibling_id != s.instance_id)
                throw std::invalid_argument("dataset: mirror map not symmetric");
        }
    }
}

const SampleRecord& DatasetIndex::by_instance(std::uint64_t instance_id) const {
    for (const SampleRecord& s : items)
        if (s.instance_id == instance_id) return s;
    throw std::out_of_range("dataset: unknown instance id");
}

std::vector<size_t> DatasetIndex::instances_of_category(int category_id) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < items.size(); ++i)
        if (items[i].category_id == category_id) out.push_back(i);
    return out;
}

}  // namespace sbir
