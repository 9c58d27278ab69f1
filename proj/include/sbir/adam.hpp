#pragma once

#include "sbir/tensor.hpp"

namespace sbir {

/// Per-parameter first/second moment buffers plus the shared step counter.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Array> m;
    std::vector<Array> v;

    static AdamState for_params(const std::vector<Tensor>& params,
                                double beta1 = 0.9, double beta2 = 0.999,
                                double eps = 1e-8);
};

/// One bias-corrected Adam update. Parameters without a live gradient are
/// treated as having zero gradient. Deterministic given inputs.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

}  // namespace sbir
