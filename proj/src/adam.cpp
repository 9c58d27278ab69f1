#include "sbir/adam.hpp"

#include <cmath>

namespace sbir {

AdamState AdamState::for_params(const std::vector<Tensor>& params, double beta1,
                                double beta2, double eps) {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
        s.m.push_back(Array::Zero(p.numel()));
        s.v.push_back(Array::Zero(p.numel()));
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (lr <= 0.0) throw std::invalid_argument("adam_step: learning rate must be positive");
    if (params.size() != state.m.size())
        throw std::invalid_argument("adam_step: state/parameter count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        if (state.m[i].size() != p.numel())
            throw std::invalid_argument("adam_step: moment/parameter shape mismatch");
        if (!p.has_grad()) {
            // Zero gradient still advances the moment decay.
            state.m[i] *= state.beta1;
            state.v[i] *= state.beta2;
            continue;
        }
        const Array& g = p.grad();
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.square();
        Array m_hat = state.m[i] / bc1;
        Array v_hat = state.v[i] / bc2;
        p.mutable_values() -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
}

}  // namespace sbir
