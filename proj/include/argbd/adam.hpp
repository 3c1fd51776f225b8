#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "argbd/model.hpp"

namespace argbd {

struct TrainConfig {
    int epochs = 100;
    double learning_rate = 1e-4;
    int batch_size = 4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool deterministic = false;
    double validation_fraction = 0.1;

    void validate() const {
        if (learning_rate <= 0) throw ConfigError("TrainConfig: learning rate must be > 0");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch size must be >= 1");
        if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    }
};

// Per-parameter Adam moments, laid out parallel to a ParamRef list.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::int64_t step = 0;

    template <typename Refs>
    void init_like(const Refs& refs) {
        m.clear();
        v.clear();
        for (const auto& r : refs) {
            m.emplace_back(static_cast<std::size_t>(r.count), T(0));
            v.emplace_back(static_cast<std::size_t>(r.count), T(0));
        }
        step = 0;
    }
};

// One bias-corrected Adam update over every parameter tensor. Gradients are
// read from the ParamRef grad slots.
template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, AdamState<T>& st, const TrainConfig& cfg) {
    cfg.validate();
    if (st.m.size() != params.size()) throw ShapeError("adam_step: state does not match params");
    ++st.step;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        ParamRef<T>& ref = params[p];
        if (static_cast<index_t>(st.m[p].size()) != ref.count) {
            throw ShapeError("adam_step: moment shape mismatch at " + ref.name);
        }
        T* m = st.m[p].data();
        T* v = st.v[p].data();
        for (index_t i = 0; i < ref.count; ++i) {
            const double g = static_cast<double>(ref.grad[i]);
            const double mi = b1 * m[i] + (1.0 - b1) * g;
            const double vi = b2 * v[i] + (1.0 - b2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double m_hat = mi / corr1;
            const double v_hat = vi / corr2;
            ref.value[i] -= static_cast<T>(cfg.learning_rate * m_hat /
                                           (std::sqrt(v_hat) + cfg.epsilon));
        }
    }
}

} // namespace argbd
