#pragma once

#include <functional>
#include <string>
#include <vector>

#include "argbd/model.hpp"

namespace argbd {

// Finite-difference verification of analytic gradients. Runs in 64-bit: the
// caller instantiates the checked computation with T = double, fills the
// ParamRef grad slots analytically, and the checker perturbs each entry with
// a central difference.
struct GradCheckReport {
    struct Entry {
        std::string name;
        double max_rel_err = 0.0;
        index_t checked = 0;
    };
    std::vector<Entry> entries;

    double worst() const {
        double w = 0.0;
        for (const Entry& e : entries) w = std::max(w, e.max_rel_err);
        return w;
    }
    bool passed(double tolerance) const { return worst() <= tolerance; }
};

// |analytic - numeric| relative to the larger magnitude; near-zero pairs
// compare absolutely.
inline double gradient_rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

// loss re-evaluates the computation with the current parameter values;
// params carry the analytic gradients to verify. max_entries_per_tensor
// limits the FD probes on large tensors (entries are taken at a fixed
// stride so coverage stays spread out); 0 checks everything.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  const std::vector<ParamRef<double>>& params,
                                  double step = 1e-6,
                                  index_t max_entries_per_tensor = 0) {
    GradCheckReport report;
    for (const ParamRef<double>& p : params) {
        GradCheckReport::Entry entry;
        entry.name = p.name;
        index_t stride = 1;
        if (max_entries_per_tensor > 0 && p.count > max_entries_per_tensor) {
            stride = p.count / max_entries_per_tensor;
        }
        for (index_t i = 0; i < p.count; i += stride) {
            const double saved = p.value[i];
            p.value[i] = saved + step;
            const double up = loss();
            p.value[i] = saved - step;
            const double down = loss();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            entry.max_rel_err = std::max(entry.max_rel_err, gradient_rel_err(p.grad[i], numeric));
            ++entry.checked;
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace argbd
