#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "paps/tensor.hpp"

namespace paps_test {

// Central finite-difference check of d(loss)/d(param) for the highest-gradient
// entries of `param`. `forward` must rebuild the graph and return the scalar loss.
// Returns the max relative error over the probed entries.
inline double fd_check_param(paps::Tensor param, const std::function<paps::Tensor()>& forward,
                             int n_probes = 8, double eps_scale = 1e-6) {
    param.zero_grad();
    paps::Tensor loss = forward();
    loss.backward();
    std::vector<double> analytic(param.grad().begin(), param.grad().end());

    std::vector<size_t> idx(analytic.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return std::abs(analytic[a]) > std::abs(analytic[b]); });

    double max_rel = 0.0;
    int probes = std::min<int>(n_probes, static_cast<int>(idx.size()));
    for (int i = 0; i < probes; ++i) {
        size_t j = idx[i];
        double orig = param.data()[j];
        double eps = eps_scale * std::max(1.0, std::abs(orig));
        param.data()[j] = orig + eps;
        double lp = forward().item();
        param.data()[j] = orig - eps;
        double lm = forward().item();
        param.data()[j] = orig;
        double fd = (lp - lm) / (2.0 * eps);
        double rel = std::abs(fd - analytic[j]) / std::max({std::abs(fd), std::abs(analytic[j]), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

inline paps::Tensor random_tensor(std::vector<int> shape, paps::Rng& rng, bool rg = true,
                                  double scl = 1.0) {
    paps::Tensor t = paps::Tensor::zeros(std::move(shape), rg);
    for (double& v : t.values()) v = rng.normal() * scl;
    return t;
}

inline paps::Array3 random_array(int c, int h, int w, paps::Rng& rng, double scl = 1.0) {
    paps::Array3 a(c, h, w);
    for (double& v : a.v) v = rng.normal() * scl;
    return a;
}

}  // namespace paps_test
