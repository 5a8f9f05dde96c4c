#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "paps/common.hpp"
#include "paps/tensor.hpp"

namespace paps {

enum class NormMode {
    PerChannel,  // per-channel stats over the spatial extent (batch-style at batch 1)
    Group,       // grouped channels (toy-mode switch for batch-size-1 runs)
};

struct ModelConfig;

// Registry of named learnable tensors. Names are hierarchical ("backbone.stem1.w").
class ParamStore {
public:
    Tensor create(const std::string& name, std::vector<int> shape, std::function<double(Rng&)> init,
                  Rng& rng);
    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const;
    const std::map<std::string, Tensor>& items() const { return params_; }
    size_t total_elements() const;

    void zero_grad();
    void set_requires_grad_all(bool rg);
    // Applies rg to every parameter whose name starts with prefix; returns count.
    int set_requires_grad_prefix(const std::string& prefix, bool rg);
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;

private:
    std::map<std::string, Tensor> params_;
};

// Weight initializers.
std::function<double(Rng&)> init_he(int fan_in);
std::function<double(Rng&)> init_normal(double stddev);
std::function<double(Rng&)> init_const(double v);

int norm_groups_for(NormMode mode, int channels);

// Convolution + normalization + optional ReLU.
struct ConvUnit {
    Tensor w, b, gamma, beta;
    ConvSpec spec;
    int groups_norm = 1;
    bool use_norm = true;
    bool use_relu = true;

    Tensor operator()(const Tensor& x) const;
};

ConvUnit make_conv(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c, int k,
                   const ConvSpec& spec, NormMode norm, bool use_norm = true, bool use_relu = true);

// 3x3 depthwise-separable convolution: depthwise (optionally atrous) followed by a
// pointwise projection, each with norm+ReLU.
struct SepConv {
    ConvUnit depthwise;
    ConvUnit pointwise;
    Tensor operator()(const Tensor& x) const { return pointwise(depthwise(x)); }
};

SepConv make_sep_conv(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c,
                      NormMode norm, int dil_h = 1, int dil_w = 1, int stride = 1);

// Plain 1x1 projection without norm/activation (logit layers).
ConvUnit make_proj(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c);

}  // namespace paps
