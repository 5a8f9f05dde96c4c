#include "paps/nn.hpp"

#include <cmath>

namespace paps {

Tensor ParamStore::create(const std::string& name, std::vector<int> shape,
                          std::function<double(Rng&)> init, Rng& rng) {
    if (params_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    Tensor t = Tensor::zeros(std::move(shape), true);
    t.set_requires_grad(true);
    for (double& v : t.values()) v = init(rng);
    params_.emplace(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

bool ParamStore::has(const std::string& name) const { return params_.count(name) > 0; }

size_t ParamStore::total_elements() const {
    size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : params_) {
        Tensor copy = t;
        copy.zero_grad();
    }
}

void ParamStore::set_requires_grad_all(bool rg) {
    for (auto& [name, t] : params_) {
        Tensor copy = t;
        copy.set_requires_grad(rg);
    }
}

int ParamStore::set_requires_grad_prefix(const std::string& prefix, bool rg) {
    int n = 0;
    for (auto& [name, t] : params_) {
        if (name.rfind(prefix, 0) == 0) {
            Tensor copy = t;
            copy.set_requires_grad(rg);
            ++n;
        }
    }
    return n;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, t] : params_)
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    return out;
}

std::function<double(Rng&)> init_he(int fan_in) {
    double stddev = std::sqrt(2.0 / std::max(1, fan_in));
    return [stddev](Rng& rng) { return rng.normal() * stddev; };
}

std::function<double(Rng&)> init_normal(double stddev) {
    return [stddev](Rng& rng) { return rng.normal() * stddev; };
}

std::function<double(Rng&)> init_const(double v) {
    return [v](Rng&) { return v; };
}

int norm_groups_for(NormMode mode, int channels) {
    if (mode == NormMode::PerChannel) return channels;
    int g = std::min(8, channels);
    while (g > 1 && channels % g != 0) --g;
    return g;
}

Tensor ConvUnit::operator()(const Tensor& x) const {
    Tensor y = conv2d(x, w, b, spec);
    if (use_norm) y = group_norm(y, groups_norm, gamma, beta);
    if (use_relu) y = relu(y);
    return y;
}

ConvUnit make_conv(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c, int k,
                   const ConvSpec& spec, NormMode norm, bool use_norm, bool use_relu) {
    ConvUnit u;
    u.spec = spec;
    int icg = in_c / spec.groups;
    u.w = ps.create(name + ".w", {out_c, icg, k, k}, init_he(icg * k * k), rng);
    u.b = ps.create(name + ".b", {out_c}, init_const(0.0), rng);
    u.use_norm = use_norm;
    u.use_relu = use_relu;
    if (use_norm) {
        u.groups_norm = norm_groups_for(norm, out_c);
        u.gamma = ps.create(name + ".g", {out_c}, init_const(1.0), rng);
        u.beta = ps.create(name + ".beta", {out_c}, init_const(0.0), rng);
    }
    return u;
}

SepConv make_sep_conv(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c,
                      NormMode norm, int dil_h, int dil_w, int stride) {
    SepConv s;
    ConvSpec dspec;
    dspec.groups = in_c;
    dspec.dil_h = dil_h;
    dspec.dil_w = dil_w;
    dspec.stride = stride;
    s.depthwise = make_conv(ps, rng, name + ".dw", in_c, in_c, 3, dspec, norm);
    s.pointwise = make_conv(ps, rng, name + ".pw", in_c, out_c, 1, ConvSpec{}, norm);
    return s;
}

ConvUnit make_proj(ParamStore& ps, Rng& rng, const std::string& name, int in_c, int out_c) {
    ConvUnit u;
    u.spec = ConvSpec{};
    u.w = ps.create(name + ".w", {out_c, in_c, 1, 1}, init_he(in_c), rng);
    u.b = ps.create(name + ".b", {out_c}, init_const(0.0), rng);
    u.use_norm = false;
    u.use_relu = false;
    return u;
}

}  // namespace paps
