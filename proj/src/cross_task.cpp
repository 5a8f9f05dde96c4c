#include "paps/cross_task.hpp"

namespace paps {

Tensor GateFn::operator()(const Tensor& x) const {
    return sigmoid(expand(reduce(global_avg_pool(x))));
}

namespace {
GateFn make_gate(ParamStore& ps, Rng& rng, const std::string& name, int channels) {
    GateFn g;
    g.reduce = make_proj(ps, rng, name + ".reduce", channels, 64);
    g.expand = make_proj(ps, rng, name + ".expand", 64, channels);
    return g;
}
Tensor one_minus(const Tensor& g) {
    return sub(Tensor::full(g.shape(), 1.0), g);
}
}  // namespace

CrossTaskVariant cross_task_variant_from_string(const std::string& s) {
    if (s == "none" || s == "m61") return CrossTaskVariant::None;
    if (s == "concat" || s == "m62") return CrossTaskVariant::Concat;
    if (s == "sum" || s == "m63") return CrossTaskVariant::Sum;
    if (s == "self_only" || s == "m64") return CrossTaskVariant::SelfOnly;
    if (s == "per_input_self" || s == "m65") return CrossTaskVariant::PerInputSelf;
    if (s == "cross_only" || s == "m66") return CrossTaskVariant::CrossOnly;
    if (s == "full" || s == "m67") return CrossTaskVariant::Full;
    throw ConfigError("unknown cross-task variant: " + s);
}

std::string to_string(CrossTaskVariant v) {
    switch (v) {
        case CrossTaskVariant::None: return "none";
        case CrossTaskVariant::Concat: return "concat";
        case CrossTaskVariant::Sum: return "sum";
        case CrossTaskVariant::SelfOnly: return "self_only";
        case CrossTaskVariant::PerInputSelf: return "per_input_self";
        case CrossTaskVariant::CrossOnly: return "cross_only";
        case CrossTaskVariant::Full: return "full";
    }
    return "full";
}

CrossTaskModule::CrossTaskModule(ParamStore& ps, Rng& rng, const std::string& name,
                                 CrossTaskVariant variant, int channels, NormMode norm)
    : variant_(variant), channels_(channels) {
    (void)norm;
    switch (variant_) {
        case CrossTaskVariant::Full:
            g1_ = make_gate(ps, rng, name + ".g1", channels);
            g2_ = make_gate(ps, rng, name + ".g2", channels);
            g3_ = make_gate(ps, rng, name + ".g3", channels);
            break;
        case CrossTaskVariant::CrossOnly:
        case CrossTaskVariant::PerInputSelf:
            g1_ = make_gate(ps, rng, name + ".g1", channels);
            g2_ = make_gate(ps, rng, name + ".g2", channels);
            break;
        case CrossTaskVariant::SelfOnly:
            g3_ = make_gate(ps, rng, name + ".g3", channels);
            break;
        default:
            break;  // no gates
    }
}

Tensor CrossTaskModule::cross_attention(const Tensor& f_i, const Tensor& f_s, const Tensor& g1_of_fs,
                                        const Tensor& g2_of_fi) {
    return add(mul_cvec(f_i, one_minus(g1_of_fs)), mul_cvec(f_s, one_minus(g2_of_fi)));
}

Tensor CrossTaskModule::fuse_full_with_gates(const Tensor& f_i, const Tensor& f_s,
                                             const Tensor& g1_of_fs, const Tensor& g2_of_fi,
                                             const Tensor& g3_of_fr) {
    Tensor f_r = cross_attention(f_i, f_s, g1_of_fs, g2_of_fi);
    return mul_cvec(f_r, g3_of_fr);
}

CrossTaskModule::Output CrossTaskModule::fuse(const Tensor& f_i, const Tensor& f_s) const {
    if (f_i.shape() != f_s.shape()) throw ShapeError("cross-task: decoder feature shapes differ");
    if (f_i.dim(0) != channels_) throw ShapeError("cross-task: unexpected channel count");
    Output out;
    switch (variant_) {
        case CrossTaskVariant::Full: {
            Tensor f_r = cross_attention(f_i, f_s, g1_(f_s), g2_(f_i));
            Tensor f_o = mul_cvec(f_r, g3_(f_r));
            out.for_semantic = f_o;
            out.for_instance = f_o;
            break;
        }
        case CrossTaskVariant::Concat:
            out.for_semantic = f_i;
            out.for_instance = f_s;
            break;
        case CrossTaskVariant::Sum: {
            Tensor f_o = add(f_i, f_s);
            out.for_semantic = f_o;
            out.for_instance = f_o;
            break;
        }
        case CrossTaskVariant::SelfOnly: {
            Tensor f_r = add(f_i, f_s);
            Tensor f_o = mul_cvec(f_r, g3_(f_r));
            out.for_semantic = f_o;
            out.for_instance = f_o;
            break;
        }
        case CrossTaskVariant::PerInputSelf: {
            Tensor f_o = add(mul_cvec(f_i, g1_(f_i)), mul_cvec(f_s, g2_(f_s)));
            out.for_semantic = f_o;
            out.for_instance = f_o;
            break;
        }
        case CrossTaskVariant::CrossOnly: {
            Tensor f_o = cross_attention(f_i, f_s, g1_(f_s), g2_(f_i));
            out.for_semantic = f_o;
            out.for_instance = f_o;
            break;
        }
        case CrossTaskVariant::None: {
            Tensor z = Tensor::zeros(f_i.shape());
            out.for_semantic = z;
            out.for_instance = z;
            break;
        }
    }
    return out;
}

}  // namespace paps
