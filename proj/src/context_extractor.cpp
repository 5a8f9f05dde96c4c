#include "paps/context_extractor.hpp"

namespace paps {

ContextExtractor::ContextExtractor(ParamStore& ps, Rng& rng, const std::string& name, int in_c,
                                   NormMode norm)
    : in_c_(in_c) {
    wide_ = make_conv(ps, rng, name + ".wide", in_c, 128, 1, ConvSpec{}, norm);
    atrous_in_ = make_conv(ps, rng, name + ".atrous_in", in_c, 32, 1, ConvSpec{}, norm);
    atrous_a_ = make_sep_conv(ps, rng, name + ".atrous_a", 32, 32, norm, 1, 6);
    atrous_b_ = make_sep_conv(ps, rng, name + ".atrous_b", 32, 32, norm, 3, 1);
}

Tensor ContextExtractor::forward(const Tensor& x) const {
    if (x.shape().size() != 3 || x.dim(0) != in_c_)
        throw ShapeError("context extractor: expected " + std::to_string(in_c_) + " input channels, got " +
                         std::to_string(x.shape().size() == 3 ? x.dim(0) : -1));
    int h = x.dim(1), w = x.dim(2);
    Tensor wide = wide_(x);
    Tensor t = atrous_in_(x);
    Tensor a = atrous_a_(t);
    Tensor b = atrous_b_(t);
    Tensor a_pool = broadcast_hw(global_avg_pool(a), h, w);
    Tensor b_pool = broadcast_hw(global_avg_pool(b), h, w);
    return concat_c({wide, a, a_pool, b, b_pool});
}

}  // namespace paps
