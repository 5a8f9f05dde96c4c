#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "paps/common.hpp"

namespace paps {

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward;

    size_t numel() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    }
};

}  // namespace detail

bool grad_enabled();

// Disables graph construction in scope (inference / frozen forward).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Shared handle to an autograd node. Values are immutable once an op produced
// them; parameters are leaves mutated only by the optimizer between steps.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
    static Tensor from_array(const Array3& a, bool requires_grad = false);

    bool defined() const { return n_ != nullptr; }
    const std::vector<int>& shape() const { return n_->shape; }
    int dim(int i) const { return n_->shape[i]; }
    size_t numel() const { return n_->numel(); }
    double* data() { return n_->val.data(); }
    const double* data() const { return n_->val.data(); }
    std::vector<double>& values() { return n_->val; }
    const std::vector<double>& values() const { return n_->val; }
    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool rg) { n_->requires_grad = rg; }
    const std::vector<double>& grad() const { return n_->grad; }
    void zero_grad() { n_->grad.assign(n_->val.size(), 0.0); }
    double item() const;
    Array3 to_array() const;  // rank-3 (or rank-2 as 1×H×W)

    // Backpropagate from a scalar tensor through the recorded graph.
    void backward();

    std::shared_ptr<detail::Node> node() const { return n_; }

private:
    std::shared_ptr<detail::Node> n_;
};

struct ConvSpec {
    int stride = 1;
    int dil_h = 1;
    int dil_w = 1;
    int groups = 1;
};

// Elementwise / arithmetic
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Shape plumbing (rank-3 tensors are {C,H,W})
Tensor concat_c(const std::vector<Tensor>& xs);
Tensor slice_c(const Tensor& x, int c0, int c1);
Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor flatten(const Tensor& x);

// Convolution with replicate (clamp) padding, "same" output at stride 1 and
// ceil(in/stride) output otherwise. Weight shape {out_c, in_c/groups, kh, kw}.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& spec = {});

Tensor avg_pool(const Tensor& x, int k);
Tensor upsample_bilinear(const Tensor& x, int factor);
Tensor global_avg_pool(const Tensor& x);              // {C,H,W} -> {C,1,1}
Tensor broadcast_hw(const Tensor& x, int h, int w);   // {C,1,1} -> {C,h,w}
Tensor mul_cvec(const Tensor& x, const Tensor& s);    // x{C,H,W} * s{C,1,1}
Tensor group_norm(const Tensor& x, int groups, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Vector / matrix helpers (refiner attention)
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b);  // {out,in}×{in}+{out}
Tensor matvec(const Tensor& m, const Tensor& v);                   // {N,D}×{D} -> {N}
Tensor vecmat(const Tensor& v, const Tensor& m);                   // {N}×{N,D} -> {D}
Tensor softmax(const Tensor& v);                                   // {N}
Tensor add_row_broadcast(const Tensor& m, const Tensor& v);        // {N,D} + 1⊗{D}
Tensor sum_all(const Tensor& x);                                   // scalar {1}
Tensor mul_plain(const Tensor& x, const Array3& m);                // broadcast over c if m.c==1

// Losses. Targets and masks are plain arrays (no gradient). All reduce to a
// scalar; empty supervision support yields an exact 0 with no gradient.
Tensor bce_with_logits(const Tensor& logits, const Array3& target, const Array3* valid = nullptr);
Tensor mse_loss(const Tensor& pred, const Array3& target, const Array3* valid = nullptr);
Tensor l1_masked(const Tensor& pred, const Array3& target, const Array3& valid);

// Weighted bootstrapped cross-entropy: per-pixel CE over {K,H,W} logits against
// class-id targets, per-pixel weights, then the mean of the hardest keep_frac
// fraction (by weighted loss) of non-ignored pixels.
Tensor ce_bootstrap(const Tensor& logits, const std::vector<uint16_t>& target,
                    const std::vector<double>& pixel_weight, double keep_frac,
                    const std::vector<uint8_t>* ignore = nullptr);

bool has_nan(const Tensor& t);

}  // namespace paps
