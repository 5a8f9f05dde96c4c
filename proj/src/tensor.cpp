#include "paps/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace paps {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

size_t numel_of(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

NodePtr new_node(std::vector<int> shape) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val.resize(numel_of(n->shape));
    return n;
}

bool track(const std::initializer_list<const Tensor*>& inputs) {
    if (!g_grad_enabled) return false;
    for (const Tensor* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

void attach(const NodePtr& out, std::initializer_list<const Tensor*> inputs,
            std::function<void()> backward) {
    out->requires_grad = true;
    for (const Tensor* t : inputs)
        if (t->defined()) out->parents.push_back(t->node());
    out->backward = std::move(backward);
}

void check_rank3(const Tensor& x, const char* what) {
    if (x.shape().size() != 3) throw ShapeError(std::string(what) + ": expected rank-3 tensor");
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto n = new_node(std::move(shape));
    n->requires_grad = requires_grad && g_grad_enabled;
    return Tensor(n);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), value);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    if (numel_of(n->shape) != data.size()) throw ShapeError("Tensor::from: data size mismatch");
    n->val = std::move(data);
    n->requires_grad = requires_grad && g_grad_enabled;
    return Tensor(n);
}

Tensor Tensor::from_array(const Array3& a, bool requires_grad) {
    return from({a.c, a.h, a.w}, a.v, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on non-scalar tensor");
    return n_->val[0];
}

Array3 Tensor::to_array() const {
    const auto& s = n_->shape;
    Array3 a;
    if (s.size() == 3) {
        a.c = s[0];
        a.h = s[1];
        a.w = s[2];
    } else if (s.size() == 2) {
        a.c = 1;
        a.h = s[0];
        a.w = s[1];
    } else {
        throw ShapeError("to_array: expected rank-2 or rank-3 tensor");
    }
    a.v = n_->val;
    return a;
}

void Tensor::backward() {
    if (!n_ || n_->numel() != 1) throw ShapeError("backward requires a scalar tensor");
    if (!n_->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(n_.get(), 0);
    visited.insert(n_.get());
    while (!stack.empty()) {
        auto& top = stack.back();
        Node* node = top.first;
        if (top.second < node->parents.size()) {
            Node* p = node->parents[top.second++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* node : order) node->ensure_grad();
    n_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward) (*it)->backward();
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("add: shape mismatch");
    auto out = new_node(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out->val.data();
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    if (track({&a, &b})) {
        Node* self = out.get();
        Node* na = a.node().get();
        Node* nb = b.node().get();
        attach(out, {&a, &b}, [self, na, nb, n] {
            if (na->requires_grad) {
                na->ensure_grad();
                for (size_t i = 0; i < n; ++i) na->grad[i] += self->grad[i];
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                for (size_t i = 0; i < n; ++i) nb->grad[i] += self->grad[i];
            }
        });
    }
    return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("sub: shape mismatch");
    auto out = new_node(a.shape());
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) out->val[i] = a.data()[i] - b.data()[i];
    if (track({&a, &b})) {
        Node* self = out.get();
        Node* na = a.node().get();
        Node* nb = b.node().get();
        attach(out, {&a, &b}, [self, na, nb, n] {
            if (na->requires_grad) {
                na->ensure_grad();
                for (size_t i = 0; i < n; ++i) na->grad[i] += self->grad[i];
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                for (size_t i = 0; i < n; ++i) nb->grad[i] -= self->grad[i];
            }
        });
    }
    return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("mul: shape mismatch");
    auto out = new_node(a.shape());
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) out->val[i] = a.data()[i] * b.data()[i];
    if (track({&a, &b})) {
        Node* self = out.get();
        Node* na = a.node().get();
        Node* nb = b.node().get();
        attach(out, {&a, &b}, [self, na, nb, n] {
            if (na->requires_grad) {
                na->ensure_grad();
                for (size_t i = 0; i < n; ++i) na->grad[i] += self->grad[i] * nb->val[i];
            }
            if (nb->requires_grad) {
                nb->ensure_grad();
                for (size_t i = 0; i < n; ++i) nb->grad[i] += self->grad[i] * na->val[i];
            }
        });
    }
    return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
    auto out = new_node(a.shape());
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) out->val[i] = a.data()[i] * s;
    if (track({&a})) {
        Node* self = out.get();
        Node* na = a.node().get();
        attach(out, {&a}, [self, na, n, s] {
            na->ensure_grad();
            for (size_t i = 0; i < n; ++i) na->grad[i] += self->grad[i] * s;
        });
    }
    return Tensor(out);
}

Tensor relu(const Tensor& a) {
    auto out = new_node(a.shape());
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) out->val[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    if (track({&a})) {
        Node* self = out.get();
        Node* na = a.node().get();
        attach(out, {&a}, [self, na, n] {
            na->ensure_grad();
            for (size_t i = 0; i < n; ++i)
                if (na->val[i] > 0.0) na->grad[i] += self->grad[i];
        });
    }
    return Tensor(out);
}

Tensor sigmoid(const Tensor& a) {
    auto out = new_node(a.shape());
    size_t n = out->val.size();
    for (size_t i = 0; i < n; ++i) {
        double x = a.data()[i];
        out->val[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    if (track({&a})) {
        Node* self = out.get();
        Node* na = a.node().get();
        attach(out, {&a}, [self, na, n] {
            na->ensure_grad();
            for (size_t i = 0; i < n; ++i) {
                double y = self->val[i];
                na->grad[i] += self->grad[i] * y * (1.0 - y);
            }
        });
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Shape plumbing

Tensor concat_c(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeError("concat_c: no inputs");
    int h = xs[0].dim(1), w = xs[0].dim(2), c = 0;
    for (const Tensor& x : xs) {
        check_rank3(x, "concat_c");
        if (x.dim(1) != h || x.dim(2) != w) throw ShapeError("concat_c: spatial dims mismatch");
        c += x.dim(0);
    }
    auto out = new_node({c, h, w});
    size_t plane = static_cast<size_t>(h) * w;
    size_t off = 0;
    for (const Tensor& x : xs) {
        size_t nx = x.numel();
        std::memcpy(out->val.data() + off, x.data(), nx * sizeof(double));
        off += nx;
    }
    bool rg = false;
    for (const Tensor& x : xs) rg = rg || x.requires_grad();
    if (g_grad_enabled && rg) {
        Node* self = out.get();
        std::vector<Node*> parents;
        for (const Tensor& x : xs) parents.push_back(x.node().get());
        out->requires_grad = true;
        for (const Tensor& x : xs) out->parents.push_back(x.node());
        out->backward = [self, parents, plane] {
            size_t off2 = 0;
            for (Node* p : parents) {
                size_t np = p->numel();
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (size_t i = 0; i < np; ++i) p->grad[i] += self->grad[off2 + i];
                }
                off2 += np;
            }
            (void)plane;
        };
    }
    return Tensor(out);
}

Tensor slice_c(const Tensor& x, int c0, int c1) {
    check_rank3(x, "slice_c");
    if (c0 < 0 || c1 > x.dim(0) || c0 >= c1) throw ShapeError("slice_c: bad channel range");
    int h = x.dim(1), w = x.dim(2);
    auto out = new_node({c1 - c0, h, w});
    size_t plane = static_cast<size_t>(h) * w;
    std::memcpy(out->val.data(), x.data() + c0 * plane, out->val.size() * sizeof(double));
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        size_t off = c0 * plane;
        size_t n = out->val.size();
        attach(out, {&x}, [self, nx, off, n] {
            nx->ensure_grad();
            for (size_t i = 0; i < n; ++i) nx->grad[off + i] += self->grad[i];
        });
    }
    return Tensor(out);
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
    if (numel_of(shape) != x.numel()) throw ShapeError("reshape: element count mismatch");
    auto out = new_node(std::move(shape));
    out->val = x.values();
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        size_t n = out->val.size();
        attach(out, {&x}, [self, nx, n] {
            nx->ensure_grad();
            for (size_t i = 0; i < n; ++i) nx->grad[i] += self->grad[i];
        });
    }
    return Tensor(out);
}

Tensor flatten(const Tensor& x) { return reshape(x, {static_cast<int>(x.numel())}); }

// ---------------------------------------------------------------------------
// Convolution

namespace {

struct ConvDims {
    int c_in, h_in, w_in;
    int c_out, icg, kh, kw;
    int h_out, w_out;
    int pad_h, pad_w;  // leading pad
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const ConvSpec& s) {
    ConvDims d{};
    d.c_in = x.dim(0);
    d.h_in = x.dim(1);
    d.w_in = x.dim(2);
    d.c_out = w.dim(0);
    d.icg = w.dim(1);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    if (d.icg * s.groups != d.c_in)
        throw ShapeError("conv2d: input channels " + std::to_string(d.c_in) + " incompatible with weight " +
                         std::to_string(d.icg) + "x" + std::to_string(s.groups) + " groups");
    if (d.c_out % s.groups != 0) throw ShapeError("conv2d: out channels not divisible by groups");
    d.h_out = (d.h_in + s.stride - 1) / s.stride;
    d.w_out = (d.w_in + s.stride - 1) / s.stride;
    int span_h = (d.kh - 1) * s.dil_h + 1;
    int span_w = (d.kw - 1) * s.dil_w + 1;
    int tot_h = std::max(0, (d.h_out - 1) * s.stride + span_h - d.h_in);
    int tot_w = std::max(0, (d.w_out - 1) * s.stride + span_w - d.w_in);
    d.pad_h = tot_h / 2;
    d.pad_w = tot_w / 2;
    return d;
}

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& spec) {
    check_rank3(x, "conv2d");
    if (w.shape().size() != 4) throw ShapeError("conv2d: weight must be rank-4");
    ConvDims d = conv_dims(x, w, spec);
    if (b.defined() && (b.shape().size() != 1 || b.dim(0) != d.c_out))
        throw ShapeError("conv2d: bias shape mismatch");
    auto out = new_node({d.c_out, d.h_out, d.w_out});

    const double* px = x.data();
    const double* pw = w.data();
    const double* pb = b.defined() ? b.data() : nullptr;
    double* po = out->val.data();
    const size_t plane_in = static_cast<size_t>(d.h_in) * d.w_in;
    const size_t plane_out = static_cast<size_t>(d.h_out) * d.w_out;

    bool pointwise = d.kh == 1 && d.kw == 1 && spec.stride == 1 && spec.groups == 1;
    if (pointwise) {
        // 1x1 conv as a channel-mixing pass; inner loop streams a full plane.
        for (int oc = 0; oc < d.c_out; ++oc) {
            double* yrow = po + oc * plane_out;
            double bias = pb ? pb[oc] : 0.0;
            for (size_t p = 0; p < plane_out; ++p) yrow[p] = bias;
            const double* wrow = pw + static_cast<size_t>(oc) * d.c_in;
            for (int ic = 0; ic < d.c_in; ++ic) {
                double wv = wrow[ic];
                if (wv == 0.0) continue;
                const double* xrow = px + ic * plane_in;
                for (size_t p = 0; p < plane_out; ++p) yrow[p] += wv * xrow[p];
            }
        }
    } else {
        int ocg = d.c_out / spec.groups;
        for (int oc = 0; oc < d.c_out; ++oc) {
            int g = oc / ocg;
            int ic0 = g * d.icg;
            const double* wbase = pw + static_cast<size_t>(oc) * d.icg * d.kh * d.kw;
            double bias = pb ? pb[oc] : 0.0;
            for (int oy = 0; oy < d.h_out; ++oy) {
                for (int ox = 0; ox < d.w_out; ++ox) {
                    double acc = bias;
                    for (int ic = 0; ic < d.icg; ++ic) {
                        const double* xc = px + (ic0 + ic) * plane_in;
                        const double* wc = wbase + static_cast<size_t>(ic) * d.kh * d.kw;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = clampi(oy * spec.stride - d.pad_h + ky * spec.dil_h, d.h_in - 1);
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = clampi(ox * spec.stride - d.pad_w + kx * spec.dil_w, d.w_in - 1);
                                acc += wc[ky * d.kw + kx] * xc[iy * d.w_in + ix];
                            }
                        }
                    }
                    po[oc * plane_out + oy * d.w_out + ox] = acc;
                }
            }
        }
    }

    if (track({&x, &w, &b})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        Node* nw = w.node().get();
        Node* nb = b.defined() ? b.node().get() : nullptr;
        ConvSpec sp = spec;
        ConvDims dd = d;
        attach(out, {&x, &w, &b}, [self, nx, nw, nb, sp, dd, plane_in, plane_out, pointwise] {
            const double* gy = self->grad.data();
            if (nb && nb->requires_grad) {
                nb->ensure_grad();
                for (int oc = 0; oc < dd.c_out; ++oc) {
                    double s = 0.0;
                    const double* grow = gy + oc * plane_out;
                    for (size_t p = 0; p < plane_out; ++p) s += grow[p];
                    nb->grad[oc] += s;
                }
            }
            if (pointwise) {
                if (nw->requires_grad) {
                    nw->ensure_grad();
                    for (int oc = 0; oc < dd.c_out; ++oc) {
                        const double* grow = gy + oc * plane_out;
                        double* wg = nw->grad.data() + static_cast<size_t>(oc) * dd.c_in;
                        for (int ic = 0; ic < dd.c_in; ++ic) {
                            const double* xrow = nx->val.data() + ic * plane_in;
                            double s = 0.0;
                            for (size_t p = 0; p < plane_out; ++p) s += grow[p] * xrow[p];
                            wg[ic] += s;
                        }
                    }
                }
                if (nx->requires_grad) {
                    nx->ensure_grad();
                    for (int ic = 0; ic < dd.c_in; ++ic) {
                        double* xg = nx->grad.data() + ic * plane_in;
                        for (int oc = 0; oc < dd.c_out; ++oc) {
                            double wv = nw->val[static_cast<size_t>(oc) * dd.c_in + ic];
                            if (wv == 0.0) continue;
                            const double* grow = gy + oc * plane_out;
                            for (size_t p = 0; p < plane_out; ++p) xg[p] += wv * grow[p];
                        }
                    }
                }
                return;
            }
            int ocg = dd.c_out / sp.groups;
            bool need_x = nx->requires_grad;
            bool need_w = nw->requires_grad;
            if (need_x) nx->ensure_grad();
            if (need_w) nw->ensure_grad();
            for (int oc = 0; oc < dd.c_out; ++oc) {
                int g = oc / ocg;
                int ic0 = g * dd.icg;
                const double* wbase = nw->val.data() + static_cast<size_t>(oc) * dd.icg * dd.kh * dd.kw;
                double* wgbase = need_w ? nw->grad.data() + static_cast<size_t>(oc) * dd.icg * dd.kh * dd.kw : nullptr;
                for (int oy = 0; oy < dd.h_out; ++oy) {
                    for (int ox = 0; ox < dd.w_out; ++ox) {
                        double g_out = gy[oc * plane_out + oy * dd.w_out + ox];
                        if (g_out == 0.0) continue;
                        for (int ic = 0; ic < dd.icg; ++ic) {
                            const double* xc = nx->val.data() + (ic0 + ic) * plane_in;
                            double* xgc = need_x ? nx->grad.data() + (ic0 + ic) * plane_in : nullptr;
                            for (int ky = 0; ky < dd.kh; ++ky) {
                                int iy = clampi(oy * sp.stride - dd.pad_h + ky * sp.dil_h, dd.h_in - 1);
                                for (int kx = 0; kx < dd.kw; ++kx) {
                                    int ix = clampi(ox * sp.stride - dd.pad_w + kx * sp.dil_w, dd.w_in - 1);
                                    size_t widx = static_cast<size_t>(ic) * dd.kh * dd.kw + ky * dd.kw + kx;
                                    if (need_w) wgbase[widx] += g_out * xc[iy * dd.w_in + ix];
                                    if (need_x) xgc[iy * dd.w_in + ix] += g_out * wbase[widx];
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Pooling / resampling

Tensor avg_pool(const Tensor& x, int k) {
    check_rank3(x, "avg_pool");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % k != 0 || w % k != 0) throw ShapeError("avg_pool: dims not divisible by kernel");
    int ho = h / k, wo = w / k;
    auto out = new_node({c, ho, wo});
    double inv = 1.0 / (k * k);
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = x.data() + static_cast<size_t>(ci) * h * w;
        double* op = out->val.data() + static_cast<size_t>(ci) * ho * wo;
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) s += xp[(oy * k + dy) * w + ox * k + dx];
                op[oy * wo + ox] = s * inv;
            }
    }
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        attach(out, {&x}, [self, nx, c, h, w, ho, wo, k, inv] {
            nx->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                double* xg = nx->grad.data() + static_cast<size_t>(ci) * h * w;
                const double* gp = self->grad.data() + static_cast<size_t>(ci) * ho * wo;
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox) {
                        double g = gp[oy * wo + ox] * inv;
                        for (int dy = 0; dy < k; ++dy)
                            for (int dx = 0; dx < k; ++dx) xg[(oy * k + dy) * w + ox * k + dx] += g;
                    }
            }
        });
    }
    return Tensor(out);
}

namespace {
struct Tap {
    int i0, i1;
    double t;
};
std::vector<Tap> bilinear_taps(int in, int factor) {
    std::vector<Tap> taps(static_cast<size_t>(in) * factor);
    for (int o = 0; o < in * factor; ++o) {
        double src = (o + 0.5) / factor - 0.5;
        int i0 = static_cast<int>(std::floor(src));
        double t = src - i0;
        taps[o] = {clampi(i0, in - 1), clampi(i0 + 1, in - 1), t};
    }
    return taps;
}
}  // namespace

Tensor upsample_bilinear(const Tensor& x, int factor) {
    check_rank3(x, "upsample_bilinear");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    int ho = h * factor, wo = w * factor;
    auto out = new_node({c, ho, wo});
    auto ty = bilinear_taps(h, factor);
    auto tx = bilinear_taps(w, factor);
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = x.data() + static_cast<size_t>(ci) * h * w;
        double* op = out->val.data() + static_cast<size_t>(ci) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
            const Tap& a = ty[oy];
            for (int ox = 0; ox < wo; ++ox) {
                const Tap& b = tx[ox];
                double v00 = xp[a.i0 * w + b.i0], v01 = xp[a.i0 * w + b.i1];
                double v10 = xp[a.i1 * w + b.i0], v11 = xp[a.i1 * w + b.i1];
                op[oy * wo + ox] = (1 - a.t) * ((1 - b.t) * v00 + b.t * v01) + a.t * ((1 - b.t) * v10 + b.t * v11);
            }
        }
    }
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        attach(out, {&x}, [self, nx, c, h, w, ho, wo, ty, tx] {
            nx->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                double* xg = nx->grad.data() + static_cast<size_t>(ci) * h * w;
                const double* gp = self->grad.data() + static_cast<size_t>(ci) * ho * wo;
                for (int oy = 0; oy < ho; ++oy) {
                    const Tap& a = ty[oy];
                    for (int ox = 0; ox < wo; ++ox) {
                        const Tap& b = tx[ox];
                        double g = gp[oy * wo + ox];
                        xg[a.i0 * w + b.i0] += (1 - a.t) * (1 - b.t) * g;
                        xg[a.i0 * w + b.i1] += (1 - a.t) * b.t * g;
                        xg[a.i1 * w + b.i0] += a.t * (1 - b.t) * g;
                        xg[a.i1 * w + b.i1] += a.t * b.t * g;
                    }
                }
            }
        });
    }
    return Tensor(out);
}

Tensor global_avg_pool(const Tensor& x) {
    check_rank3(x, "global_avg_pool");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    auto out = new_node({c, 1, 1});
    size_t plane = static_cast<size_t>(h) * w;
    double inv = 1.0 / static_cast<double>(plane);
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = x.data() + ci * plane;
        double s = 0.0;
        for (size_t p = 0; p < plane; ++p) s += xp[p];
        out->val[ci] = s * inv;
    }
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        attach(out, {&x}, [self, nx, c, plane, inv] {
            nx->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                double g = self->grad[ci] * inv;
                double* xg = nx->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) xg[p] += g;
            }
        });
    }
    return Tensor(out);
}

Tensor broadcast_hw(const Tensor& x, int h, int w) {
    if (x.shape().size() != 3 || x.dim(1) != 1 || x.dim(2) != 1)
        throw ShapeError("broadcast_hw: expected {C,1,1} input");
    int c = x.dim(0);
    auto out = new_node({c, h, w});
    size_t plane = static_cast<size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci)
        std::fill_n(out->val.data() + ci * plane, plane, x.data()[ci]);
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        attach(out, {&x}, [self, nx, c, plane] {
            nx->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                double s = 0.0;
                const double* gp = self->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) s += gp[p];
                nx->grad[ci] += s;
            }
        });
    }
    return Tensor(out);
}

Tensor mul_cvec(const Tensor& x, const Tensor& s) {
    check_rank3(x, "mul_cvec");
    if (s.shape().size() != 3 || s.dim(0) != x.dim(0) || s.dim(1) != 1 || s.dim(2) != 1)
        throw ShapeError("mul_cvec: expected {C,1,1} scale");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    auto out = new_node({c, h, w});
    size_t plane = static_cast<size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) {
        double sv = s.data()[ci];
        const double* xp = x.data() + ci * plane;
        double* op = out->val.data() + ci * plane;
        for (size_t p = 0; p < plane; ++p) op[p] = xp[p] * sv;
    }
    if (track({&x, &s})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        Node* ns = s.node().get();
        attach(out, {&x, &s}, [self, nx, ns, c, plane] {
            if (nx->requires_grad) {
                nx->ensure_grad();
                for (int ci = 0; ci < c; ++ci) {
                    double sv = ns->val[ci];
                    double* xg = nx->grad.data() + ci * plane;
                    const double* gp = self->grad.data() + ci * plane;
                    for (size_t p = 0; p < plane; ++p) xg[p] += gp[p] * sv;
                }
            }
            if (ns->requires_grad) {
                ns->ensure_grad();
                for (int ci = 0; ci < c; ++ci) {
                    double acc = 0.0;
                    const double* xp = nx->val.data() + ci * plane;
                    const double* gp = self->grad.data() + ci * plane;
                    for (size_t p = 0; p < plane; ++p) acc += gp[p] * xp[p];
                    ns->grad[ci] += acc;
                }
            }
        });
    }
    return Tensor(out);
}

Tensor group_norm(const Tensor& x, int groups, const Tensor& gamma, const Tensor& beta, double eps) {
    check_rank3(x, "group_norm");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (c % groups != 0) throw ShapeError("group_norm: channels not divisible by groups");
    if (gamma.dim(0) != c || beta.dim(0) != c) throw ShapeError("group_norm: affine shape mismatch");
    int cpg = c / groups;
    size_t plane = static_cast<size_t>(h) * w;
    size_t m = static_cast<size_t>(cpg) * plane;
    auto out = new_node({c, h, w});
    std::vector<double> mean_g(groups), rstd_g(groups);
    for (int g = 0; g < groups; ++g) {
        const double* xp = x.data() + static_cast<size_t>(g) * m;
        double mu = 0.0;
        for (size_t i = 0; i < m; ++i) mu += xp[i];
        mu /= static_cast<double>(m);
        double var = 0.0;
        for (size_t i = 0; i < m; ++i) {
            double d = xp[i] - mu;
            var += d * d;
        }
        var /= static_cast<double>(m);
        mean_g[g] = mu;
        rstd_g[g] = 1.0 / std::sqrt(var + eps);
    }
    for (int ci = 0; ci < c; ++ci) {
        int g = ci / cpg;
        double mu = mean_g[g], r = rstd_g[g];
        double gm = gamma.data()[ci], bt = beta.data()[ci];
        const double* xp = x.data() + ci * plane;
        double* op = out->val.data() + ci * plane;
        for (size_t p = 0; p < plane; ++p) op[p] = gm * (xp[p] - mu) * r + bt;
    }
    if (track({&x, &gamma, &beta})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        Node* ng = gamma.node().get();
        Node* nb = beta.node().get();
        attach(out, {&x, &gamma, &beta}, [self, nx, ng, nb, groups, cpg, plane, m, mean_g, rstd_g] {
            int c2 = groups * cpg;
            if (nb && nb->requires_grad) {
                nb->ensure_grad();
                for (int ci = 0; ci < c2; ++ci) {
                    const double* gp = self->grad.data() + ci * plane;
                    double s = 0.0;
                    for (size_t p = 0; p < plane; ++p) s += gp[p];
                    nb->grad[ci] += s;
                }
            }
            if (ng && ng->requires_grad) {
                ng->ensure_grad();
                for (int ci = 0; ci < c2; ++ci) {
                    int g = ci / cpg;
                    double mu = mean_g[g], r = rstd_g[g];
                    const double* gp = self->grad.data() + ci * plane;
                    const double* xp = nx->val.data() + ci * plane;
                    double s = 0.0;
                    for (size_t p = 0; p < plane; ++p) s += gp[p] * (xp[p] - mu) * r;
                    ng->grad[ci] += s;
                }
            }
            if (nx->requires_grad) {
                nx->ensure_grad();
                for (int g = 0; g < groups; ++g) {
                    double mu = mean_g[g], r = rstd_g[g];
                    const double* xg0 = nx->val.data() + static_cast<size_t>(g) * m;
                    double s1 = 0.0, s2 = 0.0;
                    // dyhat = dy * gamma
                    for (int cc = 0; cc < cpg; ++cc) {
                        int ci = g * cpg + cc;
                        double gm = ng->val[ci];
                        const double* gp = self->grad.data() + ci * plane;
                        const double* xp = nx->val.data() + ci * plane;
                        for (size_t p = 0; p < plane; ++p) {
                            double dyh = gp[p] * gm;
                            s1 += dyh;
                            s2 += dyh * (xp[p] - mu) * r;
                        }
                    }
                    double inv_m = 1.0 / static_cast<double>(m);
                    for (int cc = 0; cc < cpg; ++cc) {
                        int ci = g * cpg + cc;
                        double gm = ng->val[ci];
                        const double* gp = self->grad.data() + ci * plane;
                        const double* xp = nx->val.data() + ci * plane;
                        double* xgr = nx->grad.data() + ci * plane;
                        for (size_t p = 0; p < plane; ++p) {
                            double xh = (xp[p] - mu) * r;
                            xgr[p] += r * (gp[p] * gm - s1 * inv_m - xh * s2 * inv_m);
                        }
                    }
                    (void)xg0;
                }
            }
        });
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Vector / matrix

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b) {
    if (w.shape().size() != 2 || x.shape().size() != 1) throw ShapeError("linear: expected {out,in} and {in}");
    int out_n = w.dim(0), in_n = w.dim(1);
    if (x.dim(0) != in_n) throw ShapeError("linear: input size mismatch");
    if (b.defined() && b.dim(0) != out_n) throw ShapeError("linear: bias size mismatch");
    auto out = new_node({out_n});
    for (int o = 0; o < out_n; ++o) {
        const double* wr = w.data() + static_cast<size_t>(o) * in_n;
        double s = b.defined() ? b.data()[o] : 0.0;
        for (int i = 0; i < in_n; ++i) s += wr[i] * x.data()[i];
        out->val[o] = s;
    }
    if (track({&w, &x, &b})) {
        Node* self = out.get();
        Node* nw = w.node().get();
        Node* nx = x.node().get();
        Node* nb = b.defined() ? b.node().get() : nullptr;
        attach(out, {&w, &x, &b}, [self, nw, nx, nb, out_n, in_n] {
            if (nb && nb->requires_grad) {
                nb->ensure_grad();
                for (int o = 0; o < out_n; ++o) nb->grad[o] += self->grad[o];
            }
            if (nw->requires_grad) {
                nw->ensure_grad();
                for (int o = 0; o < out_n; ++o) {
                    double g = self->grad[o];
                    if (g == 0.0) continue;
                    double* wg = nw->grad.data() + static_cast<size_t>(o) * in_n;
                    for (int i = 0; i < in_n; ++i) wg[i] += g * nx->val[i];
                }
            }
            if (nx->requires_grad) {
                nx->ensure_grad();
                for (int o = 0; o < out_n; ++o) {
                    double g = self->grad[o];
                    if (g == 0.0) continue;
                    const double* wr = nw->val.data() + static_cast<size_t>(o) * in_n;
                    for (int i = 0; i < in_n; ++i) nx->grad[i] += g * wr[i];
                }
            }
        });
    }
    return Tensor(out);
}

Tensor matvec(const Tensor& m, const Tensor& v) { return linear(m, v, Tensor()); }

Tensor vecmat(const Tensor& v, const Tensor& m) {
    if (m.shape().size() != 2 || v.shape().size() != 1) throw ShapeError("vecmat: expected {N} and {N,D}");
    int n = m.dim(0), d = m.dim(1);
    if (v.dim(0) != n) throw ShapeError("vecmat: size mismatch");
    auto out = new_node({d});
    for (int j = 0; j < d; ++j) out->val[j] = 0.0;
    for (int i = 0; i < n; ++i) {
        double vi = v.data()[i];
        const double* mr = m.data() + static_cast<size_t>(i) * d;
        for (int j = 0; j < d; ++j) out->val[j] += vi * mr[j];
    }
    if (track({&v, &m})) {
        Node* self = out.get();
        Node* nv = v.node().get();
        Node* nm = m.node().get();
        attach(out, {&v, &m}, [self, nv, nm, n, d] {
            if (nv->requires_grad) {
                nv->ensure_grad();
                for (int i = 0; i < n; ++i) {
                    const double* mr = nm->val.data() + static_cast<size_t>(i) * d;
                    double s = 0.0;
                    for (int j = 0; j < d; ++j) s += self->grad[j] * mr[j];
                    nv->grad[i] += s;
                }
            }
            if (nm->requires_grad) {
                nm->ensure_grad();
                for (int i = 0; i < n; ++i) {
                    double vi = nv->val[i];
                    if (vi == 0.0) continue;
                    double* mg = nm->grad.data() + static_cast<size_t>(i) * d;
                    for (int j = 0; j < d; ++j) mg[j] += vi * self->grad[j];
                }
            }
        });
    }
    return Tensor(out);
}

Tensor softmax(const Tensor& v) {
    if (v.shape().size() != 1) throw ShapeError("softmax: expected rank-1");
    int n = v.dim(0);
    auto out = new_node({n});
    double mx = v.data()[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, v.data()[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        out->val[i] = std::exp(v.data()[i] - mx);
        z += out->val[i];
    }
    for (int i = 0; i < n; ++i) out->val[i] /= z;
    if (track({&v})) {
        Node* self = out.get();
        Node* nv = v.node().get();
        attach(out, {&v}, [self, nv, n] {
            nv->ensure_grad();
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += self->grad[i] * self->val[i];
            for (int i = 0; i < n; ++i) nv->grad[i] += self->val[i] * (self->grad[i] - dot);
        });
    }
    return Tensor(out);
}

Tensor add_row_broadcast(const Tensor& m, const Tensor& v) {
    if (m.shape().size() != 2 || v.shape().size() != 1 || m.dim(1) != v.dim(0))
        throw ShapeError("add_row_broadcast: shape mismatch");
    int n = m.dim(0), d = m.dim(1);
    auto out = new_node({n, d});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            out->val[static_cast<size_t>(i) * d + j] = m.data()[static_cast<size_t>(i) * d + j] + v.data()[j];
    if (track({&m, &v})) {
        Node* self = out.get();
        Node* nm = m.node().get();
        Node* nv = v.node().get();
        attach(out, {&m, &v}, [self, nm, nv, n, d] {
            if (nm->requires_grad) {
                nm->ensure_grad();
                size_t tot = static_cast<size_t>(n) * d;
                for (size_t i = 0; i < tot; ++i) nm->grad[i] += self->grad[i];
            }
            if (nv->requires_grad) {
                nv->ensure_grad();
                for (int j = 0; j < d; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i) s += self->grad[static_cast<size_t>(i) * d + j];
                    nv->grad[j] += s;
                }
            }
        });
    }
    return Tensor(out);
}

Tensor sum_all(const Tensor& x) {
    auto out = new_node({1});
    double s = 0.0;
    for (double v : x.values()) s += v;
    out->val[0] = s;
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        attach(out, {&x}, [self, nx] {
            nx->ensure_grad();
            double g = self->grad[0];
            for (double& gv : nx->grad) gv += g;
        });
    }
    return Tensor(out);
}

Tensor mul_plain(const Tensor& x, const Array3& m) {
    check_rank3(x, "mul_plain");
    if (m.h != x.dim(1) || m.w != x.dim(2) || (m.c != 1 && m.c != x.dim(0)))
        throw ShapeError("mul_plain: mask shape mismatch");
    int c = x.dim(0);
    size_t plane = static_cast<size_t>(m.h) * m.w;
    auto out = new_node(x.shape());
    for (int ci = 0; ci < c; ++ci) {
        const double* mp = m.v.data() + (m.c == 1 ? 0 : ci * plane);
        const double* xp = x.data() + ci * plane;
        double* op = out->val.data() + ci * plane;
        for (size_t p = 0; p < plane; ++p) op[p] = xp[p] * mp[p];
    }
    if (track({&x})) {
        Node* self = out.get();
        Node* nx = x.node().get();
        Array3 mc = m;
        attach(out, {&x}, [self, nx, mc, c, plane] {
            nx->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                const double* mp = mc.v.data() + (mc.c == 1 ? 0 : ci * plane);
                const double* gp = self->grad.data() + ci * plane;
                double* xg = nx->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) xg[p] += gp[p] * mp[p];
            }
        });
    }
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Losses

Tensor bce_with_logits(const Tensor& logits, const Array3& target, const Array3* valid) {
    check_rank3(logits, "bce_with_logits");
    int c = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
    if (target.c != c || target.h != h || target.w != w) throw ShapeError("bce_with_logits: target shape mismatch");
    size_t plane = static_cast<size_t>(h) * w;
    if (valid && (valid->h != h || valid->w != w || (valid->c != 1 && valid->c != c)))
        throw ShapeError("bce_with_logits: valid mask shape mismatch");

    auto out = new_node({1});
    double total = 0.0;
    long count = 0;
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = logits.data() + ci * plane;
        const double* tp = target.v.data() + ci * plane;
        const double* vp = valid ? valid->v.data() + (valid->c == 1 ? 0 : ci * plane) : nullptr;
        for (size_t p = 0; p < plane; ++p) {
            if (vp && vp[p] == 0.0) continue;
            double x = xp[p], t = tp[p];
            total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
            ++count;
        }
    }
    out->val[0] = count > 0 ? total / count : 0.0;
    if (count > 0 && track({&logits})) {
        Node* self = out.get();
        Node* nx = logits.node().get();
        Array3 tc = target;
        Array3 vc = valid ? *valid : Array3();
        bool has_valid = valid != nullptr;
        attach(out, {&logits}, [self, nx, tc, vc, has_valid, c, plane, count] {
            nx->ensure_grad();
            double g = self->grad[0] / count;
            for (int ci = 0; ci < c; ++ci) {
                const double* xp = nx->val.data() + ci * plane;
                const double* tp = tc.v.data() + ci * plane;
                const double* vp = has_valid ? vc.v.data() + (vc.c == 1 ? 0 : ci * plane) : nullptr;
                double* xg = nx->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) {
                    if (vp && vp[p] == 0.0) continue;
                    double x = xp[p];
                    double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
                    xg[p] += g * (sig - tp[p]);
                }
            }
        });
    }
    return Tensor(out);
}

Tensor mse_loss(const Tensor& pred, const Array3& target, const Array3* valid) {
    check_rank3(pred, "mse_loss");
    int c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
    if (target.c != c || target.h != h || target.w != w) throw ShapeError("mse_loss: target shape mismatch");
    if (valid && (valid->h != h || valid->w != w || (valid->c != 1 && valid->c != c)))
        throw ShapeError("mse_loss: valid mask shape mismatch");
    size_t plane = static_cast<size_t>(h) * w;
    auto out = new_node({1});
    double total = 0.0;
    long count = 0;
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = pred.data() + ci * plane;
        const double* tp = target.v.data() + ci * plane;
        const double* vp = valid ? valid->v.data() + (valid->c == 1 ? 0 : ci * plane) : nullptr;
        for (size_t p = 0; p < plane; ++p) {
            if (vp && vp[p] == 0.0) continue;
            double d = xp[p] - tp[p];
            total += d * d;
            ++count;
        }
    }
    out->val[0] = count > 0 ? total / count : 0.0;
    if (count > 0 && track({&pred})) {
        Node* self = out.get();
        Node* nx = pred.node().get();
        Array3 tc = target;
        Array3 vc = valid ? *valid : Array3();
        bool has_valid = valid != nullptr;
        attach(out, {&pred}, [self, nx, tc, vc, has_valid, c, plane, count] {
            nx->ensure_grad();
            double g = self->grad[0] * 2.0 / count;
            for (int ci = 0; ci < c; ++ci) {
                const double* xp = nx->val.data() + ci * plane;
                const double* tp = tc.v.data() + ci * plane;
                const double* vp = has_valid ? vc.v.data() + (vc.c == 1 ? 0 : ci * plane) : nullptr;
                double* xg = nx->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) {
                    if (vp && vp[p] == 0.0) continue;
                    xg[p] += g * (xp[p] - tp[p]);
                }
            }
        });
    }
    return Tensor(out);
}

Tensor l1_masked(const Tensor& pred, const Array3& target, const Array3& valid) {
    check_rank3(pred, "l1_masked");
    int c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
    if (target.c != c || target.h != h || target.w != w) throw ShapeError("l1_masked: target shape mismatch");
    if (valid.h != h || valid.w != w || (valid.c != 1 && valid.c != c))
        throw ShapeError("l1_masked: valid mask shape mismatch");
    size_t plane = static_cast<size_t>(h) * w;
    auto out = new_node({1});
    double total = 0.0;
    long count = 0;
    for (int ci = 0; ci < c; ++ci) {
        const double* xp = pred.data() + ci * plane;
        const double* tp = target.v.data() + ci * plane;
        const double* vp = valid.v.data() + (valid.c == 1 ? 0 : ci * plane);
        for (size_t p = 0; p < plane; ++p) {
            if (vp[p] == 0.0) continue;
            total += std::abs(xp[p] - tp[p]);
            ++count;
        }
    }
    out->val[0] = count > 0 ? total / count : 0.0;
    if (count > 0 && track({&pred})) {
        Node* self = out.get();
        Node* nx = pred.node().get();
        Array3 tc = target;
        Array3 vc = valid;
        attach(out, {&pred}, [self, nx, tc, vc, c, plane, count] {
            nx->ensure_grad();
            double g = self->grad[0] / count;
            for (int ci = 0; ci < c; ++ci) {
                const double* xp = nx->val.data() + ci * plane;
                const double* tp = tc.v.data() + ci * plane;
                const double* vp = vc.v.data() + (vc.c == 1 ? 0 : ci * plane);
                double* xg = nx->grad.data() + ci * plane;
                for (size_t p = 0; p < plane; ++p) {
                    if (vp[p] == 0.0) continue;
                    double d = xp[p] - tp[p];
                    xg[p] += g * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
                }
            }
        });
    }
    return Tensor(out);
}

Tensor ce_bootstrap(const Tensor& logits, const std::vector<uint16_t>& target,
                    const std::vector<double>& pixel_weight, double keep_frac,
                    const std::vector<uint8_t>* ignore) {
    check_rank3(logits, "ce_bootstrap");
    int k = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
    size_t plane = static_cast<size_t>(h) * w;
    if (target.size() != plane || pixel_weight.size() != plane)
        throw ShapeError("ce_bootstrap: target/weight size mismatch");
    if (ignore && ignore->size() != plane) throw ShapeError("ce_bootstrap: ignore size mismatch");

    const double* xp = logits.data();
    std::vector<double> wce(plane, 0.0);
    std::vector<uint32_t> candidates;
    candidates.reserve(plane);
    for (size_t p = 0; p < plane; ++p) {
        if (ignore && (*ignore)[p]) continue;
        int t = target[p];
        if (t < 0 || t >= k) throw ShapeError("ce_bootstrap: target class out of range");
        double mx = xp[p];
        for (int ci = 1; ci < k; ++ci) mx = std::max(mx, xp[ci * plane + p]);
        double z = 0.0;
        for (int ci = 0; ci < k; ++ci) z += std::exp(xp[ci * plane + p] - mx);
        double ce = std::log(z) + mx - xp[static_cast<size_t>(t) * plane + p];
        wce[p] = ce * pixel_weight[p];
        candidates.push_back(static_cast<uint32_t>(p));
    }
    auto out = new_node({1});
    if (candidates.empty()) {
        out->val[0] = 0.0;
        return Tensor(out);
    }
    size_t keep = std::max<size_t>(1, static_cast<size_t>(std::llround(keep_frac * candidates.size())));
    keep = std::min(keep, candidates.size());
    std::nth_element(candidates.begin(), candidates.begin() + (keep - 1), candidates.end(),
                     [&wce](uint32_t a, uint32_t b) { return wce[a] > wce[b]; });
    candidates.resize(keep);
    double total = 0.0;
    for (uint32_t p : candidates) total += wce[p];
    out->val[0] = total / keep;

    if (track({&logits})) {
        Node* self = out.get();
        Node* nx = logits.node().get();
        std::vector<uint32_t> sel = candidates;
        std::vector<uint16_t> tc = target;
        std::vector<double> wc = pixel_weight;
        attach(out, {&logits}, [self, nx, sel, tc, wc, k, plane] {
            nx->ensure_grad();
            double g = self->grad[0] / sel.size();
            for (uint32_t p : sel) {
                double mx = nx->val[p];
                for (int ci = 1; ci < k; ++ci) mx = std::max(mx, nx->val[ci * plane + p]);
                double z = 0.0;
                for (int ci = 0; ci < k; ++ci) z += std::exp(nx->val[ci * plane + p] - mx);
                double gw = g * wc[p];
                for (int ci = 0; ci < k; ++ci) {
                    double soft = std::exp(nx->val[ci * plane + p] - mx) / z;
                    nx->grad[ci * plane + p] += gw * (soft - (ci == tc[p] ? 1.0 : 0.0));
                }
            }
        });
    }
    return Tensor(out);
}

bool has_nan(const Tensor& t) {
    for (double v : t.values())
        if (std::isnan(v) || std::isinf(v)) return true;
    return false;
}

}  // namespace paps
