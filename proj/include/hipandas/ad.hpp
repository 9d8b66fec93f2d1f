#pragma once

// Minimal define-by-run reverse-mode autodiff over dense (channels, height,
// width) tensors. The graph is rebuilt every optimization step; nodes hold
// their value, a lazily allocated gradient, and a closure that scatters the
// incoming gradient to tracked parents. Templated on the scalar type: the
// training path runs in float, gradient-check tests instantiate double.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "hipandas/common.hpp"
#include "hipandas/kernels.hpp"

namespace hipandas::ad {

template <typename T>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, T fill = T(0))
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    T* plane(int ci) { return v.data() + static_cast<size_t>(ci) * h * w; }
    const T* plane(int ci) const { return v.data() + static_cast<size_t>(ci) * h * w; }
    T& operator()(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    T operator()(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(c, h, w);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <typename T>
class Node {
public:
    Tensor<T> value;
    Tensor<T> grad; // empty until backward reaches this node
    bool track = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void()> backprop;

    bool has_grad() const { return grad.size() == value.size() && value.size() > 0; }
    Tensor<T>& g() {
        if (!has_grad()) grad = Tensor<T>(value.c, value.h, value.w);
        return grad;
    }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> constant(Tensor<T> v) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(v);
    return n;
}

/// Tracked leaf (network parameter or input under test).
template <typename T>
Var<T> leaf(Tensor<T> v) {
    auto n = constant(std::move(v));
    n->track = true;
    return n;
}

template <typename T>
Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->track) {
            n->track = true;
            break;
        }
    return n;
}

template <typename T>
T scalar(const Var<T>& v) {
    if (v->value.size() != 1) throw DimError("scalar: node is not a scalar");
    return v->value.v[0];
}

/// Reverse pass from a scalar root. Gradients accumulate into every tracked
/// node reachable from the root.
template <typename T>
void backward(const Var<T>& root) {
    if (root->value.size() != 1) throw DimError("backward: root must be scalar");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, size_t>> stack;
    if (root->track) {
        stack.push_back({root.get(), 0});
        seen.insert(root.get());
    }
    while (!stack.empty()) {
        Node<T>* node = stack.back().first;
        const size_t idx = stack.back().second;
        if (idx < node->parents.size()) {
            stack.back().second = idx + 1;
            Node<T>* p = node->parents[idx].get();
            if (p->track && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0}); // may invalidate stack.back() refs
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->g().v[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop && n->has_grad()) n->backprop();
    }
}

// ------------------------------------------------------------- elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    if (!a->value.same_shape(b->value)) throw DimError("add: shape mismatch");
    Tensor<T> out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += b->value.v[i];
    auto n = make_node(std::move(out), {a, b});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get(), *br = b.get();
        n->backprop = [nr, ar, br] {
            if (ar->track) {
                auto& g = ar->g();
                for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[i];
            }
            if (br->track) {
                auto& g = br->g();
                for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[i];
            }
        };
    }
    return n;
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    if (!a->value.same_shape(b->value)) throw DimError("sub: shape mismatch");
    Tensor<T> out = a->value;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] -= b->value.v[i];
    auto n = make_node(std::move(out), {a, b});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get(), *br = b.get();
        n->backprop = [nr, ar, br] {
            if (ar->track) {
                auto& g = ar->g();
                for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[i];
            }
            if (br->track) {
                auto& g = br->g();
                for (size_t i = 0; i < g.size(); ++i) g.v[i] -= nr->grad.v[i];
            }
        };
    }
    return n;
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
    Tensor<T> out = a->value;
    for (T& x : out.v) x += s;
    auto n = make_node(std::move(out), {a});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get();
        n->backprop = [nr, ar] {
            auto& g = ar->g();
            for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[i];
        };
    }
    return n;
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
    Tensor<T> out = a->value;
    for (T& x : out.v) x = x > T(0) ? x : slope * x;
    auto n = make_node(std::move(out), {a});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get();
        n->backprop = [nr, ar, slope] {
            auto& g = ar->g();
            for (size_t i = 0; i < g.size(); ++i)
                g.v[i] += nr->grad.v[i] * (ar->value.v[i] > T(0) ? T(1) : slope);
        };
    }
    return n;
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
    Tensor<T> out = a->value;
    for (T& x : out.v) x = T(1) / (T(1) + std::exp(-x));
    auto n = make_node(std::move(out), {a});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get();
        n->backprop = [nr, ar] {
            auto& g = ar->g();
            for (size_t i = 0; i < g.size(); ++i) {
                const T s = nr->value.v[i];
                g.v[i] += nr->grad.v[i] * s * (T(1) - s);
            }
        };
    }
    return n;
}

/// Softmax along the H axis, independently per (channel, column).
template <typename T>
Var<T> softmax_h(const Var<T>& a) {
    const int c = a->value.c, h = a->value.h, w = a->value.w;
    Tensor<T> out(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int x = 0; x < w; ++x) {
            T mx = a->value(ci, 0, x);
            for (int y = 1; y < h; ++y) mx = std::max(mx, a->value(ci, y, x));
            T sum = T(0);
            for (int y = 0; y < h; ++y) {
                const T e = std::exp(a->value(ci, y, x) - mx);
                out(ci, y, x) = e;
                sum += e;
            }
            for (int y = 0; y < h; ++y) out(ci, y, x) /= sum;
        }
    auto n = make_node(std::move(out), {a});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get();
        n->backprop = [nr, ar, c, h, w] {
            auto& g = ar->g();
            for (int ci = 0; ci < c; ++ci)
                for (int x = 0; x < w; ++x) {
                    T dot = T(0);
                    for (int y = 0; y < h; ++y) dot += nr->grad(ci, y, x) * nr->value(ci, y, x);
                    for (int y = 0; y < h; ++y)
                        g(ci, y, x) += nr->value(ci, y, x) * (nr->grad(ci, y, x) - dot);
                }
        };
    }
    return n;
}

// ------------------------------------------------------------ convolution

namespace detail {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatMap = Eigen::Map<Mat<T>>;

template <typename T>
using CMatMap = Eigen::Map<const Mat<T>>;

} // namespace detail

/// 3x3 convolution, zero padding 1, stride 1 or 2. Weights are stored as a
/// (out_c, in_c, 9) tensor, bias as (out_c, 1, 1).
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& wgt, const Var<T>& bias, int stride = 1) {
    const int ic = x->value.c, h = x->value.h, w = x->value.w;
    const int oc = wgt->value.c;
    if (wgt->value.h != ic || wgt->value.w != 9)
        throw DimError("conv2d: weight shape (" + std::to_string(wgt->value.c) + "," +
                       std::to_string(wgt->value.h) + "," + std::to_string(wgt->value.w) +
                       ") does not match input channels " + std::to_string(ic));
    if (bias->value.c != oc || bias->value.size() != static_cast<size_t>(oc))
        throw DimError("conv2d: bias shape mismatch");
    const int oh = (h - 1) / stride + 1;
    const int ow = (w - 1) / stride + 1;
    const size_t patch = static_cast<size_t>(oh) * ow;
    const int k = ic * 9;

    std::vector<T> col(static_cast<size_t>(k) * patch);
    kernels::im2col3(x->value.data(), ic, h, w, stride, col.data());

    Tensor<T> out(oc, oh, ow);
    {
        detail::CMatMap<T> wm(wgt->value.data(), oc, k);
        detail::CMatMap<T> cm(col.data(), k, static_cast<Eigen::Index>(patch));
        detail::MatMap<T> om(out.data(), oc, static_cast<Eigen::Index>(patch));
        om.noalias() = wm * cm;
        for (int o = 0; o < oc; ++o) om.row(o).array() += bias->value.v[o];
    }

    auto n = make_node(std::move(out), {x, wgt, bias});
    if (n->track) {
        Node<T>*nr = n.get(), *xr = x.get(), *wr = wgt.get(), *br = bias.get();
        n->backprop = [nr, xr, wr, br, ic, h, w, oc, k, patch, stride] {
            detail::CMatMap<T> dy(nr->grad.data(), oc, static_cast<Eigen::Index>(patch));
            if (br->track) {
                auto& g = br->g();
                // serial sum: Eigen redux order depends on buffer alignment,
                // which would break bitwise run-to-run reproducibility
                for (int o = 0; o < oc; ++o) {
                    const T* row = nr->grad.data() + static_cast<size_t>(o) * patch;
                    T acc = T(0);
                    for (size_t i = 0; i < patch; ++i) acc += row[i];
                    g.v[o] += acc;
                }
            }
            if (wr->track) {
                std::vector<T> col(static_cast<size_t>(k) * patch);
                kernels::im2col3(xr->value.data(), ic, h, w, stride, col.data());
                detail::CMatMap<T> cm(col.data(), k, static_cast<Eigen::Index>(patch));
                detail::MatMap<T> dw(wr->g().data(), oc, k);
                dw.noalias() += dy * cm.transpose();
            }
            if (xr->track) {
                std::vector<T> dcol(static_cast<size_t>(k) * patch);
                detail::CMatMap<T> wm(wr->value.data(), oc, k);
                detail::MatMap<T> dc(dcol.data(), k, static_cast<Eigen::Index>(patch));
                dc.noalias() = wm.transpose() * dy;
                kernels::col2im3_add(dcol.data(), ic, h, w, stride, xr->g().data());
            }
        };
    }
    return n;
}

// ----------------------------------------------------------- pool / resize

/// Adaptive average pooling to (oh, ow); cell i spans
/// [floor(i*n/o), ceil((i+1)*n/o)), matching the usual framework semantics.
template <typename T>
Var<T> adaptive_avg_pool(const Var<T>& x, int oh, int ow) {
    const int c = x->value.c, h = x->value.h, w = x->value.w;
    auto lo = [](int i, int n, int o) { return (i * n) / o; };
    auto hi = [](int i, int n, int o) { return ((i + 1) * n + o - 1) / o; };
    Tensor<T> out(c, oh, ow);
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                const int r0 = lo(i, h, oh), r1 = hi(i, h, oh);
                const int c0 = lo(j, w, ow), c1 = hi(j, w, ow);
                double acc = 0.0;
                for (int y = r0; y < r1; ++y)
                    for (int xx = c0; xx < c1; ++xx) acc += x->value(ci, y, xx);
                out(ci, i, j) = static_cast<T>(acc / ((r1 - r0) * (c1 - c0)));
            }
    auto n = make_node(std::move(out), {x});
    if (n->track) {
        Node<T>*nr = n.get(), *xr = x.get();
        n->backprop = [nr, xr, c, h, w, oh, ow, lo, hi] {
            auto& g = xr->g();
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < oh; ++i)
                    for (int j = 0; j < ow; ++j) {
                        const int r0 = lo(i, h, oh), r1 = hi(i, h, oh);
                        const int c0 = lo(j, w, ow), c1 = hi(j, w, ow);
                        const T gv = nr->grad(ci, i, j) / static_cast<T>((r1 - r0) * (c1 - c0));
                        for (int y = r0; y < r1; ++y)
                            for (int xx = c0; xx < c1; ++xx) g(ci, y, xx) += gv;
                    }
        };
    }
    return n;
}

template <typename T>
Var<T> upsample_bicubic(const Var<T>& x, int s) {
    const int c = x->value.c, h = x->value.h, w = x->value.w;
    auto ay = std::make_shared<kernels::BicubicAxis>(kernels::bicubic_axis(h, s));
    auto ax = std::make_shared<kernels::BicubicAxis>(kernels::bicubic_axis(w, s));
    Tensor<T> out(c, h * s, w * s);
    for (int ci = 0; ci < c; ++ci)
        kernels::bicubic_upsample(x->value.plane(ci), h, w, *ay, *ax, out.plane(ci));
    auto n = make_node(std::move(out), {x});
    if (n->track) {
        Node<T>*nr = n.get(), *xr = x.get();
        n->backprop = [nr, xr, c, h, w, ay, ax] {
            auto& g = xr->g();
            for (int ci = 0; ci < c; ++ci)
                kernels::bicubic_upsample_adjoint(nr->grad.plane(ci), h, w, *ay, *ax, g.plane(ci));
        };
    }
    return n;
}

template <typename T>
Var<T> downsample_area(const Var<T>& x, int s) {
    const int c = x->value.c, h = x->value.h, w = x->value.w;
    if (h % s != 0 || w % s != 0) throw DimError("downsample_area: dims not divisible by ratio");
    Tensor<T> out(c, h / s, w / s);
    for (int ci = 0; ci < c; ++ci)
        kernels::area_downsample(x->value.plane(ci), h, w, s, out.plane(ci));
    auto n = make_node(std::move(out), {x});
    if (n->track) {
        Node<T>*nr = n.get(), *xr = x.get();
        n->backprop = [nr, xr, c, h, w, s] {
            auto& g = xr->g();
            for (int ci = 0; ci < c; ++ci)
                kernels::area_downsample_adjoint(nr->grad.plane(ci), h / s, w / s, s, g.plane(ci));
        };
    }
    return n;
}

/// Sobel responses with replicate padding: plane k maps to output planes
/// 2k (horizontal kernel) and 2k+1 (vertical kernel).
template <typename T>
Var<T> sobel_pair(const Var<T>& x) {
    const int c = x->value.c, h = x->value.h, w = x->value.w;
    Tensor<T> out(2 * c, h, w);
    for (int ci = 0; ci < c; ++ci)
        kernels::sobel(x->value.plane(ci), h, w, out.plane(2 * ci), out.plane(2 * ci + 1));
    auto n = make_node(std::move(out), {x});
    if (n->track) {
        Node<T>*nr = n.get(), *xr = x.get();
        n->backprop = [nr, xr, c, h, w] {
            auto& g = xr->g();
            for (int ci = 0; ci < c; ++ci)
                kernels::sobel_adjoint(nr->grad.plane(2 * ci), nr->grad.plane(2 * ci + 1), h, w,
                                       g.plane(ci));
        };
    }
    return n;
}

template <typename T>
Var<T> concat_c(const Var<T>& a, const Var<T>& b) {
    if (a->value.h != b->value.h || a->value.w != b->value.w)
        throw DimError("concat_c: spatial mismatch");
    const int ca = a->value.c, cb = b->value.c, h = a->value.h, w = a->value.w;
    Tensor<T> out(ca + cb, h, w);
    std::copy(a->value.v.begin(), a->value.v.end(), out.v.begin());
    std::copy(b->value.v.begin(), b->value.v.end(), out.v.begin() + a->value.size());
    auto n = make_node(std::move(out), {a, b});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get(), *br = b.get();
        const size_t na = a->value.size();
        n->backprop = [nr, ar, br, na] {
            if (ar->track) {
                auto& g = ar->g();
                for (size_t i = 0; i < na; ++i) g.v[i] += nr->grad.v[i];
            }
            if (br->track) {
                auto& g = br->g();
                for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[na + i];
            }
        };
    }
    return n;
}

/// Mode-3 product of base images v (r, h, w) with coefficients u (b, r, 1):
/// out(i) = sum_k u(i, k) * v(k).
template <typename T>
Var<T> mode3(const Var<T>& v, const Var<T>& u) {
    const int r = v->value.c, h = v->value.h, w = v->value.w;
    const int b = u->value.c;
    if (u->value.h != r || u->value.w != 1) throw DimError("mode3: rank mismatch");
    const Eigen::Index pixels = static_cast<Eigen::Index>(h) * w;
    Tensor<T> out(b, h, w);
    {
        detail::CMatMap<T> um(u->value.data(), b, r);
        detail::CMatMap<T> vm(v->value.data(), r, pixels);
        detail::MatMap<T> om(out.data(), b, pixels);
        om.noalias() = um * vm;
    }
    auto n = make_node(std::move(out), {v, u});
    if (n->track) {
        Node<T>*nr = n.get(), *vr = v.get(), *ur = u.get();
        n->backprop = [nr, vr, ur, b, r, pixels] {
            detail::CMatMap<T> dy(nr->grad.data(), b, pixels);
            if (ur->track) {
                detail::CMatMap<T> vm(vr->value.data(), r, pixels);
                detail::MatMap<T> du(ur->g().data(), b, r);
                du.noalias() += dy * vm.transpose();
            }
            if (vr->track) {
                detail::CMatMap<T> um(ur->value.data(), b, r);
                detail::MatMap<T> dv(vr->g().data(), r, pixels);
                dv.noalias() += um.transpose() * dy;
            }
        };
    }
    return n;
}

// ------------------------------------------------------------------ losses

/// Mean absolute difference; scalar output. Sums in double.
template <typename T>
Var<T> l1_loss(const Var<T>& a, const Var<T>& b) {
    if (!a->value.same_shape(b->value)) throw DimError("l1_loss: shape mismatch");
    const size_t count = a->value.size();
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i)
        acc += std::abs(static_cast<double>(a->value.v[i]) - static_cast<double>(b->value.v[i]));
    Tensor<T> out(1, 1, 1, static_cast<T>(acc / count));
    auto n = make_node(std::move(out), {a, b});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get(), *br = b.get();
        n->backprop = [nr, ar, br, count] {
            const T coeff = nr->grad.v[0] / static_cast<T>(count);
            T* ga = ar->track ? ar->g().data() : nullptr;
            T* gb = br->track ? br->g().data() : nullptr;
            for (size_t i = 0; i < count; ++i) {
                const T d = ar->value.v[i] - br->value.v[i];
                const T sg = d > T(0) ? coeff : (d < T(0) ? -coeff : T(0));
                if (ga) ga[i] += sg;
                if (gb) gb[i] -= sg;
            }
        };
    }
    return n;
}

/// Mean squared difference; scalar output. Sums in double.
template <typename T>
Var<T> mse_loss(const Var<T>& a, const Var<T>& b) {
    if (!a->value.same_shape(b->value)) throw DimError("mse_loss: shape mismatch");
    const size_t count = a->value.size();
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i) {
        const double d = static_cast<double>(a->value.v[i]) - static_cast<double>(b->value.v[i]);
        acc += d * d;
    }
    Tensor<T> out(1, 1, 1, static_cast<T>(acc / count));
    auto n = make_node(std::move(out), {a, b});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get(), *br = b.get();
        n->backprop = [nr, ar, br, count] {
            const T coeff = T(2) * nr->grad.v[0] / static_cast<T>(count);
            T* ga = ar->track ? ar->g().data() : nullptr;
            T* gb = br->track ? br->g().data() : nullptr;
            for (size_t i = 0; i < count; ++i) {
                const T d = ar->value.v[i] - br->value.v[i];
                if (ga) ga[i] += coeff * d;
                if (gb) gb[i] -= coeff * d;
            }
        };
    }
    return n;
}

template <typename T>
Var<T> sum_all(const Var<T>& a) {
    double acc = 0.0;
    for (const T& x : a->value.v) acc += static_cast<double>(x);
    Tensor<T> out(1, 1, 1, static_cast<T>(acc));
    auto n = make_node(std::move(out), {a});
    if (n->track) {
        Node<T>*nr = n.get(), *ar = a.get();
        n->backprop = [nr, ar] {
            auto& g = ar->g();
            for (size_t i = 0; i < g.size(); ++i) g.v[i] += nr->grad.v[0];
        };
    }
    return n;
}

/// Constant copy of a node's value; gradients do not pass through.
template <typename T>
Var<T> detach(const Var<T>& a) {
    return constant(a->value);
}

} // namespace hipandas::ad
