#pragma once

// Low-level single-plane numeric kernels shared by the degradation model and
// the autodiff ops. Each linear kernel comes with its adjoint (the transpose
// map used for backpropagation). All loops are serial and index-ordered, so
// results are bit-reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hipandas/common.hpp"

namespace hipandas::kernels {

// ---------------------------------------------------------------- area mean

/// s x s block mean, dims must be divisible by s. Accumulates in double.
template <typename T>
void area_downsample(const T* in, int h, int w, int s, T* out) {
    const int oh = h / s, ow = w / s;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < s; ++dy) {
                const T* row = in + static_cast<size_t>(y * s + dy) * w + x * s;
                for (int dx = 0; dx < s; ++dx) acc += static_cast<double>(row[dx]);
            }
            out[static_cast<size_t>(y) * ow + x] = static_cast<T>(acc / (s * s));
        }
    }
}

/// Adjoint of area_downsample: spreads each output gradient uniformly.
template <typename T>
void area_downsample_adjoint(const T* gout, int oh, int ow, int s, T* gin_accum) {
    const int w = ow * s;
    const T inv = static_cast<T>(1.0 / (s * s));
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const T g = gout[static_cast<size_t>(y) * ow + x] * inv;
            for (int dy = 0; dy < s; ++dy) {
                T* row = gin_accum + static_cast<size_t>(y * s + dy) * w + x * s;
                for (int dx = 0; dx < s; ++dx) row[dx] += g;
            }
        }
    }
}

// ------------------------------------------------------------------ bicubic

/// Catmull-Rom cubic kernel (a = -0.5).
inline double cubic_weight(double t) {
    t = std::abs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

/// Per-output-coordinate taps for 1-D bicubic interpolation at integer scale
/// factor s, pixel-center alignment, edge replication via index clamping.
struct BicubicAxis {
    std::vector<std::array<int, 4>> idx;
    std::vector<std::array<double, 4>> wgt;
};

inline BicubicAxis bicubic_axis(int in_n, int s) {
    BicubicAxis ax;
    const int out_n = in_n * s;
    ax.idx.resize(out_n);
    ax.wgt.resize(out_n);
    for (int o = 0; o < out_n; ++o) {
        const double src = (o + 0.5) / s - 0.5;
        const int i0 = static_cast<int>(std::floor(src));
        const double f = src - i0;
        const std::array<double, 4> w = {cubic_weight(1.0 + f), cubic_weight(f),
                                         cubic_weight(1.0 - f), cubic_weight(2.0 - f)};
        for (int k = 0; k < 4; ++k) {
            ax.idx[o][k] = std::clamp(i0 - 1 + k, 0, in_n - 1);
            ax.wgt[o][k] = w[k];
        }
    }
    return ax;
}

/// Separable bicubic upsample of an h x w plane to (h*s) x (w*s).
template <typename T>
void bicubic_upsample(const T* in, int h, int w, const BicubicAxis& ay, const BicubicAxis& ax,
                      T* out) {
    const int oh = static_cast<int>(ay.idx.size());
    const int ow = static_cast<int>(ax.idx.size());
    // horizontal pass: h x ow
    std::vector<T> tmp(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        const T* row = in + static_cast<size_t>(y) * w;
        T* trow = tmp.data() + static_cast<size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += ax.wgt[x][k] * static_cast<double>(row[ax.idx[x][k]]);
            trow[x] = static_cast<T>(acc);
        }
    }
    // vertical pass: oh x ow
    for (int y = 0; y < oh; ++y) {
        T* orow = out + static_cast<size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                acc += ay.wgt[y][k] * static_cast<double>(tmp[static_cast<size_t>(ay.idx[y][k]) * ow + x]);
            orow[x] = static_cast<T>(acc);
        }
    }
}

/// Adjoint of bicubic_upsample: scatter gradients through both passes.
template <typename T>
void bicubic_upsample_adjoint(const T* gout, int h, int w, const BicubicAxis& ay,
                              const BicubicAxis& ax, T* gin_accum) {
    const int oh = static_cast<int>(ay.idx.size());
    const int ow = static_cast<int>(ax.idx.size());
    std::vector<T> gtmp(static_cast<size_t>(h) * ow, T(0));
    for (int y = 0; y < oh; ++y) {
        const T* grow = gout + static_cast<size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            const T g = grow[x];
            for (int k = 0; k < 4; ++k)
                gtmp[static_cast<size_t>(ay.idx[y][k]) * ow + x] += static_cast<T>(ay.wgt[y][k]) * g;
        }
    }
    for (int y = 0; y < h; ++y) {
        const T* trow = gtmp.data() + static_cast<size_t>(y) * ow;
        T* irow = gin_accum + static_cast<size_t>(y) * w;
        for (int x = 0; x < ow; ++x) {
            const T g = trow[x];
            for (int k = 0; k < 4; ++k) irow[ax.idx[x][k]] += static_cast<T>(ax.wgt[x][k]) * g;
        }
    }
}

// -------------------------------------------------------------------- sobel

// 3x3 Sobel taps, replicate padding. gx responds to horizontal gradients,
// gy to vertical ones.
inline constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

template <typename T>
void sobel(const T* in, int h, int w, T* gx, T* gy) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double ax = 0.0, ay = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                const T* row = in + static_cast<size_t>(sy) * w;
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    const double v = static_cast<double>(row[sx]);
                    ax += kSobelX[dy + 1][dx + 1] * v;
                    ay += kSobelY[dy + 1][dx + 1] * v;
                }
            }
            gx[static_cast<size_t>(y) * w + x] = static_cast<T>(ax);
            gy[static_cast<size_t>(y) * w + x] = static_cast<T>(ay);
        }
    }
}

/// Adjoint of sobel: scatter both response-map gradients back to the input.
template <typename T>
void sobel_adjoint(const T* ggx, const T* ggy, int h, int w, T* gin_accum) {
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const T gx = ggx[static_cast<size_t>(y) * w + x];
            const T gy = ggy[static_cast<size_t>(y) * w + x];
            for (int dy = -1; dy <= 1; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    gin_accum[static_cast<size_t>(sy) * w + sx] +=
                        static_cast<T>(kSobelX[dy + 1][dx + 1]) * gx +
                        static_cast<T>(kSobelY[dy + 1][dx + 1]) * gy;
                }
            }
        }
    }
}

// ------------------------------------------------------------------- im2col

/// Unrolls 3x3 patches (zero padding 1) of a (c, h, w) tensor into a
/// (c*9) x (oh*ow) row-major matrix.
template <typename T>
void im2col3(const T* in, int c, int h, int w, int stride, T* col) {
    const int oh = (h - 1) / stride + 1;
    const int ow = (w - 1) / stride + 1;
    const size_t patch = static_cast<size_t>(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        const T* plane = in + static_cast<size_t>(ci) * h * w;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* dst = col + (static_cast<size_t>(ci) * 9 + ky * 3 + kx) * patch;
                for (int oy = 0; oy < oh; ++oy) {
                    const int sy = oy * stride + ky - 1;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst + static_cast<size_t>(oy) * ow, dst + static_cast<size_t>(oy + 1) * ow, T(0));
                        continue;
                    }
                    const T* srow = plane + static_cast<size_t>(sy) * w;
                    T* drow = dst + static_cast<size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int sx = ox * stride + kx - 1;
                        drow[ox] = (sx >= 0 && sx < w) ? srow[sx] : T(0);
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col3: scatter-add a column-space gradient back to (c, h, w).
template <typename T>
void col2im3_add(const T* gcol, int c, int h, int w, int stride, T* gin_accum) {
    const int oh = (h - 1) / stride + 1;
    const int ow = (w - 1) / stride + 1;
    const size_t patch = static_cast<size_t>(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        T* plane = gin_accum + static_cast<size_t>(ci) * h * w;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* src = gcol + (static_cast<size_t>(ci) * 9 + ky * 3 + kx) * patch;
                for (int oy = 0; oy < oh; ++oy) {
                    const int sy = oy * stride + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    T* srow = plane + static_cast<size_t>(sy) * w;
                    const T* grow = src + static_cast<size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int sx = ox * stride + kx - 1;
                        if (sx >= 0 && sx < w) srow[sx] += grow[ox];
                    }
                }
            }
        }
    }
}

} // namespace hipandas::kernels
