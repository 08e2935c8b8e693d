// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/conv_kernels.hpp"

#include <Eigen/Core>

namespace avi {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

int out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// col is (C*kh*kw) x (OH*OW), row-major.
void im2col_2d(const Tensor& x, int kh, int kw, int stride, int pad, int oh, int ow,
               std::vector<double>& col) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    col.assign(static_cast<size_t>(c) * kh * kw * oh * ow, 0.0);
    const long n = static_cast<long>(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                double* dst = col.data() + (static_cast<long>(ci) * kh * kw + ki * kw + kj) * n;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= h) {
                        dst += ow;
                        continue;
                    }
                    const double* src = x.data.data() + (static_cast<size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        *dst++ = (ix >= 0 && ix < w) ? src[ix] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_2d(const std::vector<double>& col, int c, int h, int w, int kh, int kw, int stride,
               int pad, int oh, int ow, Tensor& dx) {
    const long n = static_cast<long>(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const double* src = col.data() + (static_cast<long>(ci) * kh * kw + ki * kw + kj) * n;
                for (int oy = 0; oy < oh; ++oy, src += ow) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= h) continue;
                    double* dst = dx.data.data() + (static_cast<size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

// 3-D analogues; col is (C*kt*kh*kw) x (OT*OH*OW).
void im2col_3d(const Tensor& x, int kt, int kh, int kw, std::array<int, 3> stride,
               std::array<int, 3> pad, int ot, int oh, int ow, std::vector<double>& col) {
    const int c = x.dim(0), t = x.dim(1), h = x.dim(2), w = x.dim(3);
    col.assign(static_cast<size_t>(c) * kt * kh * kw * ot * oh * ow, 0.0);
    const long n = static_cast<long>(ot) * oh * ow;
    for (int ci = 0; ci < c; ++ci) {
        for (int kti = 0; kti < kt; ++kti) {
            for (int ki = 0; ki < kh; ++ki) {
                for (int kj = 0; kj < kw; ++kj) {
                    const long row = ((static_cast<long>(ci) * kt + kti) * kh + ki) * kw + kj;
                    double* dst = col.data() + row * n;
                    for (int oz = 0; oz < ot; ++oz) {
                        const int iz = oz * stride[0] - pad[0] + kti;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride[1] - pad[1] + ki;
                            for (int ox = 0; ox < ow; ++ox, ++dst) {
                                const int ix = ox * stride[2] - pad[2] + kj;
                                if (iz >= 0 && iz < t && iy >= 0 && iy < h && ix >= 0 && ix < w)
                                    *dst = x.data[((static_cast<size_t>(ci) * t + iz) * h + iy) * w + ix];
                            }
                        }
                    }
                }
            }
        }
    }
}

void col2im_3d(const std::vector<double>& col, const std::vector<int>& xshape, int kt, int kh,
               int kw, std::array<int, 3> stride, std::array<int, 3> pad, int ot, int oh, int ow,
               Tensor& dx) {
    const int c = xshape[0], t = xshape[1], h = xshape[2], w = xshape[3];
    const long n = static_cast<long>(ot) * oh * ow;
    for (int ci = 0; ci < c; ++ci) {
        for (int kti = 0; kti < kt; ++kti) {
            for (int ki = 0; ki < kh; ++ki) {
                for (int kj = 0; kj < kw; ++kj) {
                    const long row = ((static_cast<long>(ci) * kt + kti) * kh + ki) * kw + kj;
                    const double* src = col.data() + row * n;
                    for (int oz = 0; oz < ot; ++oz) {
                        const int iz = oz * stride[0] - pad[0] + kti;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride[1] - pad[1] + ki;
                            for (int ox = 0; ox < ow; ++ox, ++src) {
                                const int ix = ox * stride[2] - pad[2] + kj;
                                if (iz >= 0 && iz < t && iy >= 0 && iy < h && ix >= 0 && ix < w)
                                    dx.data[((static_cast<size_t>(ci) * t + iz) * h + iy) * w + ix] += *src;
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad) {
    if (x.rank() != 3 || w.rank() != 4 || x.dim(0) != w.dim(1))
        throw InvalidInputError("conv2d: shape mismatch x" + x.shape_str() + " w" + w.shape_str());
    const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = out_extent(x.dim(1), kh, stride, pad);
    const int ow = out_extent(x.dim(2), kw, stride, pad);
    if (oh <= 0 || ow <= 0) throw InvalidInputError("conv2d: input smaller than kernel");

    std::vector<double> col;
    im2col_2d(x, kh, kw, stride, pad, oh, ow, col);
    const long k = static_cast<long>(x.dim(0)) * kh * kw;
    const long n = static_cast<long>(oh) * ow;

    Tensor y({oc, oh, ow});
    MapM ym(y.data.data(), oc, n);
    MapC wm(w.data.data(), oc, k);
    MapC cm(col.data(), k, n);
    ym.noalias() = wm * cm;
    if (b) {
        for (int o = 0; o < oc; ++o) ym.row(o).array() += b->data[static_cast<size_t>(o)];
    }
    return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int stride, int pad,
                     Tensor* dx, Tensor* dw, Tensor* db) {
    const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = dy.dim(1), ow = dy.dim(2);
    const long k = static_cast<long>(x.dim(0)) * kh * kw;
    const long n = static_cast<long>(oh) * ow;
    MapC dym(dy.data.data(), oc, n);

    if (db) {
        // Scalar accumulation keeps results independent of buffer alignment.
        for (int o = 0; o < oc; ++o) {
            const double* row = dy.data.data() + static_cast<size_t>(o) * n;
            double s = 0.0;
            for (long i = 0; i < n; ++i) s += row[i];
            db->data[static_cast<size_t>(o)] += s;
        }
    }
    if (dw) {
        std::vector<double> col;
        im2col_2d(x, kh, kw, stride, pad, oh, ow, col);
        MapC cm(col.data(), k, n);
        MapM dwm(dw->data.data(), oc, k);
        dwm.noalias() += dym * cm.transpose();
    }
    if (dx) {
        std::vector<double> dcol(static_cast<size_t>(k) * n);
        MapM dcm(dcol.data(), k, n);
        MapC wm(w.data.data(), oc, k);
        dcm.noalias() = wm.transpose() * dym;
        col2im_2d(dcol, x.dim(0), x.dim(1), x.dim(2), kh, kw, stride, pad, oh, ow, *dx);
    }
}

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor* b,
                      std::array<int, 3> stride, std::array<int, 3> pad) {
    if (x.rank() != 4 || w.rank() != 5 || x.dim(0) != w.dim(1))
        throw InvalidInputError("conv3d: shape mismatch x" + x.shape_str() + " w" + w.shape_str());
    const int oc = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    const int ot = out_extent(x.dim(1), kt, stride[0], pad[0]);
    const int oh = out_extent(x.dim(2), kh, stride[1], pad[1]);
    const int ow = out_extent(x.dim(3), kw, stride[2], pad[2]);
    if (ot <= 0 || oh <= 0 || ow <= 0) throw InvalidInputError("conv3d: input smaller than kernel");

    std::vector<double> col;
    im2col_3d(x, kt, kh, kw, stride, pad, ot, oh, ow, col);
    const long k = static_cast<long>(x.dim(0)) * kt * kh * kw;
    const long n = static_cast<long>(ot) * oh * ow;

    Tensor y({oc, ot, oh, ow});
    MapM ym(y.data.data(), oc, n);
    MapC wm(w.data.data(), oc, k);
    MapC cm(col.data(), k, n);
    ym.noalias() = wm * cm;
    if (b) {
        for (int o = 0; o < oc; ++o) ym.row(o).array() += b->data[static_cast<size_t>(o)];
    }
    return y;
}

void conv3d_backward(const Tensor& x, const Tensor& w, const Tensor& dy,
                     std::array<int, 3> stride, std::array<int, 3> pad,
                     Tensor* dx, Tensor* dw, Tensor* db) {
    const int oc = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
    const int ot = dy.dim(1), oh = dy.dim(2), ow = dy.dim(3);
    const long k = static_cast<long>(x.dim(0)) * kt * kh * kw;
    const long n = static_cast<long>(ot) * oh * ow;
    MapC dym(dy.data.data(), oc, n);

    if (db) {
        // Scalar accumulation keeps results independent of buffer alignment.
        for (int o = 0; o < oc; ++o) {
            const double* row = dy.data.data() + static_cast<size_t>(o) * n;
            double s = 0.0;
            for (long i = 0; i < n; ++i) s += row[i];
            db->data[static_cast<size_t>(o)] += s;
        }
    }
    if (dw) {
        std::vector<double> col;
        im2col_3d(x, kt, kh, kw, stride, pad, ot, oh, ow, col);
        MapC cm(col.data(), k, n);
        MapM dwm(dw->data.data(), oc, k);
        dwm.noalias() += dym * cm.transpose();
    }
    if (dx) {
        std::vector<double> dcol(static_cast<size_t>(k) * n);
        MapM dcm(dcol.data(), k, n);
        MapC wm(w.data.data(), oc, k);
        dcm.noalias() = wm.transpose() * dym;
        col2im_3d(dcol, x.shape, kt, kh, kw, stride, pad, ot, oh, ow, *dx);
    }
}

}  // namespace avi
