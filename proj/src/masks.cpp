// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/masks.hpp"

#include <algorithm>
#include <cmath>

#include "avinpaint/common.hpp"
#include "avinpaint/image.hpp"

namespace avi::masks {

namespace {

constexpr double kPi = 3.14159265358979323846;

void stamp_disc(BinaryMask& m, double cy, double cx, double r) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(m.h - 1, static_cast<int>(std::ceil(cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(m.w - 1, static_cast<int>(std::ceil(cx + r)));
    const double r2 = r * r;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dy = y - cy, dx = x - cx;
            if (dy * dy + dx * dx <= r2) m.at(y, x) = 1;
        }
}

void stamp_stroke(BinaryMask& m, Rng& rng) {
    const double diag = std::sqrt(static_cast<double>(m.h) * m.h + static_cast<double>(m.w) * m.w);
    double y = rng.uniform(0.0, m.h - 1.0);
    double x = rng.uniform(0.0, m.w - 1.0);
    double angle = rng.uniform(0.0, 2.0 * kPi);
    const double thickness = rng.uniform(3.0, std::max(4.0, diag / 40.0));
    const int n_segments = rng.uniform_int(2, 5);
    for (int s = 0; s < n_segments; ++s) {
        const double len = rng.uniform(diag / 16.0, diag / 6.0);
        const double ny = y + len * std::sin(angle);
        const double nx = x + len * std::cos(angle);
        const int steps = std::max(1, static_cast<int>(len / (thickness * 0.5)));
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            stamp_disc(m, y + t * (ny - y), x + t * (nx - x), thickness);
        }
        y = ny;
        x = nx;
        angle += rng.uniform(-kPi / 3.0, kPi / 3.0);
    }
}

void stamp_ellipse(BinaryMask& m, Rng& rng) {
    const double cy = rng.uniform(0.0, m.h - 1.0);
    const double cx = rng.uniform(0.0, m.w - 1.0);
    const double ry = rng.uniform(m.h / 40.0, m.h / 10.0);
    const double rx = rng.uniform(m.w / 40.0, m.w / 10.0);
    const double rot = rng.uniform(0.0, kPi);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const double ext = std::max(ry, rx);
    const int y0 = std::max(0, static_cast<int>(cy - ext)), y1 = std::min(m.h - 1, static_cast<int>(cy + ext));
    const int x0 = std::max(0, static_cast<int>(cx - ext)), x1 = std::min(m.w - 1, static_cast<int>(cx + ext));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dy = y - cy, dx = x - cx;
            const double u = (dx * cr + dy * sr) / rx;
            const double v = (-dx * sr + dy * cr) / ry;
            if (u * u + v * v <= 1.0) m.at(y, x) = 1;
        }
}

BinaryMask morph3x3(const BinaryMask& mask, bool dilate) {
    BinaryMask out(mask.h, mask.w);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            uint8_t v = dilate ? 0 : 1;
            for (int dy = -1; dy <= 1 && v == (dilate ? 0 : 1); ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    // Outside the canvas counts as background.
                    const uint8_t n =
                        (yy >= 0 && yy < mask.h && xx >= 0 && xx < mask.w) ? mask.at(yy, xx) : 0;
                    if (dilate && n) {
                        v = 1;
                        break;
                    }
                    if (!dilate && !n) {
                        v = 0;
                        break;
                    }
                }
            out.at(y, x) = v;
        }
    return out;
}

BinaryMask centered_square(int h, int w, double target_ratio) {
    BinaryMask m(h, w);
    const int side = std::min({h, w, static_cast<int>(std::lround(
                                         std::sqrt(target_ratio * static_cast<double>(h) * w)))});
    const int y0 = (h - side) / 2, x0 = (w - side) / 2;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(y, x) = 1;
    return m;
}

}  // namespace

long BinaryMask::count() const {
    long n = 0;
    for (uint8_t v : grid) n += v;
    return n;
}

double coverage(const BinaryMask& mask) {
    if (mask.h <= 0 || mask.w <= 0) throw InvalidInputError("coverage: empty mask dimensions");
    return static_cast<double>(mask.count()) / (static_cast<double>(mask.h) * mask.w);
}

BinaryMask generate_imask(int h, int w, double target_ratio, Rng& rng) {
    if (h <= 0 || w <= 0) throw InvalidInputError("generate_imask: dimensions must be positive");
    if (!(target_ratio > 0.0 && target_ratio < 0.5))
        throw InvalidInputError("generate_imask: target_ratio must be in (0, 0.5)");
    const double tol = 0.02;
    for (int attempt = 0; attempt < 64; ++attempt) {
        BinaryMask m(h, w);
        for (int step = 0; step < 256; ++step) {
            const double cov = coverage(m);
            if (cov >= target_ratio - tol) {
                if (cov <= target_ratio + tol) return m;
                break;  // overshot, restart
            }
            if (rng.uniform() < 0.6)
                stamp_stroke(m, rng);
            else
                stamp_ellipse(m, rng);
        }
    }
    throw GenerationError("generate_imask: could not reach target ratio " +
                          std::to_string(target_ratio));
}

SmaskResult generate_smask(const BinaryMask& object_mask, double target_ratio) {
    if (object_mask.h <= 0 || object_mask.w <= 0)
        throw InvalidInputError("generate_smask: empty mask dimensions");
    SmaskResult res;
    if (object_mask.empty_mask()) {
        res.mask = centered_square(object_mask.h, object_mask.w, target_ratio);
        res.fallback_used = true;
        return res;
    }
    BinaryMask cur = object_mask;
    double cov = coverage(cur);
    if (cov < target_ratio) {
        while (cov < target_ratio) {
            cur = dilate3x3(cur);
            const double next = coverage(cur);
            if (next == cov) break;  // saturated canvas
            cov = next;
        }
    } else if (cov > target_ratio) {
        while (cov > target_ratio) {
            BinaryMask next = erode3x3(cur);
            if (next.empty_mask()) {
                res.mask = centered_square(object_mask.h, object_mask.w, target_ratio);
                res.fallback_used = true;
                return res;
            }
            cur = std::move(next);
            cov = coverage(cur);
        }
    }
    res.mask = std::move(cur);
    return res;
}

Tensor apply_mask(const Tensor& frame, const BinaryMask& mask) {
    if (frame.rank() != 3 || frame.dim(0) != 3 || frame.dim(1) != mask.h || frame.dim(2) != mask.w)
        throw InvalidInputError("apply_mask: frame " + frame.shape_str() + " does not match mask " +
                                std::to_string(mask.h) + "x" + std::to_string(mask.w));
    Tensor out({4, mask.h, mask.w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < mask.h; ++y)
            for (int x = 0; x < mask.w; ++x)
                out.at3(c, y, x) = mask.at(y, x) ? 0.0 : frame.at3(c, y, x);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) out.at3(3, y, x) = mask.at(y, x) ? 1.0 : 0.0;
    return out;
}

BinaryMask dilate3x3(const BinaryMask& mask) { return morph3x3(mask, true); }
BinaryMask erode3x3(const BinaryMask& mask) { return morph3x3(mask, false); }

BinaryMask upsample_nearest(const BinaryMask& mask, int out_h, int out_w) {
    BinaryMask out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::min(mask.h - 1, y * mask.h / out_h);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::min(mask.w - 1, x * mask.w / out_w);
            out.at(y, x) = mask.at(sy, sx);
        }
    }
    return out;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
    Tensor t({mask.h, mask.w});
    for (long i = 0; i < t.numel(); ++i) t.data[static_cast<size_t>(i)] = mask.grid[static_cast<size_t>(i)];
    return t;
}

BinaryMask mask_from_tensor_threshold(const Tensor& map, double tau) {
    if (map.rank() != 2) throw InvalidInputError("mask_from_tensor_threshold: expected (H,W)");
    BinaryMask m(map.dim(0), map.dim(1));
    for (long i = 0; i < map.numel(); ++i)
        m.grid[static_cast<size_t>(i)] = map.data[static_cast<size_t>(i)] > tau ? 1 : 0;
    return m;
}

void write_mask_png(const std::string& path, const BinaryMask& mask) {
    ImageU8 img;
    img.width = mask.w;
    img.height = mask.h;
    img.channels = 1;
    img.data.resize(mask.grid.size());
    for (size_t i = 0; i < mask.grid.size(); ++i) img.data[i] = mask.grid[i] ? 255 : 0;
    write_png(path, img);
}

BinaryMask read_mask_png(const std::string& path) {
    const ImageU8 img = read_png(path);
    BinaryMask m(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            // Any nonzero value in any channel counts as hole.
            uint8_t v = 0;
            for (int c = 0; c < img.channels; ++c) v |= img.at(y, x, c);
            m.at(y, x) = v ? 1 : 0;
        }
    return m;
}

}  // namespace avi::masks
