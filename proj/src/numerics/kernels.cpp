#include "lmd/numerics/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lmd::numerics::kernels {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                                " and " + to_string(b.shape()));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                    ", got shape " + to_string(t.shape()));
    }
}

float sigmoid(float v) { return 1.0f / (1.0f + std::exp(-v)); }

// Dot product with eight independent partial sums so the loop vectorizes
// without reassociation flags. Order is fixed, so results are reproducible.
float dot(const float* a, const float* b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
    }
    float tail = 0.0f;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

struct ConvDims {
    std::size_t batch, in_ch, out_ch, height, width, kernel, pad;
    std::size_t plane() const { return height * width; }
    std::size_t patch() const { return in_ch * kernel * kernel; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w) {
    require_rank("conv2d", x, 4);
    require_rank("conv2d", w, 4);
    if (w.dim(1) != x.dim(1) || w.dim(2) != w.dim(3) || w.dim(2) % 2 == 0) shape_error("conv2d", x, w);
    return {x.dim(0), x.dim(1), w.dim(0), x.dim(2), x.dim(3), w.dim(2), w.dim(2) / 2};
}

// col[(ci*K + ky)*K + kx][y*W + x] = x[ci][y + ky - pad][x + kx - pad], zero outside.
void im2col(const float* image, const ConvDims& d, float* col) {
    const std::size_t hw = d.plane();
    for (std::size_t ci = 0; ci < d.in_ch; ++ci) {
        const float* src = image + ci * hw;
        for (std::size_t ky = 0; ky < d.kernel; ++ky) {
            for (std::size_t kx = 0; kx < d.kernel; ++kx) {
                float* dst = col + ((ci * d.kernel + ky) * d.kernel + kx) * hw;
                for (std::size_t y = 0; y < d.height; ++y) {
                    const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad);
                    float* row = dst + y * d.width;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(d.height)) {
                        std::fill(row, row + d.width, 0.0f);
                        continue;
                    }
                    const float* src_row = src + static_cast<std::size_t>(sy) * d.width;
                    for (std::size_t x = 0; x < d.width; ++x) {
                        const auto sx = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(d.pad);
                        row[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(d.width))
                                     ? 0.0f
                                     : src_row[static_cast<std::size_t>(sx)];
                    }
                }
            }
        }
    }
}

void col2im_accumulate(const float* col, const ConvDims& d, float* image) {
    const std::size_t hw = d.plane();
    for (std::size_t ci = 0; ci < d.in_ch; ++ci) {
        float* dst = image + ci * hw;
        for (std::size_t ky = 0; ky < d.kernel; ++ky) {
            for (std::size_t kx = 0; kx < d.kernel; ++kx) {
                const float* src = col + ((ci * d.kernel + ky) * d.kernel + kx) * hw;
                for (std::size_t y = 0; y < d.height; ++y) {
                    const auto sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(d.pad);
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(d.height)) continue;
                    float* dst_row = dst + static_cast<std::size_t>(sy) * d.width;
                    for (std::size_t x = 0; x < d.width; ++x) {
                        const auto sx = static_cast<std::ptrdiff_t>(x + kx) - static_cast<std::ptrdiff_t>(d.pad);
                        if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(d.width)) continue;
                        dst_row[static_cast<std::size_t>(sx)] += src[y * d.width + x];
                    }
                }
            }
        }
    }
}

std::vector<float>& scratch(std::size_t slot, std::size_t size) {
    thread_local std::vector<float> buffers[2];
    auto& buf = buffers[slot];
    if (buf.size() < size) buf.resize(size);
    return buf;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("sub", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Tensor scale(const Tensor& a, float factor) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
    return out;
}

Tensor silu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * sigmoid(x[i]);
    return out;
}

void silu_backward(const Tensor& x, const Tensor& grad_out, Tensor& grad_x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float s = sigmoid(x[i]);
        grad_x[i] += grad_out[i] * s * (1.0f + x[i] * (1.0f - s));
    }
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank("affine", x, 2);
    require_rank("affine", w, 2);
    require_rank("affine", b, 1);
    if (w.dim(1) != x.dim(1)) shape_error("affine", x, w);
    if (b.dim(0) != w.dim(0)) shape_error("affine", w, b);
    const std::size_t batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
    Tensor out({batch, out_dim});
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < out_dim; ++o) {
            out[n * out_dim + o] = b[o] + dot(w.raw() + o * in, x.raw() + n * in, in);
        }
    }
    return out;
}

void affine_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b) {
    const std::size_t batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < out_dim; ++o) {
            const float g = grad_out[n * out_dim + o];
            if (grad_b) (*grad_b)[o] += g;
            for (std::size_t i = 0; i < in; ++i) {
                if (grad_w) (*grad_w)[o * in + i] += g * x[n * in + i];
                if (grad_x) (*grad_x)[n * in + i] += g * w[o * in + i];
            }
        }
    }
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    const ConvDims d = conv_dims(x, w);
    require_rank("conv2d", b, 1);
    if (b.dim(0) != d.out_ch) shape_error("conv2d", w, b);

    const std::size_t hw = d.plane(), patch = d.patch();
    Tensor out({d.batch, d.out_ch, d.height, d.width});
    auto& col = scratch(0, patch * hw);
    for (std::size_t n = 0; n < d.batch; ++n) {
        im2col(x.raw() + n * d.in_ch * hw, d, col.data());
        float* out_n = out.raw() + n * d.out_ch * hw;
        std::size_t co = 0;
        // Four output channels per pass share each column load.
        for (; co + 4 <= d.out_ch; co += 4) {
            float* r0 = out_n + co * hw;
            float* r1 = r0 + hw;
            float* r2 = r1 + hw;
            float* r3 = r2 + hw;
            std::fill(r0, r0 + hw, b[co]);
            std::fill(r1, r1 + hw, b[co + 1]);
            std::fill(r2, r2 + hw, b[co + 2]);
            std::fill(r3, r3 + hw, b[co + 3]);
            const float* w0 = w.raw() + co * patch;
            const float* w1 = w0 + patch;
            const float* w2 = w1 + patch;
            const float* w3 = w2 + patch;
            for (std::size_t k = 0; k < patch; ++k) {
                const float* c = col.data() + k * hw;
                const float a0 = w0[k], a1 = w1[k], a2 = w2[k], a3 = w3[k];
                for (std::size_t p = 0; p < hw; ++p) {
                    const float v = c[p];
                    r0[p] += a0 * v;
                    r1[p] += a1 * v;
                    r2[p] += a2 * v;
                    r3[p] += a3 * v;
                }
            }
        }
        for (; co < d.out_ch; ++co) {
            float* r = out_n + co * hw;
            std::fill(r, r + hw, b[co]);
            const float* wr = w.raw() + co * patch;
            for (std::size_t k = 0; k < patch; ++k) {
                const float* c = col.data() + k * hw;
                const float a = wr[k];
                for (std::size_t p = 0; p < hw; ++p) r[p] += a * c[p];
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b) {
    const ConvDims d = conv_dims(x, w);
    const std::size_t hw = d.plane(), patch = d.patch();
    auto& col = scratch(0, patch * hw);
    auto& gcol = scratch(1, patch * hw);
    for (std::size_t n = 0; n < d.batch; ++n) {
        const float* gy = grad_out.raw() + n * d.out_ch * hw;
        if (grad_b) {
            for (std::size_t co = 0; co < d.out_ch; ++co) {
                float s = 0.0f;
                for (std::size_t p = 0; p < hw; ++p) s += gy[co * hw + p];
                (*grad_b)[co] += s;
            }
        }
        if (grad_w) {
            im2col(x.raw() + n * d.in_ch * hw, d, col.data());
            for (std::size_t co = 0; co < d.out_ch; ++co) {
                for (std::size_t k = 0; k < patch; ++k) {
                    (*grad_w)[co * patch + k] += dot(gy + co * hw, col.data() + k * hw, hw);
                }
            }
        }
        if (grad_x) {
            std::fill(gcol.begin(), gcol.begin() + static_cast<std::ptrdiff_t>(patch * hw), 0.0f);
            for (std::size_t co = 0; co < d.out_ch; ++co) {
                const float* g = gy + co * hw;
                for (std::size_t k = 0; k < patch; ++k) {
                    const float a = w[co * patch + k];
                    float* dst = gcol.data() + k * hw;
                    for (std::size_t p = 0; p < hw; ++p) dst[p] += a * g[p];
                }
            }
            col2im_accumulate(gcol.data(), d, grad_x->raw() + n * d.in_ch * hw);
        }
    }
}

Tensor mean_pool2(const Tensor& x) {
    require_rank("mean_pool2", x, 4);
    const std::size_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) {
        throw std::invalid_argument("mean_pool2: input too small " + to_string(x.shape()));
    }
    Tensor out({x.dim(0), x.dim(1), oh, ow});
    for (std::size_t p = 0; p < nc; ++p) {
        const float* src = x.raw() + p * h * w;
        float* dst = out.raw() + p * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                const float* s = src + 2 * y * w + 2 * xx;
                dst[y * ow + xx] = 0.25f * ((s[0] + s[1]) + (s[w] + s[w + 1]));
            }
        }
    }
    return out;
}

void mean_pool2_backward(const Tensor& grad_out, Tensor& grad_x) {
    const std::size_t nc = grad_x.dim(0) * grad_x.dim(1), h = grad_x.dim(2), w = grad_x.dim(3);
    const std::size_t oh = grad_out.dim(2), ow = grad_out.dim(3);
    for (std::size_t p = 0; p < nc; ++p) {
        const float* g = grad_out.raw() + p * oh * ow;
        float* dst = grad_x.raw() + p * h * w;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                const float v = 0.25f * g[y * ow + xx];
                float* s = dst + 2 * y * w + 2 * xx;
                s[0] += v;
                s[1] += v;
                s[w] += v;
                s[w + 1] += v;
            }
        }
    }
}

Tensor upsample2(const Tensor& x) {
    require_rank("upsample2", x, 4);
    const std::size_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out({x.dim(0), x.dim(1), 2 * h, 2 * w});
    for (std::size_t p = 0; p < nc; ++p) {
        const float* src = x.raw() + p * h * w;
        float* dst = out.raw() + p * 4 * h * w;
        for (std::size_t y = 0; y < 2 * h; ++y) {
            for (std::size_t xx = 0; xx < 2 * w; ++xx) dst[y * 2 * w + xx] = src[(y / 2) * w + xx / 2];
        }
    }
    return out;
}

void upsample2_backward(const Tensor& grad_out, Tensor& grad_x) {
    const std::size_t nc = grad_x.dim(0) * grad_x.dim(1), h = grad_x.dim(2), w = grad_x.dim(3);
    for (std::size_t p = 0; p < nc; ++p) {
        const float* g = grad_out.raw() + p * 4 * h * w;
        float* dst = grad_x.raw() + p * h * w;
        for (std::size_t y = 0; y < 2 * h; ++y) {
            for (std::size_t xx = 0; xx < 2 * w; ++xx) dst[(y / 2) * w + xx / 2] += g[y * 2 * w + xx];
        }
    }
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank("concat_channels", a, 4);
    require_rank("concat_channels", b, 4);
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        shape_error("concat_channels", a, b);
    }
    const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor out({batch, ca + cb, a.dim(2), a.dim(3)});
    for (std::size_t n = 0; n < batch; ++n) {
        std::copy_n(a.raw() + n * ca * hw, ca * hw, out.raw() + n * (ca + cb) * hw);
        std::copy_n(b.raw() + n * cb * hw, cb * hw, out.raw() + (n * (ca + cb) + ca) * hw);
    }
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& v) {
    require_rank("add_channel_bias", x, 4);
    require_rank("add_channel_bias", v, 2);
    if (v.dim(0) != x.dim(0) || v.dim(1) != x.dim(1)) shape_error("add_channel_bias", x, v);
    const std::size_t nc = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor out(x.shape());
    for (std::size_t p = 0; p < nc; ++p) {
        const float bias = v[p];
        const float* src = x.raw() + p * hw;
        float* dst = out.raw() + p * hw;
        for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] + bias;
    }
    return out;
}

void add_channel_bias_backward(const Tensor& grad_out, Tensor& grad_v) {
    const std::size_t nc = grad_v.size(), hw = grad_out.size() / nc;
    for (std::size_t p = 0; p < nc; ++p) {
        float s = 0.0f;
        const float* g = grad_out.raw() + p * hw;
        for (std::size_t i = 0; i < hw; ++i) s += g[i];
        grad_v[p] += s;
    }
}

float sum_of_squares(const Tensor& x) {
    double s = 0.0;
    for (float v : x.data()) s += static_cast<double>(v) * v;
    return static_cast<float>(s);
}

float mean(const Tensor& x) {
    double s = 0.0;
    for (float v : x.data()) s += v;
    return static_cast<float>(s / static_cast<double>(x.size()));
}

}  // namespace lmd::numerics::kernels
