#include "hdnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <tuple>

namespace hdnet::ops {

namespace {

bool any_grad(std::initializer_list<const Tensor*> ts) {
    for (const Tensor* t : ts)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

// outer / axis-length / inner split for reductions along one axis
// Output-coordinate range [lo, hi) whose input index o*stride + off stays
// inside [0, limit); lets convolution inner loops run without bounds checks.
long valid_lo(long off, long stride) {
    return off >= 0 ? 0 : (-off + stride - 1) / stride;
}

long valid_hi(long off, long stride, std::size_t limit, std::size_t out_limit) {
    const long last = (static_cast<long>(limit) - 1 - off) / stride;
    return std::max(0l, std::min(static_cast<long>(out_limit), last + 1));
}

struct AxisSplit {
    std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
    if (axis >= shape.size())
        throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                    " out of range for " + shape_str(shape));
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.len = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out = Tensor::zeros(a.shape(), any_grad({&a, &b}));
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                if (an->requires_grad) an->g[i] += on->g[i];
                if (bn->requires_grad) bn->g[i] += on->g[i];
            }
        });
    }
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out = Tensor::zeros(a.shape(), any_grad({&a, &b}));
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                if (an->requires_grad) an->g[i] += on->g[i];
                if (bn->requires_grad) bn->g[i] -= on->g[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out = Tensor::zeros(a.shape(), any_grad({&a, &b}));
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                if (an->requires_grad) an->g[i] += on->g[i] * bn->v[i];
                if (bn->requires_grad) bn->g[i] += on->g[i] * an->v[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * c;
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, c, n] {
            for (std::size_t i = 0; i < n; ++i) xn->g[i] += on->g[i] * c;
        });
    }
    return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, n] {
            for (std::size_t i = 0; i < n; ++i)
                if (xn->v[i] > 0.0) xn->g[i] += on->g[i];
        });
    }
    return out;
}

Tensor softplus(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = x.data()[i];
        // stable log(1+exp(v))
        out.data()[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 1.0 / (1.0 + std::exp(-xn->v[i]));
                xn->g[i] += on->g[i] * s;
            }
        });
    }
    return out;
}

Tensor abs(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::fabs(x.data()[i]);
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, n] {
            for (std::size_t i = 0; i < n; ++i) {
                if (xn->v[i] > 0.0)
                    xn->g[i] += on->g[i];
                else if (xn->v[i] < 0.0)
                    xn->g[i] -= on->g[i];
            }
        });
    }
    return out;
}

Tensor log_eps(Tape& tape, const Tensor& x, double eps) {
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::log(x.data()[i] + eps);
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, eps, n] {
            for (std::size_t i = 0; i < n; ++i) xn->g[i] += on->g[i] / (xn->v[i] + eps);
        });
    }
    return out;
}

Tensor mul_const(Tape& tape, const Tensor& x, const std::vector<double>& mask) {
    if (mask.size() != x.size())
        throw std::invalid_argument("mul_const: mask size " + std::to_string(mask.size()) +
                                    " does not match tensor " + shape_str(x.shape()));
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * mask[i];
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, mask, n] {
            for (std::size_t i = 0; i < n; ++i) xn->g[i] += on->g[i] * mask[i];
        });
    }
    return out;
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n}, any_grad({&a, &b}));
    const double* av = a.data();
    const double* bv = b.data();
    double* ov = out.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av_ip = av[i * k + p];
            if (av_ip == 0.0) continue;
            const double* brow = bv + p * n;
            double* orow = ov + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av_ip * brow[j];
        }
    if (out.requires_grad()) {
        auto an = a.node(), bn = b.node(), on = out.node();
        tape.record([an, bn, on, m, k, n] {
            if (an->requires_grad) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double go = on->g[i * n + j];
                        if (go == 0.0) continue;
                        for (std::size_t p = 0; p < k; ++p)
                            an->g[i * k + p] += go * bn->v[p * n + j];
                    }
            }
            if (bn->requires_grad) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av_ip = an->v[i * k + p];
                        if (av_ip == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j)
                            bn->g[p * n + j] += av_ip * on->g[i * n + j];
                    }
            }
        });
    }
    return out;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor out = matmul(tape, x, w);
    if (!b.defined()) return out;
    if (b.ndim() != 1 || b.dim(0) != out.dim(1))
        throw std::invalid_argument("linear: bias shape " + shape_str(b.shape()) +
                                    " does not match output " + shape_str(out.shape()));
    const std::size_t rows = out.dim(0), cols = out.dim(1);
    Tensor y = Tensor::zeros(out.shape(), any_grad({&out, &b}));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) y.data()[i * cols + j] = out.data()[i * cols + j] + b.data()[j];
    if (y.requires_grad()) {
        auto on = out.node(), bn = b.node(), yn = y.node();
        tape.record([on, bn, yn, rows, cols] {
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) {
                    const double g = yn->g[i * cols + j];
                    if (on->requires_grad) on->g[i * cols + j] += g;
                    if (bn->requires_grad) bn->g[j] += g;
                }
        });
    }
    return y;
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int pad) {
    if (x.ndim() != 4 || w.ndim() != 4)
        throw std::invalid_argument("conv2d: expected 4-d input and weight, got " +
                                    shape_str(x.shape()) + " and " + shape_str(w.shape()));
    if (x.dim(1) != w.dim(1))
        throw std::invalid_argument("conv2d: input channels " + std::to_string(x.dim(1)) +
                                    " != weight channels " + std::to_string(w.dim(1)));
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t F = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const long Hp = static_cast<long>(H) + 2 * pad - static_cast<long>(kh);
    const long Wp = static_cast<long>(W) + 2 * pad - static_cast<long>(kw);
    if (Hp < 0 || Wp < 0)
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    const std::size_t Ho = static_cast<std::size_t>(Hp) / stride + 1;
    const std::size_t Wo = static_cast<std::size_t>(Wp) / stride + 1;
    if (b.defined() && (b.ndim() != 1 || b.dim(0) != F))
        throw std::invalid_argument("conv2d: bias shape " + shape_str(b.shape()) +
                                    " does not match " + std::to_string(F) + " filters");

    Tensor out = Tensor::zeros({N, F, Ho, Wo}, any_grad({&x, &w, &b}));
    const double* xv = x.data();
    const double* wv = w.data();
    double* ov = out.data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t f = 0; f < F; ++f) {
            double* oplane = ov + (n * F + f) * Ho * Wo;
            if (b.defined()) {
                const double bias = b.data()[f];
                for (std::size_t i = 0; i < Ho * Wo; ++i) oplane[i] = bias;
            }
            for (std::size_t c = 0; c < C; ++c) {
                const double* xplane = xv + (n * C + c) * H * W;
                const double* wk = wv + (f * C + c) * kh * kw;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const long oy0 = valid_lo(static_cast<long>(ky) - pad, stride);
                    const long oy1 = valid_hi(static_cast<long>(ky) - pad, stride, H, Ho);
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const double wt = wk[ky * kw + kx];
                        if (wt == 0.0) continue;
                        const long xoff = static_cast<long>(kx) - pad;
                        const long ox0 = valid_lo(xoff, stride);
                        const long ox1 = valid_hi(xoff, stride, W, Wo);
                        for (long oy = oy0; oy < oy1; ++oy) {
                            const long iy = oy * stride + static_cast<long>(ky) - pad;
                            const double* xrow = xplane + iy * W;
                            double* orow = oplane + oy * Wo;
                            if (stride == 1) {
                                const double* xs = xrow + xoff;
                                for (long ox = ox0; ox < ox1; ++ox) orow[ox] += wt * xs[ox];
                            } else {
                                for (long ox = ox0; ox < ox1; ++ox)
                                    orow[ox] += wt * xrow[ox * stride + xoff];
                            }
                        }
                    }
                }
            }
        }
    }
    if (out.requires_grad()) {
        auto xn = x.node(), wn = w.node(), on = out.node();
        auto bn = b.defined() ? b.node() : nullptr;
        const int s = stride, p = pad;
        tape.record([xn, wn, bn, on, N, C, H, W, F, kh, kw, Ho, Wo, s, p] {
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t f = 0; f < F; ++f) {
                    const double* gplane = on->g.data() + (n * F + f) * Ho * Wo;
                    if (bn && bn->requires_grad) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < Ho * Wo; ++i) acc += gplane[i];
                        bn->g[f] += acc;
                    }
                    for (std::size_t c = 0; c < C; ++c) {
                        const double* xplane = xn->v.data() + (n * C + c) * H * W;
                        double* gxplane = xn->requires_grad ? xn->g.data() + (n * C + c) * H * W : nullptr;
                        const double* wk = wn->v.data() + (f * C + c) * kh * kw;
                        double* gwk = wn->requires_grad ? wn->g.data() + (f * C + c) * kh * kw : nullptr;
                        for (std::size_t ky = 0; ky < kh; ++ky) {
                            const long oy0 = valid_lo(static_cast<long>(ky) - p, s);
                            const long oy1 = valid_hi(static_cast<long>(ky) - p, s, H, Ho);
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const double wt = wk[ky * kw + kx];
                                const long xoff = static_cast<long>(kx) - p;
                                const long ox0 = valid_lo(xoff, s);
                                const long ox1 = valid_hi(xoff, s, W, Wo);
                                double wacc = 0.0;
                                for (long oy = oy0; oy < oy1; ++oy) {
                                    const long iy = oy * s + static_cast<long>(ky) - p;
                                    const double* xrow = xplane + iy * W;
                                    double* gxrow = gxplane ? gxplane + iy * W : nullptr;
                                    const double* grow = gplane + oy * Wo;
                                    if (s == 1) {
                                        const double* xs = xrow + xoff;
                                        if (gxrow) {
                                            double* gs = gxrow + xoff;
                                            for (long ox = ox0; ox < ox1; ++ox) {
                                                const double g = grow[ox];
                                                gs[ox] += wt * g;
                                                wacc += xs[ox] * g;
                                            }
                                        } else {
                                            for (long ox = ox0; ox < ox1; ++ox)
                                                wacc += xs[ox] * grow[ox];
                                        }
                                    } else {
                                        for (long ox = ox0; ox < ox1; ++ox) {
                                            const long ix = ox * s + xoff;
                                            const double g = grow[ox];
                                            if (gxrow) gxrow[ix] += wt * g;
                                            wacc += xrow[ix] * g;
                                        }
                                    }
                                }
                                if (gwk) gwk[ky * kw + kx] += wacc;
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor batchnorm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 double momentum, double eps, std::size_t channel_axis) {
    if (eps <= 0.0) throw std::invalid_argument("batchnorm: eps must be > 0");
    const AxisSplit sp = split_axis("batchnorm", x.shape(), channel_axis);
    const std::size_t C = sp.len;
    if (gamma.size() != C || beta.size() != C || running_mean.size() != C || running_var.size() != C)
        throw std::invalid_argument("batchnorm: parameter size does not match " +
                                    std::to_string(C) + " channels");
    const std::size_t m = sp.outer * sp.inner;
    std::vector<double> mean(C), var(C);
    if (training) {
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t o = 0; o < sp.outer; ++o) {
                const double* base = x.data() + (o * C + c) * sp.inner;
                for (std::size_t i = 0; i < sp.inner; ++i) s += base[i];
            }
            mean[c] = s / static_cast<double>(m);
            double s2 = 0.0;
            for (std::size_t o = 0; o < sp.outer; ++o) {
                const double* base = x.data() + (o * C + c) * sp.inner;
                for (std::size_t i = 0; i < sp.inner; ++i) {
                    const double d = base[i] - mean[c];
                    s2 += d * d;
                }
            }
            var[c] = s2 / static_cast<double>(m);
            running_mean.data()[c] = momentum * running_mean.data()[c] + (1.0 - momentum) * mean[c];
            running_var.data()[c] = momentum * running_var.data()[c] + (1.0 - momentum) * var[c];
        }
    } else {
        std::copy(running_mean.data(), running_mean.data() + C, mean.begin());
        std::copy(running_var.data(), running_var.data() + C, var.begin());
    }

    std::vector<double> invstd(C);
    for (std::size_t c = 0; c < C; ++c) invstd[c] = 1.0 / std::sqrt(var[c] + eps);

    Tensor out = Tensor::zeros(x.shape(), any_grad({&x, &gamma, &beta}));
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t c = 0; c < C; ++c) {
            const double* base = x.data() + (o * C + c) * sp.inner;
            double* xh = xhat->data() + (o * C + c) * sp.inner;
            double* ob = out.data() + (o * C + c) * sp.inner;
            for (std::size_t i = 0; i < sp.inner; ++i) {
                xh[i] = (base[i] - mean[c]) * invstd[c];
                ob[i] = gamma.data()[c] * xh[i] + beta.data()[c];
            }
        }

    if (out.requires_grad()) {
        auto xn = x.node(), gn = gamma.node(), bn = beta.node(), on = out.node();
        tape.record([xn, gn, bn, on, xhat, invstd, sp, C, m, training] {
            for (std::size_t c = 0; c < C; ++c) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t o = 0; o < sp.outer; ++o) {
                    const double* g = on->g.data() + (o * C + c) * sp.inner;
                    const double* xh = xhat->data() + (o * C + c) * sp.inner;
                    for (std::size_t i = 0; i < sp.inner; ++i) {
                        sum_dy += g[i];
                        sum_dy_xhat += g[i] * xh[i];
                    }
                }
                if (gn->requires_grad) gn->g[c] += sum_dy_xhat;
                if (bn->requires_grad) bn->g[c] += sum_dy;
                if (xn->requires_grad) {
                    const double gamma_c = gn->v[c];
                    const double istd = invstd[c];
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (std::size_t o = 0; o < sp.outer; ++o) {
                        const double* g = on->g.data() + (o * C + c) * sp.inner;
                        const double* xh = xhat->data() + (o * C + c) * sp.inner;
                        double* gx = xn->g.data() + (o * C + c) * sp.inner;
                        for (std::size_t i = 0; i < sp.inner; ++i) {
                            if (training) {
                                gx[i] += gamma_c * istd *
                                         (g[i] - inv_m * sum_dy - xh[i] * inv_m * sum_dy_xhat);
                            } else {
                                gx[i] += gamma_c * istd * g[i];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor softmax(Tape& tape, const Tensor& x, std::size_t axis) {
    const AxisSplit sp = split_axis("softmax", x.shape(), axis);
    if (sp.len == 0) throw std::invalid_argument("softmax: empty axis");
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            const std::size_t base = o * sp.len * sp.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < sp.len; ++l)
                mx = std::max(mx, x.data()[base + l * sp.inner]);
            double sum = 0.0;
            for (std::size_t l = 0; l < sp.len; ++l) {
                const double e = std::exp(x.data()[base + l * sp.inner] - mx);
                out.data()[base + l * sp.inner] = e;
                sum += e;
            }
            for (std::size_t l = 0; l < sp.len; ++l) out.data()[base + l * sp.inner] /= sum;
        }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, sp] {
            for (std::size_t o = 0; o < sp.outer; ++o)
                for (std::size_t i = 0; i < sp.inner; ++i) {
                    const std::size_t base = o * sp.len * sp.inner + i;
                    double dot = 0.0;
                    for (std::size_t l = 0; l < sp.len; ++l)
                        dot += on->g[base + l * sp.inner] * on->v[base + l * sp.inner];
                    for (std::size_t l = 0; l < sp.len; ++l)
                        xn->g[base + l * sp.inner] +=
                            on->v[base + l * sp.inner] * (on->g[base + l * sp.inner] - dot);
                }
        });
    }
    return out;
}

Tensor upsample_nearest(Tape& tape, const Tensor& x, int factor) {
    if (x.ndim() != 4) throw std::invalid_argument("upsample_nearest: expected 4-d input");
    if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t f = static_cast<std::size_t>(factor), Ho = H * f, Wo = W * f;
    Tensor out = Tensor::zeros({N, C, Ho, Wo}, x.requires_grad());
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const double* ip = x.data() + nc * H * W;
        double* op = out.data() + nc * Ho * Wo;
        for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t xx = 0; xx < Wo; ++xx) op[y * Wo + xx] = ip[(y / f) * W + xx / f];
    }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, N, C, H, W, Ho, Wo, f] {
            for (std::size_t nc = 0; nc < N * C; ++nc) {
                double* gi = xn->g.data() + nc * H * W;
                const double* go = on->g.data() + nc * Ho * Wo;
                for (std::size_t y = 0; y < Ho; ++y)
                    for (std::size_t xx = 0; xx < Wo; ++xx) gi[(y / f) * W + xx / f] += go[y * Wo + xx];
            }
        });
    }
    return out;
}

Tensor upsample_bilinear(Tape& tape, const Tensor& x, int factor) {
    if (x.ndim() != 4) throw std::invalid_argument("upsample_bilinear: expected 4-d input");
    if (factor < 1) throw std::invalid_argument("upsample_bilinear: factor must be >= 1");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t f = static_cast<std::size_t>(factor), Ho = H * f, Wo = W * f;

    // precomputed source indices/weights, align_corners=false convention
    auto axis_map = [f](std::size_t out_len, std::size_t in_len) {
        std::vector<std::size_t> i0(out_len), i1(out_len);
        std::vector<double> w1(out_len);
        for (std::size_t o = 0; o < out_len; ++o) {
            double src = (static_cast<double>(o) + 0.5) / static_cast<double>(f) - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_len - 1));
            i0[o] = static_cast<std::size_t>(std::floor(src));
            i1[o] = std::min(i0[o] + 1, in_len - 1);
            w1[o] = src - static_cast<double>(i0[o]);
        }
        return std::tuple(i0, i1, w1);
    };
    auto [y0, y1, wy] = axis_map(Ho, H);
    auto [x0, x1, wx] = axis_map(Wo, W);

    Tensor out = Tensor::zeros({N, C, Ho, Wo}, x.requires_grad());
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const double* ip = x.data() + nc * H * W;
        double* op = out.data() + nc * Ho * Wo;
        for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t xx = 0; xx < Wo; ++xx) {
                const double a = 1.0 - wy[y], b = wy[y], c = 1.0 - wx[xx], d = wx[xx];
                op[y * Wo + xx] = a * c * ip[y0[y] * W + x0[xx]] + a * d * ip[y0[y] * W + x1[xx]] +
                                  b * c * ip[y1[y] * W + x0[xx]] + b * d * ip[y1[y] * W + x1[xx]];
            }
    }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, N, C, H, W, Ho, Wo, y0 = y0, y1 = y1, wy = wy, x0 = x0, x1 = x1,
                     wx = wx] {
            for (std::size_t nc = 0; nc < N * C; ++nc) {
                double* gi = xn->g.data() + nc * H * W;
                const double* go = on->g.data() + nc * Ho * Wo;
                for (std::size_t y = 0; y < Ho; ++y)
                    for (std::size_t xx = 0; xx < Wo; ++xx) {
                        const double g = go[y * Wo + xx];
                        const double a = 1.0 - wy[y], b = wy[y], c = 1.0 - wx[xx], d = wx[xx];
                        gi[y0[y] * W + x0[xx]] += a * c * g;
                        gi[y0[y] * W + x1[xx]] += a * d * g;
                        gi[y1[y] * W + x0[xx]] += b * c * g;
                        gi[y1[y] * W + x1[xx]] += b * d * g;
                    }
            }
        });
    }
    return out;
}

Tensor avgpool2x2(Tape& tape, const Tensor& x) {
    if (x.ndim() != 4) throw std::invalid_argument("avgpool2x2: expected 4-d input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("avgpool2x2: spatial size " + shape_str(x.shape()) +
                                    " not divisible by 2");
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor out = Tensor::zeros({N, C, Ho, Wo}, x.requires_grad());
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const double* ip = x.data() + nc * H * W;
        double* op = out.data() + nc * Ho * Wo;
        for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t xx = 0; xx < Wo; ++xx)
                op[y * Wo + xx] = 0.25 * (ip[2 * y * W + 2 * xx] + ip[2 * y * W + 2 * xx + 1] +
                                          ip[(2 * y + 1) * W + 2 * xx] + ip[(2 * y + 1) * W + 2 * xx + 1]);
    }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, N, C, H, W, Ho, Wo] {
            for (std::size_t nc = 0; nc < N * C; ++nc) {
                double* gi = xn->g.data() + nc * H * W;
                const double* go = on->g.data() + nc * Ho * Wo;
                for (std::size_t y = 0; y < Ho; ++y)
                    for (std::size_t xx = 0; xx < Wo; ++xx) {
                        const double g = 0.25 * go[y * Wo + xx];
                        gi[2 * y * W + 2 * xx] += g;
                        gi[2 * y * W + 2 * xx + 1] += g;
                        gi[(2 * y + 1) * W + 2 * xx] += g;
                        gi[(2 * y + 1) * W + 2 * xx + 1] += g;
                    }
            }
        });
    }
    return out;
}

Tensor global_avgpool(Tape& tape, const Tensor& x) {
    if (x.ndim() != 4) throw std::invalid_argument("global_avgpool: expected 4-d input");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Tensor out = Tensor::zeros({N, C}, x.requires_grad());
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const double* ip = x.data() + nc * HW;
        double s = 0.0;
        for (std::size_t i = 0; i < HW; ++i) s += ip[i];
        out.data()[nc] = s / static_cast<double>(HW);
    }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, N, C, HW] {
            const double inv = 1.0 / static_cast<double>(HW);
            for (std::size_t nc = 0; nc < N * C; ++nc) {
                const double g = on->g[nc] * inv;
                double* gi = xn->g.data() + nc * HW;
                for (std::size_t i = 0; i < HW; ++i) gi[i] += g;
            }
        });
    }
    return out;
}

Tensor concat(Tape& tape, const std::vector<Tensor>& xs, std::size_t axis) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input list");
    const Shape& s0 = xs[0].shape();
    Shape out_shape = s0;
    for (std::size_t t = 1; t < xs.size(); ++t) {
        const Shape& s = xs[t].shape();
        if (s.size() != s0.size())
            throw std::invalid_argument("concat: rank mismatch");
        for (std::size_t i = 0; i < s.size(); ++i)
            if (i != axis && s[i] != s0[i])
                throw std::invalid_argument("concat: shape mismatch " + shape_str(s0) + " vs " +
                                            shape_str(s) + " along axis " + std::to_string(axis));
        out_shape[axis] += s[axis];
    }
    AxisSplit sp = split_axis("concat", out_shape, axis);
    bool rg = false;
    for (const Tensor& t : xs) rg = rg || t.requires_grad();
    Tensor out = Tensor::zeros(out_shape, rg);

    std::size_t off = 0;
    std::vector<std::size_t> offsets;
    for (const Tensor& t : xs) {
        offsets.push_back(off);
        const std::size_t blk = t.shape()[axis] * sp.inner;
        for (std::size_t o = 0; o < sp.outer; ++o)
            std::memcpy(out.data() + o * sp.len * sp.inner + off * sp.inner,
                        t.data() + o * blk, blk * sizeof(double));
        off += t.shape()[axis];
    }
    if (rg) {
        std::vector<std::shared_ptr<TensorData>> nodes;
        std::vector<std::size_t> lens;
        for (const Tensor& t : xs) {
            nodes.push_back(t.node());
            lens.push_back(t.shape()[axis]);
        }
        auto on = out.node();
        tape.record([nodes, lens, offsets, on, sp] {
            for (std::size_t t = 0; t < nodes.size(); ++t) {
                if (!nodes[t]->requires_grad) continue;
                const std::size_t blk = lens[t] * sp.inner;
                for (std::size_t o = 0; o < sp.outer; ++o) {
                    const double* go = on->g.data() + o * sp.len * sp.inner + offsets[t] * sp.inner;
                    double* gi = nodes[t]->g.data() + o * blk;
                    for (std::size_t i = 0; i < blk; ++i) gi[i] += go[i];
                }
            }
        });
    }
    return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
    if (numel(shape) != x.size())
        throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                    shape_str(shape));
    Tensor out = Tensor::from(std::move(shape), x.values(), x.requires_grad());
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on] {
            for (std::size_t i = 0; i < xn->g.size(); ++i) xn->g[i] += on->g[i];
        });
    }
    return out;
}

Tensor sum_all(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    Tensor out = Tensor::scalar(s, x.requires_grad());
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on] {
            const double g = on->g[0];
            for (std::size_t i = 0; i < xn->g.size(); ++i) xn->g[i] += g;
        });
    }
    return out;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
    return scale(tape, sum_all(tape, x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean_axis1(Tape& tape, const Tensor& x) {
    if (x.ndim() != 3) throw std::invalid_argument("mean_axis1: expected 3-d input");
    const std::size_t N = x.dim(0), J = x.dim(1), C = x.dim(2);
    Tensor out = Tensor::zeros({N, C}, x.requires_grad());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t c = 0; c < C; ++c)
                out.data()[n * C + c] += x.data()[(n * J + j) * C + c] / static_cast<double>(J);
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, N, J, C] {
            const double inv = 1.0 / static_cast<double>(J);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < J; ++j)
                    for (std::size_t c = 0; c < C; ++c)
                        xn->g[(n * J + j) * C + c] += on->g[n * C + c] * inv;
        });
    }
    return out;
}

Tensor normalize_sum(Tape& tape, const Tensor& x, std::size_t axis) {
    const AxisSplit sp = split_axis("normalize_sum", x.shape(), axis);
    Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
    auto sums = std::make_shared<std::vector<double>>(sp.outer * sp.inner);
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t i = 0; i < sp.inner; ++i) {
            const std::size_t base = o * sp.len * sp.inner + i;
            double s = 0.0;
            for (std::size_t l = 0; l < sp.len; ++l) s += x.data()[base + l * sp.inner];
            if (s == 0.0)
                throw std::domain_error("normalize_sum: zero total mass along axis " +
                                        std::to_string(axis));
            (*sums)[o * sp.inner + i] = s;
            for (std::size_t l = 0; l < sp.len; ++l)
                out.data()[base + l * sp.inner] = x.data()[base + l * sp.inner] / s;
        }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, sums, sp] {
            for (std::size_t o = 0; o < sp.outer; ++o)
                for (std::size_t i = 0; i < sp.inner; ++i) {
                    const std::size_t base = o * sp.len * sp.inner + i;
                    const double s = (*sums)[o * sp.inner + i];
                    double dot = 0.0;
                    for (std::size_t l = 0; l < sp.len; ++l)
                        dot += on->g[base + l * sp.inner] * on->v[base + l * sp.inner];
                    for (std::size_t l = 0; l < sp.len; ++l)
                        xn->g[base + l * sp.inner] += (on->g[base + l * sp.inner] - dot) / s;
                }
        });
    }
    return out;
}

Tensor graph_mix(Tape& tape, const Tensor& x, const std::vector<double>& m, std::size_t rows) {
    if (x.ndim() != 3) throw std::invalid_argument("graph_mix: expected 3-d input");
    const std::size_t N = x.dim(0), J = x.dim(1), C = x.dim(2);
    if (m.size() != rows * J)
        throw std::invalid_argument("graph_mix: matrix size " + std::to_string(m.size()) +
                                    " does not match " + std::to_string(rows) + "x" + std::to_string(J));
    Tensor out = Tensor::zeros({N, rows, C}, x.requires_grad());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < J; ++j) {
                const double w = m[i * J + j];
                if (w == 0.0) continue;
                const double* xr = x.data() + (n * J + j) * C;
                double* orow = out.data() + (n * rows + i) * C;
                for (std::size_t c = 0; c < C; ++c) orow[c] += w * xr[c];
            }
    if (out.requires_grad()) {
        auto xn = x.node(), on = out.node();
        tape.record([xn, on, m, rows, N, J, C] {
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < J; ++j) {
                        const double w = m[i * J + j];
                        if (w == 0.0) continue;
                        const double* go = on->g.data() + (n * rows + i) * C;
                        double* gx = xn->g.data() + (n * J + j) * C;
                        for (std::size_t c = 0; c < C; ++c) gx[c] += w * go[c];
                    }
        });
    }
    return out;
}

Tensor attention_pool(Tape& tape, const Tensor& heatmaps, const Tensor& features) {
    if (heatmaps.ndim() != 4 || features.ndim() != 4)
        throw std::invalid_argument("attention_pool: expected 4-d heatmaps and features");
    if (heatmaps.dim(0) != features.dim(0) || heatmaps.dim(2) != features.dim(2) ||
        heatmaps.dim(3) != features.dim(3))
        throw std::invalid_argument("attention_pool: spatial mismatch " +
                                    shape_str(heatmaps.shape()) + " vs " + shape_str(features.shape()));
    const std::size_t N = heatmaps.dim(0), J = heatmaps.dim(1), C = features.dim(1);
    const std::size_t HW = heatmaps.dim(2) * heatmaps.dim(3);
    Tensor out = Tensor::zeros({N, J, C}, any_grad({&heatmaps, &features}));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < J; ++j) {
            const double* h = heatmaps.data() + (n * J + j) * HW;
            double* orow = out.data() + (n * J + j) * C;
            for (std::size_t c = 0; c < C; ++c) {
                const double* f = features.data() + (n * C + c) * HW;
                double acc = 0.0;
                for (std::size_t p = 0; p < HW; ++p) acc += h[p] * f[p];
                orow[c] = acc;
            }
        }
    if (out.requires_grad()) {
        auto hn = heatmaps.node(), fn = features.node(), on = out.node();
        tape.record([hn, fn, on, N, J, C, HW] {
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < J; ++j) {
                    const double* go = on->g.data() + (n * J + j) * C;
                    const double* h = hn->v.data() + (n * J + j) * HW;
                    double* gh = hn->requires_grad ? hn->g.data() + (n * J + j) * HW : nullptr;
                    for (std::size_t c = 0; c < C; ++c) {
                        const double g = go[c];
                        if (g == 0.0) continue;
                        const double* f = fn->v.data() + (n * C + c) * HW;
                        double* gf = fn->requires_grad ? fn->g.data() + (n * C + c) * HW : nullptr;
                        for (std::size_t p = 0; p < HW; ++p) {
                            if (gh) gh[p] += g * f[p];
                            if (gf) gf[p] += g * h[p];
                        }
                    }
                }
        });
    }
    return out;
}

}  // namespace hdnet::ops
