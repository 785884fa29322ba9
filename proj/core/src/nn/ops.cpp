#include "pfoa/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/parallel.hpp"

namespace pfoa::nn {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

struct ConvDims {
    int n, c, h, w, k, kh, kw, ho, wo;
};

ConvDims conv_dims(const Shape& in, const Shape& ker, int stride, int pad) {
    require(in.size() == 4, "conv2d input must be N x C x H x W, got " + shape_str(in));
    require(ker.size() == 4, "conv2d kernel must be K x C x kh x kw, got " + shape_str(ker));
    require(in[1] == ker[1], "conv2d channel mismatch: input " + shape_str(in) + " vs kernel " +
                                 shape_str(ker));
    require(stride >= 1, "conv2d stride must be >= 1");
    require(pad >= 0, "conv2d pad must be >= 0");
    ConvDims d;
    d.n = in[0];
    d.c = in[1];
    d.h = in[2];
    d.w = in[3];
    d.k = ker[0];
    d.kh = ker[2];
    d.kw = ker[3];
    const int hspan = d.h + 2 * pad - d.kh;
    const int wspan = d.w + 2 * pad - d.kw;
    require(hspan >= 0 && wspan >= 0, "conv2d kernel " + shape_str(ker) +
                                          " larger than padded input " + shape_str(in));
    require(hspan % stride == 0 && wspan % stride == 0,
            "conv2d output size not integral for input " + shape_str(in) + ", kernel " +
                shape_str(ker) + ", stride " + std::to_string(stride) + ", pad " +
                std::to_string(pad));
    d.ho = hspan / stride + 1;
    d.wo = wspan / stride + 1;
    return d;
}

/// Unpacks one sample into a [C*kh*kw] x [ho*wo] patch matrix (zero padding).
void im2col(const double* img, const ConvDims& d, int stride, int pad, double* col) {
    const int out_px = d.ho * d.wo;
    for (int c = 0; c < d.c; ++c) {
        const double* plane = img + static_cast<std::size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                double* dst = col + static_cast<std::size_t>((c * d.kh + ki) * d.kw + kj) * out_px;
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(dst + oy * d.wo, dst + (oy + 1) * d.wo, 0.0);
                        continue;
                    }
                    const double* src_row = plane + static_cast<std::size_t>(iy) * d.w;
                    for (int ox = 0; ox < d.wo; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        dst[oy * d.wo + ox] = (ix < 0 || ix >= d.w) ? 0.0 : src_row[ix];
                    }
                }
            }
        }
    }
}

/// Scatter-add of a patch matrix back onto the image (transpose of im2col).
void col2im_add(const double* col, const ConvDims& d, int stride, int pad, double* img) {
    const int out_px = d.ho * d.wo;
    for (int c = 0; c < d.c; ++c) {
        double* plane = img + static_cast<std::size_t>(c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                const double* src =
                    col + static_cast<std::size_t>((c * d.kh + ki) * d.kw + kj) * out_px;
                for (int oy = 0; oy < d.ho; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= d.h) continue;
                    double* dst_row = plane + static_cast<std::size_t>(iy) * d.w;
                    for (int ox = 0; ox < d.wo; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < d.w) dst_row[ix] += src[oy * d.wo + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int pad) {
    const ConvDims d = conv_dims(input.shape(), kernel.shape(), stride, pad);
    const bool has_bias = bias.defined();
    if (has_bias)
        require(bias.shape() == Shape{d.k}, "conv2d bias must be [K]=" + shape_str({d.k}) +
                                                ", got " + shape_str(bias.shape()));

    const int rows = d.c * d.kh * d.kw;   // patch length
    const int out_px = d.ho * d.wo;
    const std::size_t in_stride = static_cast<std::size_t>(d.c) * d.h * d.w;
    const std::size_t out_stride = static_cast<std::size_t>(d.k) * out_px;

    std::vector<double> out(static_cast<std::size_t>(d.n) * out_stride);
    const double* in_v = input.values().data();
    const double* ker_v = kernel.values().data();
    const double* bias_v = has_bias ? bias.values().data() : nullptr;

    parallel_for(static_cast<std::size_t>(d.n), [&](std::size_t n) {
        std::vector<double> col(static_cast<std::size_t>(rows) * out_px);
        im2col(in_v + n * in_stride, d, stride, pad, col.data());
        double* out_n = out.data() + n * out_stride;
        for (int k = 0; k < d.k; ++k) {
            double* dst = out_n + static_cast<std::size_t>(k) * out_px;
            std::fill(dst, dst + out_px, bias_v ? bias_v[k] : 0.0);
            const double* kr = ker_v + static_cast<std::size_t>(k) * rows;
            for (int r = 0; r < rows; ++r) {
                const double kval = kr[r];
                if (kval == 0.0) continue;
                const double* src = col.data() + static_cast<std::size_t>(r) * out_px;
                for (int o = 0; o < out_px; ++o) dst[o] += kval * src[o];
            }
        }
    });

    std::vector<Tensor> parents = {input, kernel};
    if (has_bias) parents.push_back(bias);
    const int N = d.n, K = d.k;
    return make_op_result(
        {d.n, d.k, d.ho, d.wo}, std::move(out), std::move(parents),
        [d, stride, pad, rows, out_px, in_stride, out_stride, has_bias, N,
         K](TensorNode& self) {
            TensorNode* in_node = self.parents[0].node();
            TensorNode* ker_node = self.parents[1].node();
            TensorNode* bias_node = has_bias ? self.parents[2].node() : nullptr;
            const double* dout = self.grad.data();
            const double* in_v = in_node->values.data();
            const double* ker_v = ker_node->values.data();

            const std::size_t ker_sz = ker_node->values.size();
            std::vector<double> dker_slabs;
            std::vector<double> dbias_slabs;
            const bool need_ker = ker_node->requires_grad;
            const bool need_bias = bias_node && bias_node->requires_grad;
            const bool need_in = in_node->requires_grad;
            if (need_ker) dker_slabs.assign(static_cast<std::size_t>(N) * ker_sz, 0.0);
            if (need_bias) dbias_slabs.assign(static_cast<std::size_t>(N) * K, 0.0);

            std::vector<double> din;
            if (need_in) din.assign(in_node->values.size(), 0.0);

            parallel_for(static_cast<std::size_t>(N), [&](std::size_t n) {
                std::vector<double> col(static_cast<std::size_t>(rows) * out_px);
                im2col(in_v + n * in_stride, d, stride, pad, col.data());
                const double* dout_n = dout + n * out_stride;

                if (need_ker) {
                    double* dker_n = dker_slabs.data() + n * ker_sz;
                    for (int k = 0; k < K; ++k) {
                        const double* dy = dout_n + static_cast<std::size_t>(k) * out_px;
                        double* dk = dker_n + static_cast<std::size_t>(k) * rows;
                        for (int r = 0; r < rows; ++r) {
                            const double* src = col.data() + static_cast<std::size_t>(r) * out_px;
                            double acc = 0.0;
                            for (int o = 0; o < out_px; ++o) acc += dy[o] * src[o];
                            dk[r] += acc;
                        }
                    }
                }
                if (need_bias) {
                    double* db_n = dbias_slabs.data() + n * K;
                    for (int k = 0; k < K; ++k) {
                        const double* dy = dout_n + static_cast<std::size_t>(k) * out_px;
                        double acc = 0.0;
                        for (int o = 0; o < out_px; ++o) acc += dy[o];
                        db_n[k] = acc;
                    }
                }
                if (need_in) {
                    // dcol = kernel^T * dout, then fold back onto the image
                    std::vector<double> dcol(static_cast<std::size_t>(rows) * out_px, 0.0);
                    for (int k = 0; k < K; ++k) {
                        const double* dy = dout_n + static_cast<std::size_t>(k) * out_px;
                        const double* kr = ker_v + static_cast<std::size_t>(k) * rows;
                        for (int r = 0; r < rows; ++r) {
                            const double kval = kr[r];
                            if (kval == 0.0) continue;
                            double* dst = dcol.data() + static_cast<std::size_t>(r) * out_px;
                            for (int o = 0; o < out_px; ++o) dst[o] += kval * dy[o];
                        }
                    }
                    col2im_add(dcol.data(), d, stride, pad, din.data() + n * in_stride);
                }
            });

            // Fixed sample-order reductions keep results thread-count invariant.
            if (need_ker) {
                ker_node->ensure_grad();
                for (int n = 0; n < N; ++n) {
                    const double* slab = dker_slabs.data() + static_cast<std::size_t>(n) * ker_sz;
                    for (std::size_t i = 0; i < ker_sz; ++i) ker_node->grad[i] += slab[i];
                }
            }
            if (need_bias) {
                bias_node->ensure_grad();
                for (int n = 0; n < N; ++n) {
                    const double* slab = dbias_slabs.data() + static_cast<std::size_t>(n) * K;
                    for (int k = 0; k < K; ++k) bias_node->grad[k] += slab[k];
                }
            }
            if (need_in) in_node->accumulate_grad(din);
        });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, x.values()[i]);
    return make_op_result(x.shape(), std::move(out), {x}, [](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (xn->values[i] > 0.0) xn->grad[i] += self.grad[i];
    });
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x.values()[i]);
    return make_op_result(x.shape(), std::move(out), {x}, [](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double y = self.values[i];
            xn->grad[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Tensor maxpool2(const Tensor& x) {
    const Shape& s = x.shape();
    require(s.size() == 4, "maxpool2 input must be N x C x H x W, got " + shape_str(s));
    require(s[2] % 2 == 0 && s[3] % 2 == 0,
            "maxpool2 requires even spatial dims, got " + shape_str(s));
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    const int ho = h / 2, wo = w / 2;
    std::vector<double> out(static_cast<std::size_t>(n) * c * ho * wo);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    const auto& v = x.values();
    std::size_t oi = 0;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
            const std::size_t plane = (static_cast<std::size_t>(ni) * c + ci) * h * w;
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox, ++oi) {
                    std::size_t best_idx = plane + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
                    double best = v[best_idx];
                    // row-major scan; strict > keeps the first index on ties
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx =
                                plane + static_cast<std::size_t>(2 * oy + dy) * w + (2 * ox + dx);
                            if (v[idx] > best) {
                                best = v[idx];
                                best_idx = idx;
                            }
                        }
                    out[oi] = best;
                    (*argmax)[oi] = best_idx;
                }
        }
    return make_op_result({n, c, ho, wo}, std::move(out), {x}, [argmax](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            xn->grad[(*argmax)[i]] += self.grad[i];
    });
}

Tensor gap(const Tensor& x) {
    const Shape& s = x.shape();
    require(s.size() == 4, "gap input must be N x C x H x W, got " + shape_str(s));
    const int n = s[0], c = s[1], px = s[2] * s[3];
    std::vector<double> out(static_cast<std::size_t>(n) * c);
    const auto& v = x.values();
    for (int i = 0; i < n * c; ++i) {
        const double* plane = v.data() + static_cast<std::size_t>(i) * px;
        double acc = 0.0;
        for (int o = 0; o < px; ++o) acc += plane[o];
        out[static_cast<std::size_t>(i)] = acc / px;
    }
    return make_op_result({n, c}, std::move(out), {x}, [px](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double g = self.grad[i] / px;
            double* dst = xn->grad.data() + i * static_cast<std::size_t>(px);
            for (int o = 0; o < px; ++o) dst[o] += g;
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    require(xs.size() == 2, "linear input must be N x D, got " + shape_str(xs));
    require(ws.size() == 2, "linear weight must be M x D, got " + shape_str(ws));
    require(xs[1] == ws[1], "linear dimension mismatch: input " + shape_str(xs) + " vs weight " +
                                shape_str(ws));
    const bool has_bias = bias.defined();
    if (has_bias)
        require(bias.shape() == Shape{ws[0]}, "linear bias must be [M]=" + shape_str({ws[0]}) +
                                                  ", got " + shape_str(bias.shape()));
    const int n = xs[0], dim = xs[1], m = ws[0];
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    const auto& xv = x.values();
    const auto& wv = weight.values();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = has_bias ? bias.values()[static_cast<std::size_t>(j)] : 0.0;
            const double* xr = xv.data() + static_cast<std::size_t>(i) * dim;
            const double* wr = wv.data() + static_cast<std::size_t>(j) * dim;
            for (int d = 0; d < dim; ++d) acc += xr[d] * wr[d];
            out[static_cast<std::size_t>(i) * m + j] = acc;
        }

    std::vector<Tensor> parents = {x, weight};
    if (has_bias) parents.push_back(bias);
    return make_op_result({n, m}, std::move(out), std::move(parents),
                          [n, dim, m, has_bias](TensorNode& self) {
                              TensorNode* xn = self.parents[0].node();
                              TensorNode* wn = self.parents[1].node();
                              TensorNode* bn = has_bias ? self.parents[2].node() : nullptr;
                              const auto& dy = self.grad;
                              if (xn->requires_grad) {
                                  xn->ensure_grad();
                                  for (int i = 0; i < n; ++i)
                                      for (int j = 0; j < m; ++j) {
                                          const double g = dy[static_cast<std::size_t>(i) * m + j];
                                          const double* wr =
                                              wn->values.data() + static_cast<std::size_t>(j) * dim;
                                          double* dst =
                                              xn->grad.data() + static_cast<std::size_t>(i) * dim;
                                          for (int d = 0; d < dim; ++d) dst[d] += g * wr[d];
                                      }
                              }
                              if (wn->requires_grad) {
                                  wn->ensure_grad();
                                  for (int i = 0; i < n; ++i)
                                      for (int j = 0; j < m; ++j) {
                                          const double g = dy[static_cast<std::size_t>(i) * m + j];
                                          const double* xr =
                                              xn->values.data() + static_cast<std::size_t>(i) * dim;
                                          double* dst =
                                              wn->grad.data() + static_cast<std::size_t>(j) * dim;
                                          for (int d = 0; d < dim; ++d) dst[d] += g * xr[d];
                                      }
                              }
                              if (bn && bn->requires_grad) {
                                  bn->ensure_grad();
                                  for (int i = 0; i < n; ++i)
                                      for (int j = 0; j < m; ++j)
                                          bn->grad[static_cast<std::size_t>(j)] +=
                                              dy[static_cast<std::size_t>(i) * m + j];
                              }
                          });
}

Tensor concat_features(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_features needs at least one input");
    const int n = parts[0].shape()[0];
    int total = 0;
    for (const Tensor& p : parts) {
        require(p.shape().size() == 2, "concat_features inputs must be N x D, got " +
                                           shape_str(p.shape()));
        require(p.shape()[0] == n, "concat_features batch mismatch: " + shape_str(p.shape()) +
                                       " vs N=" + std::to_string(n));
        total += p.shape()[1];
    }
    std::vector<double> out(static_cast<std::size_t>(n) * total);
    std::vector<int> widths;
    int off = 0;
    for (const Tensor& p : parts) {
        const int d = p.shape()[1];
        widths.push_back(d);
        for (int i = 0; i < n; ++i)
            std::copy_n(p.values().data() + static_cast<std::size_t>(i) * d, d,
                        out.data() + static_cast<std::size_t>(i) * total + off);
        off += d;
    }
    return make_op_result({n, total}, std::move(out), parts,
                          [n, total, widths](TensorNode& self) {
                              int off = 0;
                              for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                                  TensorNode* p = self.parents[pi].node();
                                  const int d = widths[pi];
                                  if (p->requires_grad) {
                                      p->ensure_grad();
                                      for (int i = 0; i < n; ++i)
                                          for (int j = 0; j < d; ++j)
                                              p->grad[static_cast<std::size_t>(i) * d + j] +=
                                                  self.grad[static_cast<std::size_t>(i) * total +
                                                            off + j];
                                  }
                                  off += d;
                              }
                          });
}

Tensor broadcast_spatial(const Tensor& v, int height, int width) {
    const Shape& s = v.shape();
    require(s.size() == 2, "broadcast_spatial input must be N x C, got " + shape_str(s));
    require(height > 0 && width > 0, "broadcast_spatial needs positive H, W");
    const int n = s[0], c = s[1], px = height * width;
    std::vector<double> out(static_cast<std::size_t>(n) * c * px);
    for (int i = 0; i < n * c; ++i)
        std::fill_n(out.data() + static_cast<std::size_t>(i) * px, px,
                    v.values()[static_cast<std::size_t>(i)]);
    return make_op_result({n, c, height, width}, std::move(out), {v}, [px](TensorNode& self) {
        TensorNode* vn = self.parents[0].node();
        if (!vn->requires_grad) return;
        vn->ensure_grad();
        for (std::size_t i = 0; i < vn->grad.size(); ++i) {
            const double* src = self.grad.data() + i * static_cast<std::size_t>(px);
            double acc = 0.0;
            for (int o = 0; o < px; ++o) acc += src[o];
            vn->grad[i] += acc;
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "add shape mismatch: " + shape_str(a.shape()) + " vs " +
                                        shape_str(b.shape()));
    std::vector<double> out(a.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op_result(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
        for (int pi = 0; pi < 2; ++pi) {
            TensorNode* p = self.parents[static_cast<std::size_t>(pi)].node();
            if (p->requires_grad) p->accumulate_grad(self.grad);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    const bool channel_broadcast = as.size() == 4 && bs.size() == 4 && as[1] == 1 && bs[1] > 1 &&
                                   as[0] == bs[0] && as[2] == bs[2] && as[3] == bs[3];
    if (!channel_broadcast)
        require(as == bs, "mul shape mismatch: " + shape_str(as) + " vs " + shape_str(bs) +
                              " (only N x 1 x H x W against N x C x H x W may broadcast)");

    if (!channel_broadcast) {
        std::vector<double> out(a.values().size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
        return make_op_result(as, std::move(out), {a, b}, [](TensorNode& self) {
            TensorNode* an = self.parents[0].node();
            TensorNode* bn = self.parents[1].node();
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    an->grad[i] += self.grad[i] * bn->values[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    bn->grad[i] += self.grad[i] * an->values[i];
            }
        });
    }

    const int n = bs[0], c = bs[1], px = bs[2] * bs[3];
    std::vector<double> out(b.values().size());
    for (int ni = 0; ni < n; ++ni) {
        const double* map = a.values().data() + static_cast<std::size_t>(ni) * px;
        for (int ci = 0; ci < c; ++ci) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * px;
            for (int o = 0; o < px; ++o) out[base + o] = map[o] * b.values()[base + o];
        }
    }
    return make_op_result(bs, std::move(out), {a, b}, [n, c, px](TensorNode& self) {
        TensorNode* an = self.parents[0].node();
        TensorNode* bn = self.parents[1].node();
        if (an->requires_grad) {
            an->ensure_grad();
            for (int ni = 0; ni < n; ++ni) {
                double* da = an->grad.data() + static_cast<std::size_t>(ni) * px;
                for (int ci = 0; ci < c; ++ci) {
                    const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * px;
                    for (int o = 0; o < px; ++o)
                        da[o] += self.grad[base + o] * bn->values[base + o];
                }
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int ni = 0; ni < n; ++ni) {
                const double* map = an->values.data() + static_cast<std::size_t>(ni) * px;
                for (int ci = 0; ci < c; ++ci) {
                    const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * px;
                    for (int o = 0; o < px; ++o) bn->grad[base + o] += self.grad[base + o] * map[o];
                }
            }
        }
    });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    return make_op_result({1}, {acc}, {x}, [](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (double& g : xn->grad) g += self.grad[0];
    });
}

Tensor reshape(const Tensor& x, Shape new_shape) {
    require(shape_numel(new_shape) == x.numel(),
            "reshape from " + shape_str(x.shape()) + " to " + shape_str(new_shape) +
                " changes element count");
    std::vector<double> out = x.values();
    return make_op_result(std::move(new_shape), std::move(out), {x}, [](TensorNode& self) {
        TensorNode* xn = self.parents[0].node();
        if (xn->requires_grad) xn->accumulate_grad(self.grad);
    });
}

Tensor focal_loss(const Tensor& logits, const std::vector<int>& labels, double gamma,
                  double alpha) {
    if (gamma < 0.0) throw ValidationError("focal gamma must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError("focal alpha must be in (0,1], got " + std::to_string(alpha));
    const std::size_t n = logits.numel();
    if (n != labels.size())
        throw ShapeError("focal_loss: " + std::to_string(n) + " logits vs " +
                         std::to_string(labels.size()) + " labels");
    if (n == 0) throw ValidationError("focal_loss on empty batch");
    for (int y : labels)
        if (y != 0 && y != 1)
            throw ValidationError("focal_loss label outside {0,1}: " + std::to_string(y));

    // alpha == 1 disables class weighting entirely
    const double alpha_pos = alpha;
    const double alpha_neg = (alpha == 1.0) ? 1.0 : 1.0 - alpha;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits.values()[i];
        const double zt = labels[i] == 1 ? z : -z;
        const double one_minus_pt = stable_sigmoid(-zt);
        const double at = labels[i] == 1 ? alpha_pos : alpha_neg;
        // -log(p_t) == softplus(-z_t)
        acc += at * std::pow(one_minus_pt, gamma) * softplus(-zt);
    }
    const double mean = acc / static_cast<double>(n);

    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    return make_op_result(
        {1}, {mean}, {logits},
        [labels_copy, gamma, alpha_pos, alpha_neg, n](TensorNode& self) {
            TensorNode* zn = self.parents[0].node();
            if (!zn->requires_grad) return;
            zn->ensure_grad();
            const double dy = self.grad[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const int y = (*labels_copy)[i];
                const double z = zn->values[i];
                const double sgn = y == 1 ? 1.0 : -1.0;
                const double zt = sgn * z;
                const double pt = stable_sigmoid(zt);
                const double one_minus_pt = stable_sigmoid(-zt);
                const double at = y == 1 ? alpha_pos : alpha_neg;
                const double pow_g = std::pow(one_minus_pt, gamma);
                // dL/dz_t with log(p_t) = -softplus(-z_t):
                //   at * [gamma * p_t (1-p_t)^g log(p_t) - (1-p_t)^(g+1)]
                const double d_zt =
                    at * (-gamma * pt * pow_g * softplus(-zt) - pow_g * one_minus_pt);
                zn->grad[i] += dy * sgn * d_zt;
            }
        });
}

}  // namespace pfoa::nn
