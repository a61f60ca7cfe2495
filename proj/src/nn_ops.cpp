#include "cvr/nn_ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace cvr::nn {

namespace {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::MatrixXd;

int out_extent(int in, int k, int stride, int pad) {
    int o = (in + 2 * pad - k) / stride + 1;
    check_arg(o > 0, "convolution output extent must be positive");
    return o;
}

// Gathers (Ci*kh*kw) x (Ho*Wo); output positions enumerated row-major.
void im2col2d(const double* x, int C, int H, int W, int kh, int kw,
              int stride, int pad, int Ho, int Wo, MatrixXd& col) {
    col.setZero(C * kh * kw, Ho * Wo);
    for (int c = 0; c < C; ++c) {
        const double* xc = x + static_cast<std::int64_t>(c) * H * W;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                int row = (c * kh + ki) * kw + kj;
                for (int oh = 0; oh < Ho; ++oh) {
                    int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= H) continue;
                    for (int ow = 0; ow < Wo; ++ow) {
                        int iw = ow * stride - pad + kj;
                        if (iw < 0 || iw >= W) continue;
                        col(row, oh * Wo + ow) = xc[ih * W + iw];
                    }
                }
            }
        }
    }
}

void col2im2d(const MatrixXd& col, int C, int H, int W, int kh, int kw,
              int stride, int pad, int Ho, int Wo, double* dx) {
    for (int c = 0; c < C; ++c) {
        double* xc = dx + static_cast<std::int64_t>(c) * H * W;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                int row = (c * kh + ki) * kw + kj;
                for (int oh = 0; oh < Ho; ++oh) {
                    int ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= H) continue;
                    for (int ow = 0; ow < Wo; ++ow) {
                        int iw = ow * stride - pad + kj;
                        if (iw < 0 || iw >= W) continue;
                        xc[ih * W + iw] += col(row, oh * Wo + ow);
                    }
                }
            }
        }
    }
}

void im2col3d(const double* x, int C, int D, int H, int W,
              int k, int stride, int pad, int Do, int Ho, int Wo, MatrixXd& col) {
    col.setZero(C * k * k * k, Do * Ho * Wo);
    for (int c = 0; c < C; ++c) {
        const double* xc = x + static_cast<std::int64_t>(c) * D * H * W;
        for (int kd = 0; kd < k; ++kd)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    int row = ((c * k + kd) * k + ki) * k + kj;
                    for (int od = 0; od < Do; ++od) {
                        int id = od * stride - pad + kd;
                        if (id < 0 || id >= D) continue;
                        for (int oh = 0; oh < Ho; ++oh) {
                            int ih = oh * stride - pad + ki;
                            if (ih < 0 || ih >= H) continue;
                            for (int ow = 0; ow < Wo; ++ow) {
                                int iw = ow * stride - pad + kj;
                                if (iw < 0 || iw >= W) continue;
                                col(row, (od * Ho + oh) * Wo + ow) =
                                    xc[(static_cast<std::int64_t>(id) * H + ih) * W + iw];
                            }
                        }
                    }
                }
    }
}

void col2im3d(const MatrixXd& col, int C, int D, int H, int W,
              int k, int stride, int pad, int Do, int Ho, int Wo, double* dx) {
    for (int c = 0; c < C; ++c) {
        double* xc = dx + static_cast<std::int64_t>(c) * D * H * W;
        for (int kd = 0; kd < k; ++kd)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    int row = ((c * k + kd) * k + ki) * k + kj;
                    for (int od = 0; od < Do; ++od) {
                        int id = od * stride - pad + kd;
                        if (id < 0 || id >= D) continue;
                        for (int oh = 0; oh < Ho; ++oh) {
                            int ih = oh * stride - pad + ki;
                            if (ih < 0 || ih >= H) continue;
                            for (int ow = 0; ow < Wo; ++ow) {
                                int iw = ow * stride - pad + kj;
                                if (iw < 0 || iw >= W) continue;
                                xc[(static_cast<std::int64_t>(id) * H + ih) * W + iw] +=
                                    col(row, (od * Ho + oh) * Wo + ow);
                            }
                        }
                    }
                }
    }
}

}  // namespace

VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride, int pad) {
    check_arg(x->value.ndim() == 4, "conv2d: input must be (B,C,H,W)");
    check_arg(w->value.ndim() == 4, "conv2d: weight must be (Co,Ci,kh,kw)");
    const int B = x->value.dim(0), C = x->value.dim(1);
    const int H = x->value.dim(2), W = x->value.dim(3);
    const int Co = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    check_arg(w->value.dim(1) == C, "conv2d: channel mismatch");
    check_arg(b->value.size() == Co, "conv2d: bias size mismatch");
    const int Ho = out_extent(H, kh, stride, pad);
    const int Wo = out_extent(W, kw, stride, pad);
    const int K = C * kh * kw, P = Ho * Wo;

    Tensor out({B, Co, Ho, Wo});
    Eigen::Map<const MatrixRM> wm(w->value.data(), Co, K);
    MatrixXd col;
    for (int n = 0; n < B; ++n) {
        im2col2d(x->value.data() + static_cast<std::int64_t>(n) * C * H * W,
                 C, H, W, kh, kw, stride, pad, Ho, Wo, col);
        Eigen::Map<MatrixRM> om(out.data() + static_cast<std::int64_t>(n) * Co * P, Co, P);
        om.noalias() = wm * col;
        for (int c = 0; c < Co; ++c) om.row(c).array() += b->value[c];
    }

    auto xv = x, wv = w, bv = b;
    return make_result(std::move(out), {x, w, b}, [=](Var& self) {
        MatrixXd col2, dcol;
        Tensor* dx = xv->requires_grad ? &xv->ensure_grad() : nullptr;
        Tensor* dw = wv->requires_grad ? &wv->ensure_grad() : nullptr;
        Tensor* db = bv->requires_grad ? &bv->ensure_grad() : nullptr;
        Eigen::Map<const MatrixRM> wm2(wv->value.data(), Co, K);
        for (int n = 0; n < B; ++n) {
            Eigen::Map<const MatrixRM> go(self.grad.data() + static_cast<std::int64_t>(n) * Co * P, Co, P);
            if (dw || dx)
                im2col2d(xv->value.data() + static_cast<std::int64_t>(n) * C * H * W,
                         C, H, W, kh, kw, stride, pad, Ho, Wo, col2);
            if (dw) {
                Eigen::Map<MatrixRM> dwm(dw->data(), Co, K);
                dwm.noalias() += go * col2.transpose();
            }
            if (db)
                for (int c = 0; c < Co; ++c) (*db)[c] += go.row(c).sum();
            if (dx) {
                dcol.noalias() = wm2.transpose() * go;
                col2im2d(dcol, C, H, W, kh, kw, stride, pad, Ho, Wo,
                         dx->data() + static_cast<std::int64_t>(n) * C * H * W);
            }
        }
    });
}

VarPtr conv3d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int stride, int pad) {
    check_arg(x->value.ndim() == 5, "conv3d: input must be (B,C,D,H,W)");
    check_arg(w->value.ndim() == 5, "conv3d: weight must be (Co,Ci,k,k,k)");
    const int B = x->value.dim(0), C = x->value.dim(1);
    const int D = x->value.dim(2), H = x->value.dim(3), W = x->value.dim(4);
    const int Co = w->value.dim(0), k = w->value.dim(2);
    check_arg(w->value.dim(1) == C && w->value.dim(3) == k && w->value.dim(4) == k,
              "conv3d: weight shape mismatch");
    check_arg(b->value.size() == Co, "conv3d: bias size mismatch");
    const int Do = out_extent(D, k, stride, pad);
    const int Ho = out_extent(H, k, stride, pad);
    const int Wo = out_extent(W, k, stride, pad);
    const int K = C * k * k * k, P = Do * Ho * Wo;
    const std::int64_t in_stride = static_cast<std::int64_t>(C) * D * H * W;

    Tensor out({B, Co, Do, Ho, Wo});
    Eigen::Map<const MatrixRM> wm(w->value.data(), Co, K);
    MatrixXd col;
    for (int n = 0; n < B; ++n) {
        im2col3d(x->value.data() + n * in_stride, C, D, H, W, k, stride, pad, Do, Ho, Wo, col);
        Eigen::Map<MatrixRM> om(out.data() + static_cast<std::int64_t>(n) * Co * P, Co, P);
        om.noalias() = wm * col;
        for (int c = 0; c < Co; ++c) om.row(c).array() += b->value[c];
    }

    auto xv = x, wv = w, bv = b;
    return make_result(std::move(out), {x, w, b}, [=](Var& self) {
        MatrixXd col2, dcol;
        Tensor* dx = xv->requires_grad ? &xv->ensure_grad() : nullptr;
        Tensor* dw = wv->requires_grad ? &wv->ensure_grad() : nullptr;
        Tensor* db = bv->requires_grad ? &bv->ensure_grad() : nullptr;
        Eigen::Map<const MatrixRM> wm2(wv->value.data(), Co, K);
        for (int n = 0; n < B; ++n) {
            Eigen::Map<const MatrixRM> go(self.grad.data() + static_cast<std::int64_t>(n) * Co * P, Co, P);
            if (dw || dx)
                im2col3d(xv->value.data() + n * in_stride, C, D, H, W, k, stride, pad, Do, Ho, Wo, col2);
            if (dw) {
                Eigen::Map<MatrixRM> dwm(dw->data(), Co, K);
                dwm.noalias() += go * col2.transpose();
            }
            if (db)
                for (int c = 0; c < Co; ++c) (*db)[c] += go.row(c).sum();
            if (dx) {
                dcol.noalias() = wm2.transpose() * go;
                col2im3d(dcol, C, D, H, W, k, stride, pad, Do, Ho, Wo,
                         dx->data() + n * in_stride);
            }
        }
    });
}

VarPtr batch_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta,
                  Tensor* running_mean, Tensor* running_var,
                  bool training, bool update_stats, double momentum, double eps) {
    check_arg(x->value.ndim() >= 2, "batch_norm: input must have a channel dim");
    const int B = x->value.dim(0), C = x->value.dim(1);
    std::int64_t spatial = 1;
    for (int i = 2; i < x->value.ndim(); ++i) spatial *= x->value.dim(i);
    const std::int64_t m = static_cast<std::int64_t>(B) * spatial;
    check_arg(gamma->value.size() == C && beta->value.size() == C,
              "batch_norm: affine parameter size mismatch");
    check_arg(running_mean && running_var &&
              running_mean->size() == C && running_var->size() == C,
              "batch_norm: running stat size mismatch");

    std::vector<double> mean(C), inv_std(C);
    if (training) {
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int n = 0; n < B; ++n) {
                const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * spatial;
                for (std::int64_t i = 0; i < spatial; ++i) s += p[i];
            }
            double mu = s / static_cast<double>(m);
            double sv = 0.0;
            for (int n = 0; n < B; ++n) {
                const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * spatial;
                for (std::int64_t i = 0; i < spatial; ++i) {
                    double dxi = p[i] - mu;
                    sv += dxi * dxi;
                }
            }
            double var = sv / static_cast<double>(m);
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(var + eps);
            if (update_stats) {
                (*running_mean)[c] = (1.0 - momentum) * (*running_mean)[c] + momentum * mu;
                (*running_var)[c] = (1.0 - momentum) * (*running_var)[c] + momentum * var;
            }
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = (*running_mean)[c];
            inv_std[c] = 1.0 / std::sqrt((*running_var)[c] + eps);
        }
    }

    auto xhat = std::make_shared<Tensor>(x->value.shape());
    Tensor out(x->value.shape());
    for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * spatial;
            double* xh = xhat->data() + (static_cast<std::int64_t>(n) * C + c) * spatial;
            double* o = out.data() + (static_cast<std::int64_t>(n) * C + c) * spatial;
            const double g = gamma->value[c], bb = beta->value[c];
            for (std::int64_t i = 0; i < spatial; ++i) {
                xh[i] = (p[i] - mean[c]) * inv_std[c];
                o[i] = g * xh[i] + bb;
            }
        }

    auto xv = x, gv = gamma, bv = beta;
    return make_result(std::move(out), {x, gamma, beta},
                       [=, istd = std::move(inv_std)](Var& self) {
        Tensor* dx = xv->requires_grad ? &xv->ensure_grad() : nullptr;
        Tensor* dg = gv->requires_grad ? &gv->ensure_grad() : nullptr;
        Tensor* db = bv->requires_grad ? &bv->ensure_grad() : nullptr;
        for (int c = 0; c < C; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (int n = 0; n < B; ++n) {
                const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * spatial;
                const double* dy = self.grad.data() + off;
                const double* xh = xhat->data() + off;
                for (std::int64_t i = 0; i < spatial; ++i) {
                    sum_dy += dy[i];
                    sum_dy_xh += dy[i] * xh[i];
                }
            }
            if (dg) (*dg)[c] += sum_dy_xh;
            if (db) (*db)[c] += sum_dy;
            if (dx) {
                const double g = gv->value[c];
                if (training) {
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (int n = 0; n < B; ++n) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * spatial;
                        const double* dy = self.grad.data() + off;
                        const double* xh = xhat->data() + off;
                        double* d = dx->data() + off;
                        for (std::int64_t i = 0; i < spatial; ++i)
                            d[i] += g * istd[c] *
                                    (dy[i] - sum_dy * inv_m - xh[i] * sum_dy_xh * inv_m);
                    }
                } else {
                    for (int n = 0; n < B; ++n) {
                        const std::int64_t off = (static_cast<std::int64_t>(n) * C + c) * spatial;
                        const double* dy = self.grad.data() + off;
                        double* d = dx->data() + off;
                        for (std::int64_t i = 0; i < spatial; ++i)
                            d[i] += g * istd[c] * dy[i];
                    }
                }
            }
        }
    });
}

VarPtr leaky_relu(const VarPtr& x, double slope) {
    Tensor out(x->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) {
        double v = x->value[i];
        out[i] = v > 0.0 ? v : slope * v;
    }
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        for (std::int64_t i = 0; i < dx.size(); ++i)
            dx[i] += self.grad[i] * (xv->value[i] > 0.0 ? 1.0 : slope);
    });
}

VarPtr max_pool2d(const VarPtr& x, int k) {
    check_arg(x->value.ndim() == 4, "max_pool2d: input must be (B,C,H,W)");
    const int B = x->value.dim(0), C = x->value.dim(1);
    const int H = x->value.dim(2), W = x->value.dim(3);
    check_arg(H % k == 0 && W % k == 0, "max_pool2d: extent not divisible by kernel");
    const int Ho = H / k, Wo = W / k;
    Tensor out({B, C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.size()));
    std::int64_t oi = 0;
    for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
            const std::int64_t base = (static_cast<std::int64_t>(n) * C + c) * H * W;
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow, ++oi) {
                    double best = -1e300;
                    std::int64_t besti = -1;
                    for (int di = 0; di < k; ++di)
                        for (int dj = 0; dj < k; ++dj) {
                            std::int64_t idx = base + static_cast<std::int64_t>(oh * k + di) * W + (ow * k + dj);
                            if (x->value[idx] > best) {
                                best = x->value[idx];
                                besti = idx;
                            }
                        }
                    out[oi] = best;
                    (*argmax)[static_cast<std::size_t>(oi)] = besti;
                }
        }
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        for (std::int64_t i = 0; i < self.grad.size(); ++i)
            dx[(*argmax)[static_cast<std::size_t>(i)]] += self.grad[i];
    });
}

VarPtr upsample_nearest2d(const VarPtr& x, int f) {
    check_arg(x->value.ndim() == 4, "upsample_nearest2d: input must be (B,C,H,W)");
    const int B = x->value.dim(0), C = x->value.dim(1);
    const int H = x->value.dim(2), W = x->value.dim(3);
    const int Ho = H * f, Wo = W * f;
    Tensor out({B, C, Ho, Wo});
    for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
            const std::int64_t ib = (static_cast<std::int64_t>(n) * C + c) * H * W;
            const std::int64_t ob = (static_cast<std::int64_t>(n) * C + c) * Ho * Wo;
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow)
                    out[ob + static_cast<std::int64_t>(oh) * Wo + ow] =
                        x->value[ib + static_cast<std::int64_t>(oh / f) * W + (ow / f)];
        }
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        for (int n = 0; n < B; ++n)
            for (int c = 0; c < C; ++c) {
                const std::int64_t ib = (static_cast<std::int64_t>(n) * C + c) * H * W;
                const std::int64_t ob = (static_cast<std::int64_t>(n) * C + c) * Ho * Wo;
                for (int oh = 0; oh < Ho; ++oh)
                    for (int ow = 0; ow < Wo; ++ow)
                        dx[ib + static_cast<std::int64_t>(oh / f) * W + (ow / f)] +=
                            self.grad[ob + static_cast<std::int64_t>(oh) * Wo + ow];
            }
    });
}

VarPtr add(const VarPtr& a, const VarPtr& b) {
    check_arg(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
    auto av = a, bv = b;
    return make_result(std::move(out), {a, b}, [=](Var& self) {
        if (av->requires_grad) av->accumulate(self.grad);
        if (bv->requires_grad) bv->accumulate(self.grad);
    });
}

VarPtr scale(const VarPtr& x, double s) {
    Tensor out(x->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = s * x->value[i];
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += s * self.grad[i];
    });
}

VarPtr linear(const VarPtr& x, const VarPtr& w, const VarPtr& b) {
    check_arg(x->value.ndim() == 2 && w->value.ndim() == 2, "linear: bad ranks");
    const int B = x->value.dim(0), F = x->value.dim(1), O = w->value.dim(0);
    check_arg(w->value.dim(1) == F, "linear: in-feature mismatch");
    check_arg(b->value.size() == O, "linear: bias size mismatch");
    Tensor out({B, O});
    Eigen::Map<const MatrixRM> xm(x->value.data(), B, F);
    Eigen::Map<const MatrixRM> wm(w->value.data(), O, F);
    Eigen::Map<MatrixRM> om(out.data(), B, O);
    om.noalias() = xm * wm.transpose();
    for (int n = 0; n < B; ++n)
        for (int o = 0; o < O; ++o) om(n, o) += b->value[o];
    auto xv = x, wv = w, bv = b;
    return make_result(std::move(out), {x, w, b}, [=](Var& self) {
        Eigen::Map<const MatrixRM> go(self.grad.data(), B, O);
        Eigen::Map<const MatrixRM> xm2(xv->value.data(), B, F);
        Eigen::Map<const MatrixRM> wm2(wv->value.data(), O, F);
        if (xv->requires_grad) {
            Eigen::Map<MatrixRM> dx(xv->ensure_grad().data(), B, F);
            dx.noalias() += go * wm2;
        }
        if (wv->requires_grad) {
            Eigen::Map<MatrixRM> dw(wv->ensure_grad().data(), O, F);
            dw.noalias() += go.transpose() * xm2;
        }
        if (bv->requires_grad) {
            Tensor& db = bv->ensure_grad();
            for (int n = 0; n < B; ++n)
                for (int o = 0; o < O; ++o) db[o] += go(n, o);
        }
    });
}

VarPtr reshape(const VarPtr& x, std::vector<int> shape) {
    check_arg(shape_numel(shape) == x->value.size(), "reshape: element count mismatch");
    Tensor out = Tensor::from(std::move(shape), x->value.vec());
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
    });
}

VarPtr global_avg_pool3d(const VarPtr& x) {
    check_arg(x->value.ndim() == 5, "global_avg_pool3d: input must be (B,C,D,H,W)");
    const int B = x->value.dim(0), C = x->value.dim(1);
    const std::int64_t S = static_cast<std::int64_t>(x->value.dim(2)) * x->value.dim(3) * x->value.dim(4);
    Tensor out({B, C});
    for (int n = 0; n < B; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * S;
            double s = 0.0;
            for (std::int64_t i = 0; i < S; ++i) s += p[i];
            out[static_cast<std::int64_t>(n) * C + c] = s / static_cast<double>(S);
        }
    auto xv = x;
    return make_result(std::move(out), {x}, [=](Var& self) {
        if (!xv->requires_grad) return;
        Tensor& dx = xv->ensure_grad();
        const double inv = 1.0 / static_cast<double>(S);
        for (int n = 0; n < B; ++n)
            for (int c = 0; c < C; ++c) {
                const double g = self.grad[static_cast<std::int64_t>(n) * C + c] * inv;
                double* d = dx.data() + (static_cast<std::int64_t>(n) * C + c) * S;
                for (std::int64_t i = 0; i < S; ++i) d[i] += g;
            }
    });
}

VarPtr sum_sq_diff(const VarPtr& pred, const Tensor& target) {
    check_arg(pred->value.same_shape(target), "sum_sq_diff: shape mismatch");
    double s = 0.0;
    for (std::int64_t i = 0; i < target.size(); ++i) {
        double d = pred->value[i] - target[i];
        s += d * d;
    }
    auto pv = pred;
    auto tgt = std::make_shared<Tensor>(target);
    return make_result(Tensor::scalar(s), {pred}, [=](Var& self) {
        if (!pv->requires_grad) return;
        Tensor& dp = pv->ensure_grad();
        const double g = 2.0 * self.grad[0];
        for (std::int64_t i = 0; i < dp.size(); ++i)
            dp[i] += g * (pv->value[i] - (*tgt)[i]);
    });
}

}  // namespace cvr::nn
