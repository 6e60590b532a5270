#include "svrt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svrt::nn {

namespace {

template <class S>
using RowMat = typename Tensor<S>::RowMat;

struct ConvGeom {
  int n, c, h, w, o, k, ho, wo;
};

template <class S>
ConvGeom conv_geom(const Tensor<S>& x, const Tensor<S>& w, int stride, int pad) {
  expect_shape(x, {-1, -1, -1, -1}, "conv2d input");
  expect_shape(w, {-1, x.dim(1), -1, -1}, "conv2d weight (input " + shape_string(x.shape()) + ")");
  if (w.dim(2) != w.dim(3)) throw ShapeError("conv2d: kernel must be square, got " + shape_string(w.shape()));
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: stride must be >= 1 and pad >= 0");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), 0, 0};
  if (g.h + 2 * pad < g.k || g.w + 2 * pad < g.k)
    throw ShapeError("conv2d: kernel " + shape_string(w.shape()) + " larger than padded input " +
                     shape_string(x.shape()));
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;
  return g;
}

// (C*K*K) x (N*Ho*Wo)
template <class S>
RowMat<S> im2col(const Tensor<S>& x, const ConvGeom& g, int stride, int pad) {
  const Eigen::Index plane = static_cast<Eigen::Index>(g.ho) * g.wo;
  RowMat<S> cols = RowMat<S>::Zero(static_cast<Eigen::Index>(g.c) * g.k * g.k, plane * g.n);
  const S* xp = x.ptr();
  for (int c = 0; c < g.c; ++c)
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        S* row = cols.row((c * g.k + ki) * g.k + kj).data();
        for (int n = 0; n < g.n; ++n) {
          const S* src = xp + (static_cast<Eigen::Index>(n) * g.c + c) * g.h * g.w;
          S* dst = row + n * plane;
          for (int oh = 0; oh < g.ho; ++oh) {
            const int ih = oh * stride - pad + ki;
            if (ih < 0 || ih >= g.h) continue;
            for (int ow = 0; ow < g.wo; ++ow) {
              const int iw = ow * stride - pad + kj;
              if (iw >= 0 && iw < g.w) dst[oh * g.wo + ow] = src[ih * g.w + iw];
            }
          }
        }
      }
  return cols;
}

template <class S>
void col2im(const RowMat<S>& cols, const ConvGeom& g, int stride, int pad, Tensor<S>& dx) {
  const Eigen::Index plane = static_cast<Eigen::Index>(g.ho) * g.wo;
  S* xp = dx.ptr();
  for (int c = 0; c < g.c; ++c)
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        const S* row = cols.row((c * g.k + ki) * g.k + kj).data();
        for (int n = 0; n < g.n; ++n) {
          S* dst = xp + (static_cast<Eigen::Index>(n) * g.c + c) * g.h * g.w;
          const S* src = row + n * plane;
          for (int oh = 0; oh < g.ho; ++oh) {
            const int ih = oh * stride - pad + ki;
            if (ih < 0 || ih >= g.h) continue;
            for (int ow = 0; ow < g.wo; ++ow) {
              const int iw = ow * stride - pad + kj;
              if (iw >= 0 && iw < g.w) dst[ih * g.w + iw] += src[oh * g.wo + ow];
            }
          }
        }
      }
}

template <class S>
void same_shape_or_throw(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) +
                     " differ");
}

int last_dim(const Shape& s, const char* what) {
  if (s.empty() || s.back() < 1) throw ShapeError(std::string(what) + ": last axis must be >= 1, got " + shape_string(s));
  return s.back();
}

}  // namespace

// ---------------------------------------------------------------- conv2d

template <class S>
Tensor<S> conv2d_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride, int pad) {
  const ConvGeom g = conv_geom(x, w, stride, pad);
  if (!b.empty()) expect_shape(b, {g.o}, "conv2d bias");
  const Eigen::Index plane = static_cast<Eigen::Index>(g.ho) * g.wo;
  const RowMat<S> cols = im2col(x, g, stride, pad);
  RowMat<S> out(g.o, plane * g.n);
  out.noalias() = w.matrix(g.o, static_cast<Eigen::Index>(g.c) * g.k * g.k) * cols;
  Tensor<S> y({g.n, g.o, g.ho, g.wo});
  for (int n = 0; n < g.n; ++n)
    for (int o = 0; o < g.o; ++o) {
      auto dst = y.data().segment((static_cast<Eigen::Index>(n) * g.o + o) * plane, plane);
      dst = out.row(o).segment(n * plane, plane).transpose();
      if (!b.empty()) dst.array() += b[o];
    }
  y.check_finite("conv2d");
  return y;
}

template <class S>
ConvGrads<S> conv2d_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy, int stride, int pad,
                             bool has_bias, bool need_dx) {
  const ConvGeom g = conv_geom(x, w, stride, pad);
  expect_shape(dy, {g.n, g.o, g.ho, g.wo}, "conv2d output gradient");
  const Eigen::Index plane = static_cast<Eigen::Index>(g.ho) * g.wo;
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.c) * g.k * g.k;
  RowMat<S> dout(g.o, plane * g.n);
  for (int n = 0; n < g.n; ++n)
    for (int o = 0; o < g.o; ++o)
      dout.row(o).segment(n * plane, plane) =
          dy.data().segment((static_cast<Eigen::Index>(n) * g.o + o) * plane, plane).transpose();

  ConvGrads<S> r;
  const RowMat<S> cols = im2col(x, g, stride, pad);
  r.dw = Tensor<S>(w.shape());
  r.dw.matrix(g.o, ckk).noalias() = dout * cols.transpose();
  if (has_bias) {
    r.db = Tensor<S>({g.o});
    r.db.data() = dout.rowwise().sum();
  }
  if (need_dx) {
    RowMat<S> dcols(ckk, plane * g.n);
    dcols.noalias() = w.matrix(g.o, ckk).transpose() * dout;
    r.dx = Tensor<S>(x.shape());
    col2im(dcols, g, stride, pad, r.dx);
  }
  return r;
}

// ---------------------------------------------------------------- elementwise

template <class S>
Tensor<S> relu_forward(const Tensor<S>& x) {
  Tensor<S> y(x.shape(), x.data().cwiseMax(S(0)));
  y.check_finite("relu");
  return y;
}

template <class S>
Tensor<S> relu_backward(const Tensor<S>& y, const Tensor<S>& dy) {
  same_shape_or_throw(y, dy, "relu backward");
  return Tensor<S>(y.shape(), (y.data().array() > S(0)).select(dy.data(), S(0)));
}

template <class S>
Tensor<S> residual_add(const Tensor<S>& a, const Tensor<S>& b) {
  same_shape_or_throw(a, b, "residual_add");
  Tensor<S> y(a.shape(), a.data() + b.data());
  y.check_finite("residual_add");
  return y;
}

template <class S>
Tensor<S> sigmoid_forward(const Tensor<S>& x) {
  typename Tensor<S>::Vec v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const S z = x[i];
    v[i] = z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
  }
  Tensor<S> y(x.shape(), std::move(v));
  y.check_finite("sigmoid");
  return y;
}

template <class S>
Tensor<S> sigmoid_backward(const Tensor<S>& y, const Tensor<S>& dy) {
  same_shape_or_throw(y, dy, "sigmoid backward");
  return Tensor<S>(y.shape(), (dy.data().array() * y.data().array() * (S(1) - y.data().array())).matrix());
}

// ---------------------------------------------------------------- pooling

template <class S>
Tensor<S> global_avg_pool_forward(const Tensor<S>& x) {
  expect_shape(x, {-1, -1, -1, -1}, "global_avg_pool input");
  const int n = x.dim(0), c = x.dim(1);
  const Eigen::Index plane = static_cast<Eigen::Index>(x.dim(2)) * x.dim(3);
  Tensor<S> y({n, c});
  y.data() = x.matrix(static_cast<Eigen::Index>(n) * c, plane).rowwise().mean();
  y.check_finite("global_avg_pool");
  return y;
}

template <class S>
Tensor<S> global_avg_pool_backward(const Shape& x_shape, const Tensor<S>& dy) {
  if (x_shape.size() != 4) throw ShapeError("global_avg_pool backward: input shape " + shape_string(x_shape));
  expect_shape(dy, {x_shape[0], x_shape[1]}, "global_avg_pool output gradient");
  const Eigen::Index plane = static_cast<Eigen::Index>(x_shape[2]) * x_shape[3];
  Tensor<S> dx(x_shape);
  dx.matrix(dy.size(), plane) = (dy.data() / static_cast<S>(plane)).replicate(1, plane);
  return dx;
}

template <class S>
MaxPoolResult<S> max_pool_forward(const Tensor<S>& x, int kernel, int stride) {
  expect_shape(x, {-1, -1, -1, -1}, "max_pool input");
  if (kernel < 1 || stride < 1) throw ShapeError("max_pool: kernel and stride must be >= 1");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < kernel || w < kernel) throw ShapeError("max_pool: input " + shape_string(x.shape()) + " smaller than kernel");
  const int ho = (h - kernel) / stride + 1;
  const int wo = (w - kernel) / stride + 1;
  MaxPoolResult<S> r{Tensor<S>({n, c, ho, wo}), {}};
  r.argmax.resize(r.y.size());
  Eigen::Index out = 0;
  for (int p = 0; p < n * c; ++p) {
    const Eigen::Index base = static_cast<Eigen::Index>(p) * h * w;
    for (int oh = 0; oh < ho; ++oh)
      for (int ow = 0; ow < wo; ++ow, ++out) {
        Eigen::Index best = base + static_cast<Eigen::Index>(oh * stride) * w + ow * stride;
        for (int i = 0; i < kernel; ++i)
          for (int j = 0; j < kernel; ++j) {
            const Eigen::Index idx = base + static_cast<Eigen::Index>(oh * stride + i) * w + ow * stride + j;
            if (x[idx] > x[best]) best = idx;
          }
        r.y[out] = x[best];
        r.argmax[out] = static_cast<std::int32_t>(best);
      }
  }
  r.y.check_finite("max_pool");
  return r;
}

template <class S>
Tensor<S> max_pool_backward(const Shape& x_shape, const std::vector<std::int32_t>& argmax, const Tensor<S>& dy) {
  if (static_cast<Eigen::Index>(argmax.size()) != dy.size())
    throw ShapeError("max_pool backward: gradient " + shape_string(dy.shape()) + " does not match forward output");
  Tensor<S> dx(x_shape);
  for (Eigen::Index i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
  return dx;
}

// ---------------------------------------------------------------- linear

template <class S>
Tensor<S> linear_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  expect_shape(x, {-1, -1}, "linear input");
  expect_shape(w, {-1, x.dim(1)}, "linear weight (input " + shape_string(x.shape()) + ")");
  expect_shape(b, {w.dim(0)}, "linear bias");
  const int n = x.dim(0), d = x.dim(1), o = w.dim(0);
  Tensor<S> y({n, o});
  auto ym = y.matrix(n, o);
  ym.noalias() = x.matrix(n, d) * w.matrix(o, d).transpose();
  ym.rowwise() += b.data().transpose();
  y.check_finite("linear");
  return y;
}

template <class S>
LinearGrads<S> linear_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy) {
  const int n = x.dim(0), d = x.dim(1), o = w.dim(0);
  expect_shape(dy, {n, o}, "linear output gradient");
  LinearGrads<S> r{Tensor<S>(x.shape()), Tensor<S>(w.shape()), Tensor<S>({o})};
  const auto g = dy.matrix(n, o);
  r.dx.matrix(n, d).noalias() = g * w.matrix(o, d);
  r.dw.matrix(o, d).noalias() = g.transpose() * x.matrix(n, d);
  r.db.data() = g.colwise().sum().transpose();
  return r;
}

// ---------------------------------------------------------------- normalisation

template <class S>
Tensor<S> batch_norm_forward(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                             Tensor<S>& running_mean, Tensor<S>& running_var, bool training, NormCache<S>* cache,
                             double momentum, double eps) {
  expect_shape(x, {-1, -1, -1, -1}, "batch_norm input");
  const int n = x.dim(0), c = x.dim(1);
  for (const Tensor<S>* t : {&gamma, &beta, static_cast<const Tensor<S>*>(&running_mean), static_cast<const Tensor<S>*>(&running_var)})
    expect_shape(*t, {c}, "batch_norm parameter (input " + shape_string(x.shape()) + ")");
  const Eigen::Index plane = static_cast<Eigen::Index>(x.dim(2)) * x.dim(3);
  const Eigen::Index m = plane * n;

  typename Tensor<S>::Vec mean(c), inv_std(c);
  if (training) {
    if (m < 2) throw ShapeError("batch_norm: training needs more than one value per channel");
    for (int ch = 0; ch < c; ++ch) {
      S sum = 0;
      for (int i = 0; i < n; ++i) sum += x.data().segment((static_cast<Eigen::Index>(i) * c + ch) * plane, plane).sum();
      const S mu = sum / static_cast<S>(m);
      S sq = 0;
      for (int i = 0; i < n; ++i)
        sq += (x.data().segment((static_cast<Eigen::Index>(i) * c + ch) * plane, plane).array() - mu).square().sum();
      const S var = sq / static_cast<S>(m);
      mean[ch] = mu;
      inv_std[ch] = S(1) / std::sqrt(var + static_cast<S>(eps));
      running_mean[ch] = static_cast<S>(momentum) * running_mean[ch] + static_cast<S>(1 - momentum) * mu;
      running_var[ch] = static_cast<S>(momentum) * running_var[ch] +
                        static_cast<S>(1 - momentum) * sq / static_cast<S>(m - 1);
    }
  } else {
    mean = running_mean.data();
    inv_std = (running_var.data().array() + static_cast<S>(eps)).rsqrt();
  }

  Tensor<S> xhat(x.shape());
  Tensor<S> y(x.shape());
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const Eigen::Index off = (static_cast<Eigen::Index>(i) * c + ch) * plane;
      xhat.data().segment(off, plane) = (x.data().segment(off, plane).array() - mean[ch]) * inv_std[ch];
      y.data().segment(off, plane) = (xhat.data().segment(off, plane).array() * gamma[ch] + beta[ch]).matrix();
    }
  y.check_finite("batch_norm");
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_stats = training;
  }
  return y;
}

template <class S>
NormGrads<S> batch_norm_backward(const NormCache<S>& cache, const Tensor<S>& gamma, const Tensor<S>& dy) {
  const Tensor<S>& xhat = cache.xhat;
  same_shape_or_throw(xhat, dy, "batch_norm backward");
  const int n = dy.dim(0), c = dy.dim(1);
  const Eigen::Index plane = static_cast<Eigen::Index>(dy.dim(2)) * dy.dim(3);
  const S m = static_cast<S>(plane * n);
  NormGrads<S> r{Tensor<S>(dy.shape()), Tensor<S>({c}), Tensor<S>({c})};
  for (int ch = 0; ch < c; ++ch) {
    S sum_dy = 0, sum_dy_xhat = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Index off = (static_cast<Eigen::Index>(i) * c + ch) * plane;
      sum_dy += dy.data().segment(off, plane).sum();
      sum_dy_xhat += dy.data().segment(off, plane).dot(xhat.data().segment(off, plane));
    }
    r.dbias[ch] = sum_dy;
    r.dgain[ch] = sum_dy_xhat;
    const S k = gamma[ch] * cache.inv_std[ch];
    for (int i = 0; i < n; ++i) {
      const Eigen::Index off = (static_cast<Eigen::Index>(i) * c + ch) * plane;
      if (cache.batch_stats)
        r.dx.data().segment(off, plane) =
            (k / m) * (m * dy.data().segment(off, plane).array() - sum_dy -
                       xhat.data().segment(off, plane).array() * sum_dy_xhat)
                          .matrix();
      else
        r.dx.data().segment(off, plane) = k * dy.data().segment(off, plane);
    }
  }
  return r;
}

template <class S>
Tensor<S> layernorm_forward(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias, NormCache<S>* cache,
                            double eps) {
  const int d = last_dim(x.shape(), "layernorm");
  expect_shape(gain, {d}, "layernorm gain (input " + shape_string(x.shape()) + ")");
  expect_shape(bias, {d}, "layernorm bias (input " + shape_string(x.shape()) + ")");
  const Eigen::Index rows = x.size() / d;
  const auto xm = x.matrix(rows, d);
  Tensor<S> xhat(x.shape());
  auto hm = xhat.matrix(rows, d);
  typename Tensor<S>::Vec inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const S mu = xm.row(r).mean();
    const S var = (xm.row(r).array() - mu).square().mean();
    inv_std[r] = S(1) / std::sqrt(var + static_cast<S>(eps));
    hm.row(r) = (xm.row(r).array() - mu) * inv_std[r];
  }
  Tensor<S> y(x.shape());
  y.matrix(rows, d) = (hm.array().rowwise() * gain.data().transpose().array()).rowwise() +
                      bias.data().transpose().array();
  y.check_finite("layernorm");
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_stats = true;
  }
  return y;
}

template <class S>
NormGrads<S> layernorm_backward(const NormCache<S>& cache, const Tensor<S>& gain, const Tensor<S>& dy) {
  same_shape_or_throw(cache.xhat, dy, "layernorm backward");
  const int d = dy.dim(-1);
  const Eigen::Index rows = dy.size() / d;
  const auto h = cache.xhat.matrix(rows, d);
  const auto g = dy.matrix(rows, d);
  NormGrads<S> r{Tensor<S>(dy.shape()), Tensor<S>({d}), Tensor<S>({d})};
  r.dgain.data() = (g.array() * h.array()).colwise().sum().transpose();
  r.dbias.data() = g.colwise().sum().transpose();
  auto dx = r.dx.matrix(rows, d);
  const S sd = static_cast<S>(d);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto dh = (g.row(i).array() * gain.data().transpose().array()).eval();
    const S s1 = dh.sum();
    const S s2 = (dh * h.row(i).array()).sum();
    dx.row(i) = (cache.inv_std[i] / sd) * (sd * dh - s1 - h.row(i).array() * s2);
  }
  return r;
}

// ---------------------------------------------------------------- softmax / loss

template <class S>
Tensor<S> softmax_forward(const Tensor<S>& x) {
  const int k = last_dim(x.shape(), "softmax");
  const Eigen::Index rows = x.size() / k;
  Tensor<S> y(x.shape());
  auto ym = y.matrix(rows, k);
  const auto xm = x.matrix(rows, k);
  for (Eigen::Index r = 0; r < rows; ++r) {
    ym.row(r) = (xm.row(r).array() - xm.row(r).maxCoeff()).exp();
    ym.row(r) /= ym.row(r).sum();
  }
  y.check_finite("softmax");
  return y;
}

template <class S>
Tensor<S> softmax_backward(const Tensor<S>& y, const Tensor<S>& dy) {
  same_shape_or_throw(y, dy, "softmax backward");
  const int k = y.dim(-1);
  const Eigen::Index rows = y.size() / k;
  const auto ym = y.matrix(rows, k);
  const auto gm = dy.matrix(rows, k);
  Tensor<S> dx(y.shape());
  auto dm = dx.matrix(rows, k);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const S dot = ym.row(r).dot(gm.row(r));
    dm.row(r) = ym.row(r).array() * (gm.row(r).array() - dot);
  }
  return dx;
}

template <class S>
LossResult<S> bce_with_logits(const Tensor<S>& logits, std::span<const std::uint8_t> labels) {
  const Eigen::Index n = logits.size();
  if (n < 1) throw ShapeError("bce_with_logits: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ShapeError("bce_with_logits: " + std::to_string(labels.size()) + " labels for logits " +
                     shape_string(logits.shape()));
  LossResult<S> r{S(0), Tensor<S>(logits.shape())};
  for (Eigen::Index i = 0; i < n; ++i) {
    const S z = logits[i];
    const S y = labels[i] ? S(1) : S(0);
    r.loss += std::max(z, S(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
    const S p = z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
    r.grad[i] = (p - y) / static_cast<S>(n);
  }
  r.loss /= static_cast<S>(n);
  if (!std::isfinite(r.loss)) throw NonFiniteError("non-finite value produced by bce_with_logits");
  return r;
}

#define SVRT_INSTANTIATE(S)                                                                                       \
  template Tensor<S> conv2d_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int, int);             \
  template ConvGrads<S> conv2d_backward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int, int, bool,    \
                                        bool);                                                                   \
  template Tensor<S> relu_forward(const Tensor<S>&);                                                             \
  template Tensor<S> relu_backward(const Tensor<S>&, const Tensor<S>&);                                          \
  template Tensor<S> residual_add(const Tensor<S>&, const Tensor<S>&);                                           \
  template Tensor<S> global_avg_pool_forward(const Tensor<S>&);                                                  \
  template Tensor<S> global_avg_pool_backward(const Shape&, const Tensor<S>&);                                   \
  template MaxPoolResult<S> max_pool_forward(const Tensor<S>&, int, int);                                        \
  template Tensor<S> max_pool_backward(const Shape&, const std::vector<std::int32_t>&, const Tensor<S>&);        \
  template Tensor<S> linear_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);                       \
  template LinearGrads<S> linear_backward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);                 \
  template Tensor<S> batch_norm_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Tensor<S>&,        \
                                        Tensor<S>&, bool, NormCache<S>*, double, double);                        \
  template NormGrads<S> batch_norm_backward(const NormCache<S>&, const Tensor<S>&, const Tensor<S>&);            \
  template Tensor<S> layernorm_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, NormCache<S>*,      \
                                       double);                                                                  \
  template NormGrads<S> layernorm_backward(const NormCache<S>&, const Tensor<S>&, const Tensor<S>&);             \
  template Tensor<S> softmax_forward(const Tensor<S>&);                                                          \
  template Tensor<S> softmax_backward(const Tensor<S>&, const Tensor<S>&);                                       \
  template Tensor<S> sigmoid_forward(const Tensor<S>&);                                                          \
  template Tensor<S> sigmoid_backward(const Tensor<S>&, const Tensor<S>&);                                       \
  template LossResult<S> bce_with_logits(const Tensor<S>&, std::span<const std::uint8_t>);

SVRT_INSTANTIATE(float)
SVRT_INSTANTIATE(double)

#undef SVRT_INSTANTIATE

}  // namespace svrt::nn
