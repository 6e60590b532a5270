#include "svrt/attention.hpp"

#include <cmath>

namespace svrt::nn {

namespace {

template <class S>
using RowMat = typename Tensor<S>::RowMat;

template <class S>
using ConstMap = Eigen::Map<const RowMat<S>>;

template <class S>
using MutMap = Eigen::Map<RowMat<S>>;

template <class S>
RowMat<S> softmax_rows(const RowMat<S>& m) {
  Tensor<S> t({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
              Eigen::Map<const typename Tensor<S>::Vec>(m.data(), m.size()));
  const Tensor<S> y = softmax_forward(t);
  return y.matrix(m.rows(), m.cols());
}

template <class S>
RowMat<S> softmax_rows_backward(const RowMat<S>& a, const RowMat<S>& da) {
  const Shape shape{static_cast<int>(a.rows()), static_cast<int>(a.cols())};
  const Tensor<S> y(shape, Eigen::Map<const typename Tensor<S>::Vec>(a.data(), a.size()));
  const Tensor<S> dy(shape, Eigen::Map<const typename Tensor<S>::Vec>(da.data(), da.size()));
  return softmax_backward(y, dy).matrix(a.rows(), a.cols());
}

template <class S>
void check_weights(const AttentionWeights<S>& w, int rows, int tokens) {
  expect_shape(w.wq, {-1, -1, rows}, "attention W^Q");
  const int nh = w.wq.dim(0), d = w.wq.dim(1);
  expect_shape(w.wk, {nh, d, rows}, "attention W^K");
  expect_shape(w.wv, {nh, d, rows}, "attention W^V");
  expect_shape(w.wo, {rows, nh * d}, "attention W^O");
  expect_shape(w.gain, {tokens}, "attention layer-norm gain");
  expect_shape(w.bias, {tokens}, "attention layer-norm bias");
}

template <class S>
S logit_scale(const AttentionConfig& cfg, int d, int tokens) {
  return S(1) / std::sqrt(static_cast<S>(cfg.scale_by_tokens ? tokens : d));
}

template <class S>
AttentionWeights<S> zeros_like(const AttentionWeights<S>& w) {
  return {Tensor<S>::zeros_like(w.wq), Tensor<S>::zeros_like(w.wk), Tensor<S>::zeros_like(w.wv),
          Tensor<S>::zeros_like(w.wo), Tensor<S>::zeros_like(w.gain), Tensor<S>::zeros_like(w.bias)};
}

}  // namespace

std::string_view attention_name(AttentionKind k) {
  switch (k) {
    case AttentionKind::None: return "none";
    case AttentionKind::SAM: return "sam";
    case AttentionKind::FBAM: return "fbam";
  }
  return "?";
}

AttentionKind parse_attention(std::string_view s) {
  if (s == "none") return AttentionKind::None;
  if (s == "sam") return AttentionKind::SAM;
  if (s == "fbam") return AttentionKind::FBAM;
  throw ConfigError("unknown attention kind '" + std::string(s) + "' (expected none, sam or fbam)");
}

AttentionConfig AttentionConfig::defaults(AttentionKind kind) {
  AttentionConfig c;
  c.kind = kind;
  if (kind == AttentionKind::FBAM) {
    c.d = 196;
    c.n_heads = 1;
    c.insert_after_block = 3;
  }
  return c;
}

TokenLayout token_layout(AttentionKind kind, int channels, int height, int width) {
  const int positions = height * width;
  return kind == AttentionKind::FBAM ? TokenLayout{positions, channels} : TokenLayout{channels, positions};
}

std::int64_t attention_parameter_count(const AttentionConfig& cfg, TokenLayout layout) {
  const std::int64_t nh = cfg.n_heads, d = cfg.d, r = layout.rows, t = layout.tokens;
  return nh * 3 * d * r + r * nh * d + 2 * t;
}

template <class S>
std::int64_t AttentionWeights<S>::parameter_count() const {
  std::int64_t n = 0;
  for (const Tensor<S>* t : tensors()) n += t->size();
  return n;
}

template <class S>
AttentionWeights<S> init_attention(const AttentionConfig& cfg, TokenLayout layout, Rng& rng) {
  if (cfg.d < 1 || cfg.n_heads < 1) throw ConfigError("attention needs d >= 1 and n_heads >= 1");
  if (layout.rows < 1 || layout.tokens < 1) throw ConfigError("attention input must be non-empty");
  auto uniform = [&rng](Shape shape, int fan_in) {
    Tensor<S> t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = static_cast<S>(rng.uniform(-bound, bound));
    return t;
  };
  AttentionWeights<S> w;
  w.wq = uniform({cfg.n_heads, cfg.d, layout.rows}, layout.rows);
  w.wk = uniform({cfg.n_heads, cfg.d, layout.rows}, layout.rows);
  w.wv = uniform({cfg.n_heads, cfg.d, layout.rows}, layout.rows);
  w.wo = uniform({layout.rows, cfg.n_heads * cfg.d}, cfg.n_heads * cfg.d);
  w.gain = Tensor<S>({layout.tokens}, S(1));
  w.bias = Tensor<S>({layout.tokens});
  return w;
}

template <class S>
RowMat<S> attention_core(const AttentionConfig& cfg, const RowMat<S>& x, const AttentionWeights<S>& w,
                         CoreCache<S>* cache) {
  const int rows = static_cast<int>(x.rows()), tokens = static_cast<int>(x.cols());
  check_weights(w, rows, tokens);
  const int nh = w.wq.dim(0), d = w.wq.dim(1);
  const S scale = logit_scale<S>(cfg, d, tokens);

  RowMat<S> concat(static_cast<Eigen::Index>(nh) * d, tokens);
  CoreCache<S> local;
  CoreCache<S>& c = cache ? *cache : local;
  c.q.resize(nh);
  c.k.resize(nh);
  c.v.resize(nh);
  c.attn.resize(nh);
  const Eigen::Index block = static_cast<Eigen::Index>(d) * rows;
  for (int h = 0; h < nh; ++h) {
    const ConstMap<S> wq(w.wq.ptr() + h * block, d, rows);
    const ConstMap<S> wk(w.wk.ptr() + h * block, d, rows);
    const ConstMap<S> wv(w.wv.ptr() + h * block, d, rows);
    c.q[h].noalias() = wq * x;
    c.k[h].noalias() = wk * x;
    c.v[h].noalias() = wv * x;
    if (cfg.spatial_tokens) {
      c.attn[h] = softmax_rows<S>((c.q[h].transpose() * c.k[h]) * scale);
      concat.middleRows(static_cast<Eigen::Index>(h) * d, d).noalias() = c.v[h] * c.attn[h].transpose();
    } else {
      c.attn[h] = softmax_rows<S>((c.q[h] * c.k[h].transpose()) * scale);
      concat.middleRows(static_cast<Eigen::Index>(h) * d, d).noalias() = c.attn[h] * c.v[h];
    }
  }
  Tensor<S> u({rows, tokens});
  u.matrix(rows, tokens).noalias() = w.wo.matrix(rows, static_cast<Eigen::Index>(nh) * d) * concat;
  u.matrix(rows, tokens) += x;
  const Tensor<S> y = layernorm_forward(u, w.gain, w.bias, &c.norm);
  if (cache) {
    c.x = x;
    c.concat = std::move(concat);
  }
  return y.matrix(rows, tokens);
}

template <class S>
RowMat<S> attention_core_backward(const AttentionConfig& cfg, const CoreCache<S>& c, const AttentionWeights<S>& w,
                                  const RowMat<S>& dy, AttentionWeights<S>& dw) {
  const int rows = static_cast<int>(c.x.rows()), tokens = static_cast<int>(c.x.cols());
  const int nh = w.wq.dim(0), d = w.wq.dim(1);
  const S scale = logit_scale<S>(cfg, d, tokens);
  if (dy.rows() != rows || dy.cols() != tokens)
    throw ShapeError("attention backward: gradient " + std::to_string(dy.rows()) + "x" + std::to_string(dy.cols()) +
                     " does not match input " + std::to_string(rows) + "x" + std::to_string(tokens));

  const Tensor<S> dyt({rows, tokens}, Eigen::Map<const typename Tensor<S>::Vec>(dy.data(), dy.size()));
  const NormGrads<S> ln = layernorm_backward(c.norm, w.gain, dyt);
  dw.gain.data() += ln.dgain.data();
  dw.bias.data() += ln.dbias.data();
  const RowMat<S> du = ln.dx.matrix(rows, tokens);

  RowMat<S> dx = du;
  const Eigen::Index hd = static_cast<Eigen::Index>(nh) * d;
  dw.wo.matrix(rows, hd).noalias() += du * c.concat.transpose();
  const RowMat<S> dconcat = w.wo.matrix(rows, hd).transpose() * du;

  const Eigen::Index block = static_cast<Eigen::Index>(d) * rows;
  for (int h = 0; h < nh; ++h) {
    const RowMat<S> dh = dconcat.middleRows(static_cast<Eigen::Index>(h) * d, d);
    const RowMat<S>& a = c.attn[h];
    RowMat<S> dv, dq, dk;
    if (cfg.spatial_tokens) {
      dv.noalias() = dh * a;
      const RowMat<S> da = dh.transpose() * c.v[h];
      const RowMat<S> ds = softmax_rows_backward<S>(a, da) * scale;
      dq.noalias() = c.k[h] * ds.transpose();
      dk.noalias() = c.q[h] * ds;
    } else {
      dv.noalias() = a.transpose() * dh;
      const RowMat<S> da = dh * c.v[h].transpose();
      const RowMat<S> ds = softmax_rows_backward<S>(a, da) * scale;
      dq.noalias() = ds * c.k[h];
      dk.noalias() = ds.transpose() * c.q[h];
    }
    const ConstMap<S> wq(w.wq.ptr() + h * block, d, rows);
    const ConstMap<S> wk(w.wk.ptr() + h * block, d, rows);
    const ConstMap<S> wv(w.wv.ptr() + h * block, d, rows);
    MutMap<S>(dw.wq.ptr() + h * block, d, rows).noalias() += dq * c.x.transpose();
    MutMap<S>(dw.wk.ptr() + h * block, d, rows).noalias() += dk * c.x.transpose();
    MutMap<S>(dw.wv.ptr() + h * block, d, rows).noalias() += dv * c.x.transpose();
    dx.noalias() += wq.transpose() * dq;
    dx.noalias() += wk.transpose() * dk;
    dx.noalias() += wv.transpose() * dv;
  }
  return dx;
}

template <class S>
Tensor<S> attention_forward(const AttentionConfig& cfg, const Tensor<S>& x, const AttentionWeights<S>& w,
                            AttentionCache<S>* cache) {
  if (cfg.kind == AttentionKind::None) throw ConfigError("attention_forward called with kind none");
  expect_shape(x, {-1, -1, -1, -1}, "attention input");
  const int n = x.dim(0), ch = x.dim(1);
  const int positions = x.dim(2) * x.dim(3);
  const bool transposed = cfg.kind == AttentionKind::FBAM;
  const Eigen::Index sample = static_cast<Eigen::Index>(ch) * positions;
  Tensor<S> y(x.shape());
  if (cache) {
    cache->samples.assign(n, {});
    cache->x_shape = x.shape();
  }
  for (int i = 0; i < n; ++i) {
    const ConstMap<S> xi(x.ptr() + i * sample, ch, positions);
    MutMap<S> yi(y.ptr() + i * sample, ch, positions);
    CoreCache<S>* ci = cache ? &cache->samples[i] : nullptr;
    if (transposed)
      yi = attention_core<S>(cfg, xi.transpose(), w, ci).transpose();
    else
      yi = attention_core<S>(cfg, xi, w, ci);
  }
  return y;
}

template <class S>
Tensor<S> sam_forward(const Tensor<S>& x, const AttentionWeights<S>& w, AttentionCache<S>* cache,
                      const AttentionConfig& cfg) {
  AttentionConfig c = cfg;
  c.kind = AttentionKind::SAM;
  return attention_forward(c, x, w, cache);
}

template <class S>
Tensor<S> fbam_forward(const Tensor<S>& x, const AttentionWeights<S>& w, AttentionCache<S>* cache,
                       const AttentionConfig& cfg) {
  AttentionConfig c = cfg;
  c.kind = AttentionKind::FBAM;
  return attention_forward(c, x, w, cache);
}

template <class S>
AttentionGrads<S> attention_backward(const AttentionConfig& cfg, const AttentionCache<S>& cache,
                                     const AttentionWeights<S>& w, const Tensor<S>& dy) {
  if (dy.shape() != cache.x_shape)
    throw ShapeError("attention backward: gradient " + shape_string(dy.shape()) + " does not match input " +
                     shape_string(cache.x_shape));
  const int n = dy.dim(0), ch = dy.dim(1);
  const int positions = dy.dim(2) * dy.dim(3);
  const bool transposed = cfg.kind == AttentionKind::FBAM;
  const Eigen::Index sample = static_cast<Eigen::Index>(ch) * positions;
  AttentionGrads<S> g{Tensor<S>(dy.shape()), zeros_like(w)};
  for (int i = 0; i < n; ++i) {
    const ConstMap<S> gi(dy.ptr() + i * sample, ch, positions);
    MutMap<S> dxi(g.dx.ptr() + i * sample, ch, positions);
    if (transposed)
      dxi = attention_core_backward<S>(cfg, cache.samples[i], w, gi.transpose(), g.dw).transpose();
    else
      dxi = attention_core_backward<S>(cfg, cache.samples[i], w, gi, g.dw);
  }
  return g;
}

#define SVRT_INSTANTIATE(S)                                                                                       \
  template struct AttentionWeights<S>;                                                                           \
  template AttentionWeights<S> init_attention(const AttentionConfig&, TokenLayout, Rng&);                        \
  template RowMat<S> attention_core(const AttentionConfig&, const RowMat<S>&, const AttentionWeights<S>&,        \
                                    CoreCache<S>*);                                                              \
  template RowMat<S> attention_core_backward(const AttentionConfig&, const CoreCache<S>&,                        \
                                             const AttentionWeights<S>&, const RowMat<S>&, AttentionWeights<S>&); \
  template Tensor<S> attention_forward(const AttentionConfig&, const Tensor<S>&, const AttentionWeights<S>&,     \
                                       AttentionCache<S>*);                                                      \
  template Tensor<S> sam_forward(const Tensor<S>&, const AttentionWeights<S>&, AttentionCache<S>*,               \
                                 const AttentionConfig&);                                                        \
  template Tensor<S> fbam_forward(const Tensor<S>&, const AttentionWeights<S>&, AttentionCache<S>*,              \
                                  const AttentionConfig&);                                                       \
  template AttentionGrads<S> attention_backward(const AttentionConfig&, const AttentionCache<S>&,                \
                                                const AttentionWeights<S>&, const Tensor<S>&);

SVRT_INSTANTIATE(float)
SVRT_INSTANTIATE(double)

#undef SVRT_INSTANTIATE

}  // namespace svrt::nn
