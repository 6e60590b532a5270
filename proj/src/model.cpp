#include "svrt/model.hpp"

#include <cmath>
#include <cstring>

#include "svrt/rng.hpp"

namespace svrt::nn {

std::string_view tier_name(DepthTier t) {
  switch (t) {
    case DepthTier::Tiny: return "tiny";
    case DepthTier::Small: return "small";
    case DepthTier::Medium: return "medium";
  }
  return "?";
}

DepthTier parse_tier(std::string_view s) {
  if (s == "tiny") return DepthTier::Tiny;
  if (s == "small") return DepthTier::Small;
  if (s == "medium") return DepthTier::Medium;
  throw ConfigError("unknown depth tier '" + std::string(s) + "' (expected tiny, small or medium)");
}

int blocks_per_stage(DepthTier t) {
  switch (t) {
    case DepthTier::Tiny: return 1;
    case DepthTier::Small: return 2;
    case DepthTier::Medium: return 3;
  }
  return 1;
}

int ModelConfig::stage_size(int block) const {
  int s = input_size / 2;  // stem pool
  for (int b = 1; b <= block; ++b) {
    const int stride = b == 1 ? first_stage_stride : 2;
    s = (s - 1) / stride + 1;
  }
  return s;
}

ModelConfig insert_attention(ModelConfig model, AttentionConfig cfg) {
  if (cfg.kind == AttentionKind::None) {
    model.attention = AttentionConfig{AttentionKind::None, 0, 0, 0, false, false};
    return model;
  }
  const int stages = static_cast<int>(model.block_channels.size());
  if (cfg.insert_after_block == 0) cfg.insert_after_block = AttentionConfig::defaults(cfg.kind).insert_after_block;
  if (cfg.insert_after_block < 1 || cfg.insert_after_block > stages)
    throw ConfigError("attention block index " + std::to_string(cfg.insert_after_block) + " outside 1.." +
                      std::to_string(stages));
  if (cfg.d < 1 || cfg.n_heads < 1) throw ConfigError("attention needs d >= 1 and n_heads >= 1");
  model.attention = cfg;
  return model;
}

namespace {

template <class S>
struct Conv {
  Tensor<S> w;
  int stride = 1;
  int pad = 0;
  Tensor<S> in;

  Tensor<S> forward(const Tensor<S>& x, bool keep) {
    static const Tensor<S> no_bias;
    if (keep) in = x;
    return conv2d_forward(x, w, no_bias, stride, pad);
  }
  Tensor<S> backward(const Tensor<S>& dy, bool need_dx = true) {
    ConvGrads<S> g = conv2d_backward(in, w, dy, stride, pad, false, need_dx);
    w.grad() += g.dw.data();
    return std::move(g.dx);
  }
};

template <class S>
struct BatchNorm {
  Tensor<S> gamma, beta, mean, var;
  NormCache<S> cache;

  explicit BatchNorm(int c) : gamma({c}, S(1)), beta({c}), mean({c}), var({c}, S(1)) {}
  Tensor<S> forward(const Tensor<S>& x, bool training, bool keep) {
    return batch_norm_forward(x, gamma, beta, mean, var, training, keep ? &cache : nullptr);
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    NormGrads<S> g = batch_norm_backward(cache, gamma, dy);
    gamma.grad() += g.dgain.data();
    beta.grad() += g.dbias.data();
    return std::move(g.dx);
  }
};

template <class S>
struct Block {
  Conv<S> c1, c2, sc;
  BatchNorm<S> b1, b2, sb;
  bool shortcut = false;
  Tensor<S> a1, out;

  Block(int cin, int cout, int stride) : b1(cout), b2(cout), sb(cout) {
    c1.w = Tensor<S>({cout, cin, 3, 3});
    c1.stride = stride;
    c1.pad = 1;
    c2.w = Tensor<S>({cout, cout, 3, 3});
    c2.pad = 1;
    shortcut = stride != 1 || cin != cout;
    if (shortcut) {
      sc.w = Tensor<S>({cout, cin, 1, 1});
      sc.stride = stride;
    }
  }

  Tensor<S> forward(const Tensor<S>& x, bool training, bool keep) {
    Tensor<S> a = relu_forward(b1.forward(c1.forward(x, keep), training, keep));
    Tensor<S> h = b2.forward(c2.forward(a, keep), training, keep);
    Tensor<S> y = relu_forward(residual_add(h, shortcut ? sb.forward(sc.forward(x, keep), training, keep) : x));
    if (keep) {
      a1 = std::move(a);
      out = y;
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const Tensor<S> d = relu_backward(out, dy);
    Tensor<S> da = c2.backward(b2.backward(d));
    Tensor<S> dx = c1.backward(b1.backward(relu_backward(a1, da)));
    if (shortcut)
      dx.data() += sc.backward(sb.backward(d)).data();
    else
      dx.data() += d.data();
    return dx;
  }
};

template <class S>
void he_normal(Tensor<S>& w, Rng& rng) {
  const int fan_in = static_cast<int>(w.size() / w.dim(0));
  const double std = std::sqrt(2.0 / fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.normal() * std);
}

template <class S>
void uniform_fan_in(Tensor<S>& w, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace

template <class S>
struct Model<S>::Impl {
  Conv<S> stem;
  BatchNorm<S> stem_bn;
  Tensor<S> stem_act;
  Shape pool_in;
  std::vector<std::int32_t> pool_argmax;
  std::vector<std::vector<Block<S>>> stages;
  AttentionWeights<S> attn;
  AttentionCache<S> attn_cache;
  Shape gap_in;
  Tensor<S> fc_w, fc_b, fc_in;

  explicit Impl(int c0) : stem_bn(c0) {}
};

template <class S>
Model<S>::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  const auto& ch = cfg_.block_channels;
  if (ch.empty()) throw ConfigError("model needs at least one stage");
  if (cfg_.input_size < 4 || cfg_.input_size % 2) throw ConfigError("input size must be even and >= 4");
  if (cfg_.first_stage_stride < 1 || cfg_.first_stage_stride > 2) throw ConfigError("first stage stride must be 1 or 2");
  if (cfg_.attention.kind != AttentionKind::None) cfg_ = insert_attention(cfg_, cfg_.attention);

  Rng rng(seed);
  impl_ = std::make_unique<Impl>(ch[0]);
  Impl& m = *impl_;
  m.stem.w = Tensor<S>({ch[0], 1, 3, 3});
  m.stem.pad = 1;
  he_normal(m.stem.w, rng);
  auto add_bn = [this](const std::string& name, BatchNorm<S>& bn) {
    params_.push_back({name + ".gamma", &bn.gamma, false, true});
    params_.push_back({name + ".beta", &bn.beta, false, true});
    params_.push_back({name + ".mean", &bn.mean, true, true});
    params_.push_back({name + ".var", &bn.var, true, true});
  };

  const int blocks = blocks_per_stage(cfg_.depth_tier);
  m.stages.resize(ch.size());
  int cin = ch[0];
  for (std::size_t s = 0; s < ch.size(); ++s) {
    m.stages[s].reserve(blocks);
    for (int b = 0; b < blocks; ++b) {
      const int stride = b > 0 ? 1 : (s == 0 ? cfg_.first_stage_stride : 2);
      m.stages[s].emplace_back(cin, ch[s], stride);
      Block<S>& blk = m.stages[s].back();
      he_normal(blk.c1.w, rng);
      he_normal(blk.c2.w, rng);
      if (blk.shortcut) he_normal(blk.sc.w, rng);
      cin = ch[s];
    }
  }

  // Registration happens after all blocks exist so the pointers stay valid.
  params_.push_back({"stem.conv.w", &m.stem.w, false, true});
  add_bn("stem.bn", m.stem_bn);
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    for (std::size_t b = 0; b < m.stages[s].size(); ++b) {
      Block<S>& blk = m.stages[s][b];
      const std::string p = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
      params_.push_back({p + ".conv1.w", &blk.c1.w, false, true});
      add_bn(p + ".bn1", blk.b1);
      params_.push_back({p + ".conv2.w", &blk.c2.w, false, true});
      add_bn(p + ".bn2", blk.b2);
      if (blk.shortcut) {
        params_.push_back({p + ".shortcut.w", &blk.sc.w, false, true});
        add_bn(p + ".shortcut.bn", blk.sb);
      }
    }
  }

  if (cfg_.attention.kind != AttentionKind::None) {
    const int k = cfg_.attention.insert_after_block;
    const int side = cfg_.stage_size(k);
    const TokenLayout layout = token_layout(cfg_.attention.kind, ch[k - 1], side, side);
    m.attn = init_attention<S>(cfg_.attention, layout, rng);
    const char* names[] = {"attn.wq", "attn.wk", "attn.wv", "attn.wo", "attn.ln.gain", "attn.ln.bias"};
    auto tensors = m.attn.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) params_.push_back({names[i], tensors[i], false, true});
  }

  m.fc_w = Tensor<S>({1, ch.back()});
  m.fc_b = Tensor<S>({1});
  uniform_fan_in(m.fc_w, ch.back(), rng);
  uniform_fan_in(m.fc_b, ch.back(), rng);
  params_.push_back({"fc.w", &m.fc_w, false, false});
  params_.push_back({"fc.b", &m.fc_b, false, false});
}

template <class S>
Model<S>::~Model() = default;
template <class S>
Model<S>::Model(Model&&) noexcept = default;
template <class S>
Model<S>& Model<S>::operator=(Model&&) noexcept = default;

template <class S>
Tensor<S> Model<S>::forward(const Tensor<S>& x, bool training, bool keep_cache) {
  Impl& m = *impl_;
  expect_shape(x, {-1, 1, cfg_.input_size, cfg_.input_size}, "model input");
  training = training && !frozen_;
  Tensor<S> h = relu_forward(m.stem_bn.forward(m.stem.forward(x, keep_cache), training, keep_cache));
  MaxPoolResult<S> pooled = max_pool_forward(h, 2, 2);
  if (keep_cache) {
    m.pool_in = h.shape();
    m.pool_argmax = std::move(pooled.argmax);
    m.stem_act = std::move(h);
  }
  h = std::move(pooled.y);
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    for (auto& blk : m.stages[s]) h = blk.forward(h, training, keep_cache);
    if (cfg_.attention.kind != AttentionKind::None && static_cast<int>(s) + 1 == cfg_.attention.insert_after_block)
      h = attention_forward<S>(cfg_.attention, h, m.attn, keep_cache ? &m.attn_cache : nullptr);
  }
  if (keep_cache) m.gap_in = h.shape();
  return head_forward(global_avg_pool_forward(h), keep_cache);
}

template <class S>
void Model<S>::backward(const Tensor<S>& dlogits) {
  Impl& m = *impl_;
  Tensor<S> d = global_avg_pool_backward(m.gap_in, head_backward(dlogits));
  for (std::size_t s = m.stages.size(); s-- > 0;) {
    if (cfg_.attention.kind != AttentionKind::None && static_cast<int>(s) + 1 == cfg_.attention.insert_after_block) {
      AttentionGrads<S> g = attention_backward(cfg_.attention, m.attn_cache, m.attn, d);
      auto params = m.attn.tensors();
      auto grads = g.dw.tensors();
      for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad() += grads[i]->data();
      d = std::move(g.dx);
    }
    for (std::size_t b = m.stages[s].size(); b-- > 0;) d = m.stages[s][b].backward(d);
  }
  d = max_pool_backward(m.pool_in, m.pool_argmax, d);
  m.stem.backward(m.stem_bn.backward(relu_backward(m.stem_act, d)), false);
}

template <class S>
Tensor<S> Model<S>::features(const Tensor<S>& x) {
  Impl& m = *impl_;
  expect_shape(x, {-1, 1, cfg_.input_size, cfg_.input_size}, "model input");
  Tensor<S> h = relu_forward(m.stem_bn.forward(m.stem.forward(x, false), false, false));
  h = max_pool_forward(h, 2, 2).y;
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    for (auto& blk : m.stages[s]) h = blk.forward(h, false, false);
    if (cfg_.attention.kind != AttentionKind::None && static_cast<int>(s) + 1 == cfg_.attention.insert_after_block)
      h = attention_forward<S>(cfg_.attention, h, m.attn, nullptr);
  }
  return global_avg_pool_forward(h);
}

template <class S>
Tensor<S> Model<S>::head_forward(const Tensor<S>& feats, bool keep_cache) {
  Impl& m = *impl_;
  Tensor<S> y = linear_forward(feats, m.fc_w, m.fc_b);
  if (keep_cache) m.fc_in = feats;
  return y.reshaped({feats.dim(0)});
}

template <class S>
Tensor<S> Model<S>::head_backward(const Tensor<S>& dlogits) {
  Impl& m = *impl_;
  expect_shape(dlogits, {m.fc_in.dim(0)}, "logit gradient");
  LinearGrads<S> g = linear_backward(m.fc_in, m.fc_w, dlogits.reshaped({dlogits.dim(0), 1}));
  m.fc_w.grad() += g.dw.data();
  m.fc_b.grad() += g.db.data();
  return std::move(g.dx);
}

template <class S>
std::vector<Tensor<S>*> Model<S>::trainable() {
  std::vector<Tensor<S>*> out;
  for (auto& p : params_)
    if (!p.buffer && !(frozen_ && p.backbone)) out.push_back(p.tensor);
  return out;
}

template <class S>
void Model<S>::zero_grad() {
  for (auto& p : params_)
    if (!p.buffer) p.tensor->zero_grad();
}

template <class S>
std::int64_t Model<S>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_)
    if (!p.buffer) n += p.tensor->size();
  return n;
}

template <class S>
std::int64_t Model<S>::attention_parameter_count() const {
  return cfg_.attention.kind == AttentionKind::None ? 0 : impl_->attn.parameter_count();
}

template <class S>
std::uint64_t Model<S>::backbone_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    if (!p.backbone) continue;
    h = fnv1a64({reinterpret_cast<const std::uint8_t*>(p.name.data()), p.name.size()}, h);
    for (int d : p.tensor->shape()) h = fnv1a64({reinterpret_cast<const std::uint8_t*>(&d), sizeof d}, h);
    h = fnv1a64({reinterpret_cast<const std::uint8_t*>(p.tensor->ptr()), p.tensor->size() * sizeof(S)}, h);
  }
  return h;
}

template class Model<float>;
template class Model<double>;

}  // namespace svrt::nn
