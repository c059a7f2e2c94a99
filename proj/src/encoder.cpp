#include "projdebias/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "projdebias/error.hpp"
#include "projdebias/tensor_archive.hpp"

namespace projdebias {

namespace {

constexpr double kNormEps = 1e-12;

// Four-way partial sums; fixed order keeps results reproducible.
double fast_dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename W, typename Fn>
void visit_tensors(W& w, const EncoderConfig& c, Fn&& fn) {
  const std::size_t d = c.d_model;
  auto mat = [&](const std::string& name, auto& m, std::size_t rows, std::size_t cols) {
    fn(name, std::vector<std::size_t>{rows, cols}, m);
  };
  auto vec = [&](const std::string& name, auto& v, std::size_t n) { fn(name, std::vector<std::size_t>{n}, v); };
  auto linear = [&](const std::string& prefix, auto& lin, std::size_t out, std::size_t in) {
    mat(prefix + ".weight", lin.weight, out, in);
    vec(prefix + ".bias", lin.bias, out);
  };
  auto norm = [&](const std::string& prefix, auto& n) {
    vec(prefix + ".gamma", n.gamma, d);
    vec(prefix + ".beta", n.beta, d);
  };

  mat("embeddings.token", w.token_embedding, c.vocab_size, d);
  mat("embeddings.position", w.position_embedding, c.max_len, d);
  mat("embeddings.segment", w.segment_embedding, 2, d);
  norm("embeddings.norm", w.embedding_norm);
  for (std::size_t i = 0; i < c.n_layers; ++i) {
    const std::string p = "layer." + std::to_string(i);
    auto& layer = w.layers[i];
    linear(p + ".attn.q", layer.q, d, d);
    linear(p + ".attn.k", layer.k, d, d);
    linear(p + ".attn.v", layer.v, d, d);
    linear(p + ".attn.out", layer.out, d, d);
    linear(p + ".ffn.in", layer.ffn_in, c.d_ff, d);
    linear(p + ".ffn.out", layer.ffn_out, d, c.d_ff);
    norm(p + ".norm1", layer.norm1);
    norm(p + ".norm2", layer.norm2);
  }
  linear("pooler", w.pooler, d, d);
  linear("head.nsp", w.nsp_head, 2, d);
  linear("head.nli", w.nli_head, 3, d);
}

std::vector<double>& storage(Matrix& m) { return m.data(); }
const std::vector<double>& storage(const Matrix& m) { return m.data(); }
std::vector<double>& storage(Vector& v) { return v; }
const std::vector<double>& storage(const Vector& v) { return v; }

void layer_norm_rows(Matrix& x, const LayerNormWeights& n) {
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    for (std::size_t c = 0; c < d; ++c) row[c] = n.gamma[c] * (row[c] - mean) * inv + n.beta[c];
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : v) x /= total;
}

Matrix head_slice(const Matrix& m, std::size_t head, std::size_t head_dim) {
  Matrix out(m.rows(), head_dim);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = m.row(r);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(head * head_dim), head_dim, out.row(r).begin());
  }
  return out;
}

struct LayerResult {
  Matrix output;
  std::vector<Matrix> attention;
  std::vector<std::array<Matrix, 3>> kqv;
};

LayerResult run_layer(const LayerWeights& w, const EncoderConfig& c, const Matrix& x, const Hooks* hooks) {
  const std::size_t len = x.rows();
  const std::size_t hd = c.head_dim();
  const Matrix q_all = w.q.apply(x);
  const Matrix k_all = w.k.apply(x);
  const Matrix v_all = w.v.apply(x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  LayerResult result;
  Matrix context(len, c.d_model);
  for (std::size_t h = 0; h < c.n_heads; ++h) {
    std::array<Matrix, 3> kqv = {head_slice(k_all, h, hd), head_slice(q_all, h, hd), head_slice(v_all, h, hd)};
    if (hooks != nullptr && hooks->attention) {
      for (AttnRole role : kAttnRoles) hooks->attention(h, role, kqv[static_cast<std::size_t>(role)]);
    }
    const Matrix& keys = kqv[0];
    const Matrix& queries = kqv[1];
    const Matrix& values = kqv[2];

    Matrix probs(len, len);
    for (std::size_t i = 0; i < len; ++i) {
      auto row = probs.row(i);
      for (std::size_t j = 0; j < len; ++j) {
        row[j] = fast_dot(queries.row(i).data(), keys.row(j).data(), hd) * scale;
      }
      softmax_inplace(row);
      for (std::size_t t = 0; t < hd; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < len; ++j) s += row[j] * values(j, t);
        context(i, h * hd + t) = s;
      }
    }
    result.attention.push_back(std::move(probs));
    if (hooks != nullptr) result.kqv.push_back(std::move(kqv));
  }

  Matrix attn_out = w.out.apply(context);
  for (std::size_t i = 0; i < attn_out.data().size(); ++i) attn_out.data()[i] += x.data()[i];
  layer_norm_rows(attn_out, w.norm1);

  Matrix inner = w.ffn_in.apply(attn_out);
  for (double& v : inner.data()) v = gelu(v);
  Matrix ffn = w.ffn_out.apply(inner);
  for (std::size_t i = 0; i < ffn.data().size(); ++i) ffn.data()[i] += attn_out.data()[i];
  layer_norm_rows(ffn, w.norm2);
  result.output = std::move(ffn);
  return result;
}

std::array<double, 2> softmax2(const Vector& logits) {
  Vector v = logits;
  softmax_inplace(v);
  return {v[0], v[1]};
}

std::array<double, 3> softmax3(const Vector& logits) {
  Vector v = logits;
  softmax_inplace(v);
  return {v[0], v[1], v[2]};
}

double round_to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size == 0) throw Error("encoder config: vocab_size must be positive");
  if (d_model == 0 || n_heads == 0 || d_ff == 0) throw Error("encoder config: zero-sized dimension");
  if (d_model % n_heads != 0) {
    throw Error("encoder config: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                std::to_string(n_heads));
  }
  if (n_layers < 2) throw Error("encoder config: need at least 2 layers (penultimate and final)");
  if (max_len < 5) throw Error("encoder config: max_len must be at least 5");
}

Matrix Linear::apply(const Matrix& x) const {
  const std::size_t out_dim = weight.rows();
  const std::size_t in_dim = weight.cols();
  if (x.cols() != in_dim) throw Error("linear: input width mismatch");
  Matrix y(x.rows(), out_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r).data();
    for (std::size_t o = 0; o < out_dim; ++o) {
      y(r, o) = bias[o] + fast_dot(xr, weight.row(o).data(), in_dim);
    }
  }
  return y;
}

Vector Linear::apply(std::span<const double> x) const {
  if (x.size() != weight.cols()) throw Error("linear: input width mismatch");
  Vector y(weight.rows());
  for (std::size_t o = 0; o < y.size(); ++o) y[o] = bias[o] + fast_dot(x.data(), weight.row(o).data(), x.size());
  return y;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> expected_tensor_layout(const EncoderConfig& config) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  EncoderWeights dummy;
  dummy.layers.resize(config.n_layers);
  visit_tensors(dummy, config, [&](const std::string& name, std::vector<std::size_t> shape, auto&) {
    out.emplace_back(name, std::move(shape));
  });
  return out;
}

EncoderModel::EncoderModel(EncoderConfig config, Vocab vocab, EncoderWeights weights)
    : config_(config), vocab_(std::move(vocab)), weights_(std::move(weights)) {
  config_.validate();
  if (vocab_.size() != config_.vocab_size) {
    throw Error("vocab has " + std::to_string(vocab_.size()) + " tokens but config expects " +
                std::to_string(config_.vocab_size));
  }
  if (weights_.layers.size() != config_.n_layers) throw Error("weights: layer count mismatch");
  visit_tensors(weights_, config_, [&](const std::string& name, const std::vector<std::size_t>& shape, auto& t) {
    std::size_t expected = 1;
    for (std::size_t s : shape) expected *= s;
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Matrix>) {
      if (t.rows() != shape[0] || t.cols() != shape[1]) {
        throw Error("tensor " + name + " has shape " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) +
                    ", expected " + shape_to_string(shape));
      }
    }
    auto& values = storage(t);
    if (values.size() != expected) {
      throw Error("tensor " + name + " has " + std::to_string(values.size()) + " values, expected " +
                  shape_to_string(shape));
    }
    for (double& v : values) {
      if (!std::isfinite(v)) throw Error("tensor " + name + " has a non-finite value");
      v = round_to_f32(v);
    }
  });
}

EncoderModel EncoderModel::seeded(std::uint64_t seed, EncoderConfig config, Vocab vocab) {
  config.vocab_size = vocab.size();
  config.validate();
  std::mt19937_64 engine(seed);
  auto uniform = [&] { return static_cast<double>(engine() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };

  EncoderWeights w;
  w.layers.resize(config.n_layers);
  visit_tensors(w, config, [&](const std::string& name, const std::vector<std::size_t>& shape, auto& t) {
    auto& values = storage(t);
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Matrix>) {
      t = Matrix(shape[0], shape[1]);
    } else {
      values.assign(shape[0], 0.0);
    }
    const bool is_gamma = name.ends_with(".gamma");
    const bool is_beta = name.ends_with(".beta");
    const bool is_bias = name.ends_with(".bias");
    const bool is_embedding = name.starts_with("embeddings.");
    const double fan_scale = shape.size() == 2 ? std::sqrt(3.0 / static_cast<double>(shape[1])) : 1.0;
    for (double& v : values) {
      if (is_gamma) {
        v = 1.0;
      } else if (is_beta) {
        v = 0.0;
      } else if (is_bias) {
        v = 0.1 * uniform();
      } else if (is_embedding) {
        v = uniform();
      } else {
        v = fan_scale * uniform();
      }
    }
  });
  return EncoderModel(config, std::move(vocab), std::move(w));
}

EncoderModel EncoderModel::with_head(HeadKind kind, Linear head) const {
  EncoderWeights w = weights_;
  (kind == HeadKind::Nsp ? w.nsp_head : w.nli_head) = std::move(head);
  return EncoderModel(config_, vocab_, std::move(w));
}

std::vector<TensorRef> EncoderModel::tensors() const {
  std::vector<TensorRef> out;
  visit_tensors(weights_, config_, [&](const std::string& name, std::vector<std::size_t> shape, const auto& t) {
    const auto& values = storage(t);
    out.push_back(TensorRef{name, std::move(shape), std::span<const double>(values.data(), values.size())});
  });
  return out;
}

void save_weights(const EncoderModel& model, const std::filesystem::path& manifest) {
  const EncoderConfig& c = model.config();
  std::filesystem::path vocab_path = manifest;
  vocab_path.replace_extension(".vocab");

  Archive archive;
  archive.set("kind", "encoder");
  archive.set("d_model", std::to_string(c.d_model));
  archive.set("n_layers", std::to_string(c.n_layers));
  archive.set("n_heads", std::to_string(c.n_heads));
  archive.set("d_ff", std::to_string(c.d_ff));
  archive.set("max_len", std::to_string(c.max_len));
  archive.set("vocab_size", std::to_string(c.vocab_size));
  archive.set("vocab", vocab_path.filename().string());
  for (const auto& t : model.tensors()) {
    archive.tensors.push_back(ArchiveTensor{t.name, DType::F32, t.shape, {t.values.begin(), t.values.end()}});
  }
  write_archive(manifest, archive);
  model.vocab().save(vocab_path);
}

EncoderModel load_weights(const std::filesystem::path& manifest) {
  const Archive archive = read_archive(manifest);
  if (const std::string* kind = archive.find("kind"); kind != nullptr && *kind != "encoder") {
    throw InputError(manifest.string() + " is a '" + *kind + "' archive, not an encoder");
  }
  EncoderConfig c;
  c.d_model = archive.require_count("d_model");
  c.n_layers = archive.require_count("n_layers");
  c.n_heads = archive.require_count("n_heads");
  c.d_ff = archive.require_count("d_ff");
  c.max_len = archive.require_count("max_len");
  c.vocab_size = archive.require_count("vocab_size");
  try {
    c.validate();
  } catch (const Error& e) {
    throw InputError(manifest.string() + ": " + e.what());
  }

  Vocab vocab = Vocab::load(manifest.parent_path() / archive.require("vocab"));

  const auto layout = expected_tensor_layout(c);
  if (archive.tensors.size() != layout.size()) {
    for (const auto& t : archive.tensors) {
      bool known = false;
      for (const auto& [name, shape] : layout) known = known || name == t.name;
      if (!known) throw InputError("unexpected tensor " + t.name + " in " + manifest.string());
    }
  }

  EncoderWeights w;
  w.layers.resize(c.n_layers);
  visit_tensors(w, c, [&](const std::string& name, const std::vector<std::size_t>& shape, auto& t) {
    const ArchiveTensor* src = archive.find_tensor(name);
    if (src == nullptr) throw InputError("manifest is missing tensor " + name);
    if (src->dtype != DType::F32) throw InputError("tensor " + name + " must be f32");
    if (src->shape != shape) {
      throw InputError("tensor " + name + " has shape " + shape_to_string(src->shape) + ", expected " +
                       shape_to_string(shape) + " for d_model=" + std::to_string(c.d_model));
    }
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Matrix>) {
      t = Matrix(shape[0], shape[1], src->values);
    } else {
      t = src->values;
    }
  });
  try {
    return EncoderModel(c, std::move(vocab), std::move(w));
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(manifest.string() + ": " + e.what());
  }
}

std::string_view role_name(AttnRole role) {
  switch (role) {
    case AttnRole::Key: return "k";
    case AttnRole::Query: return "q";
    case AttnRole::Value: return "v";
  }
  return "?";
}

EncoderPrefix encode_prefix(const EncoderModel& model, const EncodedInput& input) {
  const EncoderConfig& c = model.config();
  const EncoderWeights& w = model.weights();
  if (input.ids.size() != input.segments.size()) throw Error("forward: ids/segments length mismatch");
  if (input.ids.empty()) throw Error("forward: empty input");
  if (input.ids.size() > c.max_len) {
    throw Error("forward: sequence length " + std::to_string(input.ids.size()) + " exceeds max_len " +
                std::to_string(c.max_len));
  }

  const std::size_t len = input.ids.size();
  Matrix x(len, c.d_model);
  for (std::size_t i = 0; i < len; ++i) {
    const auto id = input.ids[i];
    const auto seg = input.segments[i];
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) throw Error("forward: token id out of range");
    if (seg < 0 || seg > 1) throw Error("forward: segment id out of range");
    auto row = x.row(i);
    const auto tok = w.token_embedding.row(static_cast<std::size_t>(id));
    const auto pos = w.position_embedding.row(i);
    const auto sg = w.segment_embedding.row(static_cast<std::size_t>(seg));
    for (std::size_t k = 0; k < c.d_model; ++k) row[k] = tok[k] + pos[k] + sg[k];
  }
  layer_norm_rows(x, w.embedding_norm);

  EncoderPrefix prefix;
  for (std::size_t l = 0; l + 2 < c.n_layers; ++l) {
    LayerResult r = run_layer(w.layers[l], c, x, nullptr);
    x = r.output;
    prefix.layer_states.push_back(std::move(r.output));
    prefix.attention.push_back(std::move(r.attention));
  }
  prefix.hidden = std::move(x);
  return prefix;
}

ForwardTrace forward(const EncoderModel& model, const EncoderPrefix& prefix, const Hooks& hooks) {
  const EncoderConfig& c = model.config();
  const EncoderWeights& w = model.weights();

  ForwardTrace trace;
  trace.layer_states = prefix.layer_states;
  trace.attention = prefix.attention;

  LayerResult penult = run_layer(w.layers[c.n_layers - 2], c, prefix.hidden, &hooks);
  if (hooks.penult_tokens) hooks.penult_tokens(penult.output);
  trace.penult_kqv = std::move(penult.kqv);
  trace.attention.push_back(std::move(penult.attention));
  trace.layer_states.push_back(penult.output);

  LayerResult last = run_layer(w.layers[c.n_layers - 1], c, penult.output, nullptr);
  trace.cls_final.assign(last.output.row(0).begin(), last.output.row(0).end());
  if (hooks.final_cls) hooks.final_cls(trace.cls_final);
  trace.attention.push_back(std::move(last.attention));
  trace.layer_states.push_back(std::move(last.output));

  trace.sent = w.pooler.apply(trace.cls_final);
  for (double& v : trace.sent) v = std::tanh(v);
  if (hooks.sent) hooks.sent(trace.sent);

  trace.nsp_probs = softmax2(w.nsp_head.apply(trace.sent));
  trace.nli_probs = softmax3(w.nli_head.apply(trace.sent));
  return trace;
}

ForwardTrace forward(const EncoderModel& model, const EncodedInput& input, const Hooks& hooks) {
  return forward(model, encode_prefix(model, input), hooks);
}

TransformerEncoder::TransformerEncoder(std::shared_ptr<const EncoderModel> model, bool cache_prefixes)
    : model_(std::move(model)), cache_prefixes_(cache_prefixes) {
  if (!model_) throw Error("TransformerEncoder: null model");
}

EncodedInput TransformerEncoder::encode(std::string_view sent_a, std::string_view sent_b) const {
  return tokenize(model_->vocab(), sent_a, sent_b, model_->config().max_len);
}

std::shared_ptr<const EncoderPrefix> TransformerEncoder::prefix_for(const EncodedInput& input) const {
  std::string key;
  key.reserve(input.ids.size() * 5);
  for (std::size_t i = 0; i < input.ids.size(); ++i) {
    key += std::to_string(input.ids[i]);
    key += input.segments[i] ? ';' : ',';
  }
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto prefix = std::make_shared<const EncoderPrefix>(encode_prefix(*model_, input));
  std::unique_lock lock(mutex_);
  return cache_.emplace(std::move(key), std::move(prefix)).first->second;
}

ForwardTrace TransformerEncoder::forward(const EncodedInput& input, const Hooks& hooks) const {
  if (!cache_prefixes_) return projdebias::forward(*model_, input, hooks);
  return projdebias::forward(*model_, *prefix_for(input), hooks);
}

EncoderShape TransformerEncoder::shape() const {
  const EncoderConfig& c = model_->config();
  return EncoderShape{c.d_model, c.n_heads, c.head_dim(), c.n_layers};
}

}  // namespace projdebias
