#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "projdebias/linalg.hpp"
#include "projdebias/tokenizer.hpp"

namespace projdebias {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 64;

  std::size_t head_dim() const { return d_model / n_heads; }
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// y = x W^T + b, with W stored [out, in].
struct Linear {
  Matrix weight;
  Vector bias;

  Matrix apply(const Matrix& x) const;
  Vector apply(std::span<const double> x) const;
  bool operator==(const Linear&) const = default;
};

struct LayerNormWeights {
  Vector gamma;
  Vector beta;
  bool operator==(const LayerNormWeights&) const = default;
};

struct LayerWeights {
  Linear q, k, v, out;
  Linear ffn_in, ffn_out;
  LayerNormWeights norm1, norm2;
  bool operator==(const LayerWeights&) const = default;
};

struct EncoderWeights {
  Matrix token_embedding;     // [vocab, d_model]
  Matrix position_embedding;  // [max_len, d_model]
  Matrix segment_embedding;   // [2, d_model]
  LayerNormWeights embedding_norm;
  std::vector<LayerWeights> layers;
  Linear pooler;    // [d_model, d_model]
  Linear nsp_head;  // [2, d_model]; class 0 is "is next"
  Linear nli_head;  // [3, d_model]; entailment, neutral, contradiction
  bool operator==(const EncoderWeights&) const = default;
};

/// One named view onto a weight tensor, in canonical serialization order.
struct TensorRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> values;
};

/// Expected canonical tensor names and shapes for a configuration.
std::vector<std::pair<std::string, std::vector<std::size_t>>> expected_tensor_layout(const EncoderConfig& config);

enum class HeadKind { Nsp, Nli };

/// Immutable BERT-style encoder. All weights are held at float32 precision.
class EncoderModel {
 public:
  EncoderModel(EncoderConfig config, Vocab vocab, EncoderWeights weights);

  /// Deterministic weights from a 64-bit Mersenne Twister stream.
  static EncoderModel seeded(std::uint64_t seed, EncoderConfig config, Vocab vocab);

  const EncoderConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const EncoderWeights& weights() const { return weights_; }

  EncoderModel with_head(HeadKind kind, Linear head) const;

  std::vector<TensorRef> tensors() const;

 private:
  EncoderConfig config_;
  Vocab vocab_;
  EncoderWeights weights_;
};

/// Writes `<manifest>`, its ".bin" blob and a ".vocab" token list beside it.
void save_weights(const EncoderModel& model, const std::filesystem::path& manifest);
EncoderModel load_weights(const std::filesystem::path& manifest);

enum class AttnRole { Key = 0, Query = 1, Value = 2 };
inline constexpr std::array<AttnRole, 3> kAttnRoles = {AttnRole::Key, AttnRole::Query, AttnRole::Value};
std::string_view role_name(AttnRole role);

/// In-place transforms applied at the intervention points. Unset members are skipped.
struct Hooks {
  /// Penultimate layer, per head: rows of K, Q or V (tokens x head_dim) before the scores.
  std::function<void(std::size_t head, AttnRole role, Matrix& rows)> attention;
  /// Every token row output by the penultimate layer.
  std::function<void(Matrix& tokens)> penult_tokens;
  /// CLS row output by the final layer, before the pooler.
  std::function<void(std::span<double> cls)> final_cls;
  /// Pooled sentence vector, before the classification heads.
  std::function<void(std::span<double> sent)> sent;

  bool empty() const { return !attention && !penult_tokens && !final_cls && !sent; }
};

struct ForwardTrace {
  std::vector<Matrix> layer_states;              // output of each layer, after hooks
  std::vector<std::vector<Matrix>> attention;    // [layer][head] attention probabilities
  std::vector<std::array<Matrix, 3>> penult_kqv; // [head][role], as used by the scores
  Vector cls_final;
  Vector sent;
  std::array<double, 2> nsp_probs{};
  std::array<double, 3> nli_probs{};

  bool operator==(const ForwardTrace&) const = default;
};

/// Hidden state entering the penultimate layer; no hook can change it.
struct EncoderPrefix {
  Matrix hidden;
  std::vector<Matrix> layer_states;
  std::vector<std::vector<Matrix>> attention;
};

EncoderPrefix encode_prefix(const EncoderModel& model, const EncodedInput& input);
ForwardTrace forward(const EncoderModel& model, const EncoderPrefix& prefix, const Hooks& hooks = {});
ForwardTrace forward(const EncoderModel& model, const EncodedInput& input, const Hooks& hooks = {});

struct EncoderShape {
  std::size_t d_model = 0;
  std::size_t n_heads = 0;
  std::size_t head_dim = 0;
  std::size_t n_layers = 0;
};

/// Anything that maps a sentence pair to a ForwardTrace with the four hook points.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncodedInput encode(std::string_view sent_a, std::string_view sent_b) const = 0;
  virtual ForwardTrace forward(const EncodedInput& input, const Hooks& hooks) const = 0;
  virtual EncoderShape shape() const = 0;

  ForwardTrace run(std::string_view sent_a, std::string_view sent_b, const Hooks& hooks = {}) const {
    return forward(encode(sent_a, sent_b), hooks);
  }
};

/// Encoder backed by an EncoderModel. Optionally memoizes the hook-free prefix per input;
/// the cache is guarded and safe to share across threads.
class TransformerEncoder final : public Encoder {
 public:
  explicit TransformerEncoder(std::shared_ptr<const EncoderModel> model, bool cache_prefixes = true);

  EncodedInput encode(std::string_view sent_a, std::string_view sent_b) const override;
  ForwardTrace forward(const EncodedInput& input, const Hooks& hooks) const override;
  EncoderShape shape() const override;

  const EncoderModel& model() const { return *model_; }

 private:
  std::shared_ptr<const EncoderPrefix> prefix_for(const EncodedInput& input) const;

  std::shared_ptr<const EncoderModel> model_;
  bool cache_prefixes_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const EncoderPrefix>> cache_;
};

}  // namespace projdebias
