#include "linear_stub.hpp"

#include <cmath>

#include "projdebias/default_data.hpp"

namespace projdebias::testing {

namespace {

const std::pair<const char*, const char*> kGendered[] = {
    {"he", "she"},         {"man", "woman"},   {"father", "mother"},   {"boy", "girl"},
    {"son", "daughter"},   {"brother", "sister"}, {"husband", "wife"}, {"uncle", "aunt"},
    {"king", "queen"},     {"male", "female"}, {"grandfather", "grandmother"},
    {"gentleman", "lady"}, {"groom", "bride"},
};

const char* kMaleContent[] = {"engine", "football", "weights", "shed", "match", "wood", "roof", "truck"};
const char* kFemaleContent[] = {"cake", "dress", "flowers", "shoes", "kitchen", "baby", "scarf", "shopping"};

}  // namespace

LinearStubEncoder::LinearStubEncoder(double gain, double offset, double word_noise) : gain_(gain), offset_(offset) {
  vocab_ = Vocab::from_words(default_vocab_words());
  embedding_.assign(vocab_.size(), Vector(4, 0.0));
  for (std::size_t i = 0; i < std::size(kGendered); ++i) {
    const double delta = 1.0 + 0.1 * static_cast<double>(i);
    gender_[kGendered[i].first] = delta;
    gender_[kGendered[i].second] = -delta;
  }
  for (const auto& [word, delta] : gender_) {
    if (vocab_.contains(word)) embedding_[static_cast<std::size_t>(vocab_.id(word))][0] = delta;
  }
  for (const char* w : kMaleContent) embedding_[static_cast<std::size_t>(vocab_.id(w))][1] = 1.0;
  for (const char* w : kFemaleContent) embedding_[static_cast<std::size_t>(vocab_.id(w))][1] = -1.0;
  // Small word-specific values on the other head so its slices are not all zero.
  for (std::size_t id = 0; id < embedding_.size(); ++id) {
    embedding_[id][2] = word_noise * static_cast<double>(id % 7);
    embedding_[id][3] = -word_noise * static_cast<double>(id % 5);
  }
}

double LinearStubEncoder::gender_of(const std::string& word) const {
  const auto it = gender_.find(word);
  return it == gender_.end() ? 0.0 : it->second;
}

EncodedInput LinearStubEncoder::encode(std::string_view sent_a, std::string_view sent_b) const {
  return tokenize(vocab_, sent_a, sent_b, 64);
}

ForwardTrace LinearStubEncoder::forward(const EncodedInput& input, const Hooks& hooks) const {
  const std::size_t len = input.size();
  Matrix x(len, 4);
  for (std::size_t i = 0; i < len; ++i) {
    const Vector& e = embedding_.at(static_cast<std::size_t>(input.ids[i]));
    std::copy(e.begin(), e.end(), x.row(i).begin());
  }

  ForwardTrace trace;
  Matrix penult(len, 4);
  for (std::size_t h = 0; h < 2; ++h) {
    std::array<Matrix, 3> kqv;
    for (auto& m : kqv) {
      m = Matrix(len, 2);
      for (std::size_t i = 0; i < len; ++i) {
        m(i, 0) = x(i, 2 * h);
        m(i, 1) = x(i, 2 * h + 1);
      }
    }
    if (hooks.attention) {
      for (AttnRole role : kAttnRoles) hooks.attention(h, role, kqv[static_cast<std::size_t>(role)]);
    }
    for (std::size_t i = 0; i < len; ++i) {
      penult(i, 2 * h) = kqv[2](i, 0);
      penult(i, 2 * h + 1) = kqv[2](i, 1);
    }
    trace.penult_kqv.push_back(std::move(kqv));
  }
  if (hooks.penult_tokens) hooks.penult_tokens(penult);
  trace.layer_states.push_back(penult);
  trace.layer_states.push_back(penult);

  trace.cls_final.assign(4, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 0; k < 4; ++k) trace.cls_final[k] += penult(i, k);
  }
  if (hooks.final_cls) hooks.final_cls(trace.cls_final);
  trace.sent = trace.cls_final;
  if (hooks.sent) hooks.sent(trace.sent);

  const double g = trace.sent[0];
  const double c = trace.sent[1];
  const double gap = gain_ * g * c + offset_ * g;
  trace.nsp_probs = {1.0 / (1.0 + std::exp(-gap)), 1.0 / (1.0 + std::exp(gap))};
  const double z = std::exp(g) + 1.0 + std::exp(-g);
  trace.nli_probs = {std::exp(g) / z, 1.0 / z, std::exp(-g) / z};
  return trace;
}

}  // namespace projdebias::testing
