#pragma once

#include <map>
#include <string>

#include "projdebias/encoder.hpp"

namespace projdebias::testing {

/// Linear-identity encoder over 4-dim token vectors (2 heads of width 2).
///
/// Axis 0 carries gender: +delta for male words, -delta for their female partners.
/// Axis 1 carries activity content: +1 male-stereotyped, -1 female-stereotyped.
/// K = Q = V = the head's slice of the token rows, penultimate output = V, final CLS =
/// sum of token rows, SENT = CLS. NSP logit gap = gain * g * c + offset * g with
/// g = SENT[0], c = SENT[1]; NLI logits = (g, 0, -g).
/// `word_noise` scales small word-specific values on axes 2 and 3; with 0 the gender
/// signal is exactly rank one.
class LinearStubEncoder final : public Encoder {
 public:
  explicit LinearStubEncoder(double gain = 4.0, double offset = 1.0, double word_noise = 0.01);

  EncodedInput encode(std::string_view sent_a, std::string_view sent_b) const override;
  ForwardTrace forward(const EncodedInput& input, const Hooks& hooks) const override;
  EncoderShape shape() const override { return {4, 2, 2, 2}; }

  const Vocab& vocab() const { return vocab_; }
  /// Signed gender offset of a word (0 for neutral words).
  double gender_of(const std::string& word) const;

 private:
  Vocab vocab_;
  std::vector<Vector> embedding_;
  std::map<std::string, double> gender_;
  double gain_;
  double offset_;
};

}  // namespace projdebias::testing
