#pragma once

#include <span>
#include <string>
#include <vector>

#include "projdebias/encoder.hpp"

namespace projdebias {

struct LabeledPair {
  std::string sent_a;
  std::string sent_b;
  int label = 0;
};

struct HeadLossGrad {
  double loss = 0.0;  // mean cross-entropy
  Matrix grad_weight;
  Vector grad_bias;
};

/// Mean softmax cross-entropy of a linear head over feature rows, with its analytic gradient.
HeadLossGrad softmax_head_loss(const Matrix& features, std::span<const int> labels, const Linear& head);

struct HeadFit {
  Linear head;
  std::vector<double> loss_history;  // loss before each epoch, then after the last one
  double final_loss = 0.0;
};

/// Full-batch gradient descent on the cross-entropy of a linear softmax head.
HeadFit fit_softmax_head(const Matrix& features, std::span<const int> labels, Linear init, double lr, int epochs);

/// Pooled SENT vectors of each pair, with no hooks installed.
Matrix sentence_features(const Encoder& encoder, const std::vector<LabeledPair>& examples);

/// Trains the NSP or NLI head on frozen SENT features, starting from the model's current head.
HeadFit train_head(const EncoderModel& model, HeadKind kind, const std::vector<LabeledPair>& examples, double lr,
                   int epochs);

}  // namespace projdebias
