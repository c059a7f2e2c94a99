#include "projdebias/head_training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "projdebias/error.hpp"

namespace projdebias {

HeadLossGrad softmax_head_loss(const Matrix& features, std::span<const int> labels, const Linear& head) {
  const std::size_t n = features.rows();
  const std::size_t classes = head.weight.rows();
  if (n == 0) throw Error("head training: empty dataset");
  if (labels.size() != n) throw Error("head training: label count does not match feature rows");
  if (features.cols() != head.weight.cols()) throw Error("head training: feature width mismatch");

  HeadLossGrad out;
  out.grad_weight = Matrix(classes, features.cols());
  out.grad_bias.assign(classes, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw Error("head training: label " + std::to_string(y) + " outside the head's classes");
    }
    Vector logits = head.apply(features.row(r));
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) {
      z = std::exp(z - mx);
      total += z;
    }
    for (double& z : logits) z /= total;
    out.loss -= std::log(std::max(logits[static_cast<std::size_t>(y)], 1e-300));
    for (std::size_t c = 0; c < classes; ++c) {
      const double delta = logits[c] - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0);
      out.grad_bias[c] += delta;
      auto gw = out.grad_weight.row(c);
      const auto x = features.row(r);
      for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += delta * x[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (double& g : out.grad_weight.data()) g *= inv;
  for (double& g : out.grad_bias) g *= inv;
  return out;
}

HeadFit fit_softmax_head(const Matrix& features, std::span<const int> labels, Linear init, double lr, int epochs) {
  if (!(lr >= 0.0)) throw Error("head training: learning rate must be non-negative");
  if (epochs < 0) throw Error("head training: negative epoch count");
  HeadFit fit;
  fit.head = std::move(init);
  for (int e = 0; e < epochs; ++e) {
    const HeadLossGrad lg = softmax_head_loss(features, labels, fit.head);
    fit.loss_history.push_back(lg.loss);
    for (std::size_t i = 0; i < lg.grad_weight.data().size(); ++i) {
      fit.head.weight.data()[i] -= lr * lg.grad_weight.data()[i];
    }
    for (std::size_t i = 0; i < lg.grad_bias.size(); ++i) fit.head.bias[i] -= lr * lg.grad_bias[i];
  }
  fit.final_loss = softmax_head_loss(features, labels, fit.head).loss;
  fit.loss_history.push_back(fit.final_loss);
  return fit;
}

Matrix sentence_features(const Encoder& encoder, const std::vector<LabeledPair>& examples) {
  Matrix features;
  for (const auto& ex : examples) features.append_row(encoder.run(ex.sent_a, ex.sent_b).sent);
  return features;
}

HeadFit train_head(const EncoderModel& model, HeadKind kind, const std::vector<LabeledPair>& examples, double lr,
                   int epochs) {
  if (examples.empty()) throw Error("head training: empty dataset");
  TransformerEncoder encoder(std::make_shared<const EncoderModel>(model), false);
  const Matrix features = sentence_features(encoder, examples);
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(ex.label);
  const Linear& init = kind == HeadKind::Nsp ? model.weights().nsp_head : model.weights().nli_head;
  return fit_softmax_head(features, labels, init, lr, epochs);
}

}  // namespace projdebias
