#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ctxrec/context_set.hpp"
#include "ctxrec/textrep.hpp"

namespace ctxrec {

using DocVectors = std::unordered_map<std::string, DenseVector>;

struct LabeledPair {
  std::string a;
  std::string b;
  std::string label;  // a context label or "none"

  bool operator==(const LabeledPair&) const = default;
};

// [va ; vb ; |va - vb| ; va .* vb]
DenseVector make_features(const DenseVector& va, const DenseVector& vb);

struct SoftmaxConfig {
  double learning_rate = 0.1;
  int epochs = 100;
  double l2 = 1e-4;
  std::size_t batch_size = 32;
  std::uint64_t seed = 7;
};

// Multinomial logistic regression over pair features. Row i of `weights`
// and entry i of `bias` belong to classes[i]; the last class is "none".
struct SoftmaxModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  SoftmaxConfig config;

  Eigen::Index feature_dim() const { return weights.cols(); }
  Eigen::Index document_dim() const { return weights.cols() / 4; }
  std::optional<std::size_t> class_index(std::string_view label) const;

  bool operator==(const SoftmaxModel& o) const {
    return classes == o.classes && weights == o.weights && bias == o.bias;
  }
};

struct TrainResult {
  SoftmaxModel model;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;  // full objective after each epoch
};

// Mini-batch SGD on mean cross-entropy + (l2 / 2) |W|^2. Every pair is
// also presented in swapped order. Classes are the context labels followed
// by "none".
TrainResult train(std::span<const LabeledPair> pairs, const DocVectors& vectors, const ContextSet& contexts,
                  const SoftmaxConfig& config = {});

// Class distribution for the ordered pair (a, b).
Eigen::VectorXd predict(const SoftmaxModel& model, const DenseVector& va, const DenseVector& vb);
Eigen::VectorXd predict_features(const SoftmaxModel& model, const DenseVector& features);

// Objective value and gradient over a batch (rows of `features`).
struct LossGradient {
  double loss = 0.0;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};
LossGradient loss_and_gradient(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                               const Eigen::MatrixXd& features, std::span<const int> labels, double l2);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
};

// 0/0 ratios count as 0.
Metrics compute_metrics(std::vector<std::string> classes, std::span<const int> truth, std::span<const int> predicted);
Metrics evaluate(const SoftmaxModel& model, std::span<const LabeledPair> pairs, const DocVectors& vectors);

// Adds round(ratio * |positives|) "none" pairs drawn uniformly from
// unordered document pairs that carry no positive label, capped by how
// many such pairs exist.
std::vector<LabeledPair> sample_negative_pairs(std::span<const LabeledPair> positives,
                                               std::span<const std::string> ids, double ratio,
                                               std::uint64_t seed);

// JSONL `{"a", "b", "label"}` per line.
std::vector<LabeledPair> load_pairs(const std::filesystem::path& path);

void save_model(const SoftmaxModel& model, std::ostream& out);
void save_model(const SoftmaxModel& model, const std::filesystem::path& path);
SoftmaxModel load_model(std::istream& in);
SoftmaxModel load_model(const std::filesystem::path& path);

}  // namespace ctxrec
