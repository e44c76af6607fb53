#include "ctxrec/pairclass.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxrec/error.hpp"
#include "ctxrec/random.hpp"

namespace ctxrec {

namespace {

constexpr const char* kModelMagic = "ctxrec-softmax-model";
constexpr int kModelVersion = 1;

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

const DenseVector& vector_of(const DocVectors& vectors, const std::string& id) {
  auto it = vectors.find(id);
  if (it == vectors.end()) throw InvalidArgumentError("no document vector for '" + id + "'");
  return it->second;
}

int argmax(const Eigen::VectorXd& p) {
  Eigen::Index best = 0;
  p.maxCoeff(&best);
  return static_cast<int>(best);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DenseVector make_features(const DenseVector& va, const DenseVector& vb) {
  if (va.size() != vb.size()) {
    throw InvalidArgumentError("make_features: dimension mismatch (" + std::to_string(va.size()) + " vs " +
                               std::to_string(vb.size()) + ")");
  }
  const Eigen::Index d = va.size();
  DenseVector f(4 * d);
  f << va, vb, (va - vb).cwiseAbs(), va.cwiseProduct(vb);
  return f;
}

std::optional<std::size_t> SoftmaxModel::class_index(std::string_view label) const {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

LossGradient loss_and_gradient(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                               const Eigen::MatrixXd& features, std::span<const int> labels, double l2) {
  const Eigen::Index m = features.rows();
  LossGradient out{0.0, Eigen::MatrixXd::Zero(weights.rows(), weights.cols()),
                   Eigen::VectorXd::Zero(bias.size())};
  if (m == 0) return out;
  const Eigen::MatrixXd logits = (features * weights.transpose()).rowwise() + bias.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd z = logits.row(i).transpose();
    const double zmax = z.maxCoeff();
    const double log_norm = zmax + std::log((z.array() - zmax).exp().sum());
    const int y = labels[static_cast<std::size_t>(i)];
    out.loss += log_norm - z[y];
    Eigen::VectorXd delta = (z.array() - log_norm).exp().matrix();
    delta[y] -= 1.0;
    out.weights.noalias() += delta * features.row(i);
    out.bias += delta;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  out.loss = out.loss * inv_m + 0.5 * l2 * weights.squaredNorm();
  out.weights = out.weights * inv_m + l2 * weights;
  out.bias *= inv_m;
  return out;
}

TrainResult train(std::span<const LabeledPair> pairs, const DocVectors& vectors, const ContextSet& contexts,
                  const SoftmaxConfig& config) {
  if (pairs.empty()) throw InvalidArgumentError("train: no training pairs");
  if (config.batch_size == 0 || config.epochs < 1 || !(config.learning_rate > 0.0) || config.l2 < 0.0) {
    throw InvalidArgumentError("train: invalid configuration");
  }
  SoftmaxModel model;
  model.classes = contexts.labels();
  model.classes.emplace_back(kNoneLabel);
  model.config = config;

  std::vector<int> labels;
  std::set<int> distinct;
  const auto& first = vector_of(vectors, pairs.front().a);
  const Eigen::Index dim = first.size();
  Eigen::MatrixXd features(static_cast<Eigen::Index>(2 * pairs.size()), 4 * dim);
  Eigen::Index row = 0;
  for (const auto& p : pairs) {
    if (p.a == p.b) throw InvalidArgumentError("train: pair '" + p.a + "' pairs a document with itself");
    const auto cls = model.class_index(p.label);
    if (!cls) throw UnknownContextError("train: unknown label '" + p.label + "'");
    const auto& va = vector_of(vectors, p.a);
    const auto& vb = vector_of(vectors, p.b);
    if (va.size() != dim || vb.size() != dim) throw InvalidArgumentError("train: document vectors differ in dimension");
    features.row(row++) = make_features(va, vb).transpose();
    features.row(row++) = make_features(vb, va).transpose();
    labels.push_back(static_cast<int>(*cls));
    labels.push_back(static_cast<int>(*cls));
    distinct.insert(static_cast<int>(*cls));
  }
  if (distinct.size() < 2) throw InvalidArgumentError("train: need at least two distinct labels");

  const auto classes = static_cast<Eigen::Index>(model.classes.size());
  model.weights = Eigen::MatrixXd::Zero(classes, 4 * dim);
  model.bias = Eigen::VectorXd::Zero(classes);

  Rng rng(config.seed);
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lr = config.learning_rate;
  // Proximal L2 step: W <- (W - lr * grad_data) / (1 + lr * l2).
  const double shrink = 1.0 / (1.0 + lr * config.l2);

  TrainResult result;
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.batch_size < n) rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      batch.resize(static_cast<Eigen::Index>(end - start), features.cols());
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) = features.row(static_cast<Eigen::Index>(order[i]));
        batch_labels.push_back(labels[order[i]]);
      }
      const auto g = loss_and_gradient(model.weights, model.bias, batch, batch_labels, 0.0);
      model.weights = (model.weights - lr * g.weights) * shrink;
      model.bias -= lr * g.bias;
    }
    result.epoch_losses.push_back(loss_and_gradient(model.weights, model.bias, features, labels, config.l2).loss);
  }
  result.final_loss = result.epoch_losses.back();
  result.model = std::move(model);
  return result;
}

Eigen::VectorXd predict_features(const SoftmaxModel& model, const DenseVector& features) {
  if (features.size() != model.feature_dim()) {
    throw InvalidArgumentError("predict: feature dimension " + std::to_string(features.size()) +
                               " does not match model dimension " + std::to_string(model.feature_dim()));
  }
  return softmax(model.weights * features + model.bias);
}

Eigen::VectorXd predict(const SoftmaxModel& model, const DenseVector& va, const DenseVector& vb) {
  if (va.size() != model.document_dim() || vb.size() != model.document_dim()) {
    throw InvalidArgumentError("predict: document vectors must have dimension " +
                               std::to_string(model.document_dim()));
  }
  return predict_features(model, make_features(va, vb));
}

Metrics compute_metrics(std::vector<std::string> classes, std::span<const int> truth, std::span<const int> predicted) {
  if (truth.empty()) throw InvalidArgumentError("metrics: no predictions");
  if (truth.size() != predicted.size()) throw InvalidArgumentError("metrics: truth/prediction size mismatch");
  const auto c = static_cast<Eigen::Index>(classes.size());
  Metrics m;
  m.classes = std::move(classes);
  m.confusion = Eigen::MatrixXi::Zero(c, c);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= c || predicted[i] < 0 || predicted[i] >= c) {
      throw InvalidArgumentError("metrics: class index out of range");
    }
    ++m.confusion(truth[i], predicted[i]);
  }
  m.accuracy = static_cast<double>(m.confusion.trace()) / static_cast<double>(truth.size());
  const auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  for (Eigen::Index k = 0; k < c; ++k) {
    const double tp = m.confusion(k, k);
    ClassMetrics cm;
    cm.support = static_cast<std::size_t>(m.confusion.row(k).sum());
    cm.precision = ratio(tp, m.confusion.col(k).sum());
    cm.recall = ratio(tp, m.confusion.row(k).sum());
    cm.f1 = ratio(2.0 * cm.precision * cm.recall, cm.precision + cm.recall);
    m.macro_f1 += cm.f1;
    m.per_class.push_back(cm);
  }
  m.macro_f1 /= static_cast<double>(c);
  return m;
}

Metrics evaluate(const SoftmaxModel& model, std::span<const LabeledPair> pairs, const DocVectors& vectors) {
  if (pairs.empty()) throw InvalidArgumentError("evaluate: no pairs");
  std::vector<int> truth;
  std::vector<int> predicted;
  for (const auto& p : pairs) {
    const auto cls = model.class_index(p.label);
    if (!cls) throw UnknownContextError("evaluate: unknown label '" + p.label + "'");
    truth.push_back(static_cast<int>(*cls));
    predicted.push_back(argmax(predict(model, vector_of(vectors, p.a), vector_of(vectors, p.b))));
  }
  return compute_metrics(model.classes, truth, predicted);
}

std::vector<LabeledPair> sample_negative_pairs(std::span<const LabeledPair> positives,
                                               std::span<const std::string> ids, double ratio,
                                               std::uint64_t seed) {
  if (ratio < 0.0) throw InvalidArgumentError("negative ratio must be >= 0");
  std::set<std::pair<std::string, std::string>> taken;
  for (const auto& p : positives) taken.insert(std::minmax(p.a, p.b));
  std::vector<std::pair<std::size_t, std::size_t>> free;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (!taken.contains(std::minmax(ids[i], ids[j]))) free.emplace_back(i, j);
    }
  }
  const auto wanted = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives.size())));
  Rng rng(seed);
  rng.shuffle(free.begin(), free.end());
  free.resize(std::min(wanted, free.size()));
  std::vector<LabeledPair> out;
  out.reserve(free.size());
  for (const auto& [i, j] : free) out.push_back({ids[i], ids[j], std::string(kNoneLabel)});
  return out;
}

std::vector<LabeledPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("a").get<std::string>(), j.at("b").get<std::string>(), j.at("label").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("pairs line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

void save_model(const SoftmaxModel& model, std::ostream& out) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "classes " << model.classes.size() << '\n';
  for (const auto& c : model.classes) out << c << '\n';
  out << "features " << model.feature_dim() << '\n';
  const auto& cfg = model.config;
  out << "config " << format_double(cfg.learning_rate) << ' ' << cfg.epochs << ' ' << format_double(cfg.l2) << ' '
      << cfg.batch_size << ' ' << cfg.seed << '\n';
  out << "weights\n";
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    for (Eigen::Index k = 0; k < model.weights.cols(); ++k) {
      out << (k ? " " : "") << format_double(model.weights(r, k));
    }
    out << '\n';
  }
  out << "bias\n";
  for (Eigen::Index r = 0; r < model.bias.size(); ++r) out << (r ? " " : "") << format_double(model.bias[r]);
  out << '\n';
}

void save_model(const SoftmaxModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  save_model(model, out);
}

SoftmaxModel load_model(std::istream& in) {
  const auto fail = [](const std::string& what) { return FormatError("model file: " + what); };
  const auto expect = [&](const char* keyword) {
    std::string word;
    if (!(in >> word) || word != keyword) throw fail(std::string("expected '") + keyword + "'");
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) throw fail("bad header");
  if (version != kModelVersion) throw fail("unsupported version " + std::to_string(version));
  SoftmaxModel model;
  std::size_t classes = 0;
  expect("classes");
  if (!(in >> classes) || classes < 2) throw fail("bad class count");
  in >> std::ws;
  for (std::size_t i = 0; i < classes; ++i) {
    std::string label;
    if (!std::getline(in, label) || label.empty()) throw fail("missing class label");
    model.classes.push_back(label);
  }
  if (model.classes.back() != kNoneLabel) throw fail("last class must be 'none'");
  Eigen::Index features = 0;
  expect("features");
  if (!(in >> features) || features <= 0 || features % 4 != 0) throw fail("bad feature dimension");
  expect("config");
  auto& cfg = model.config;
  if (!(in >> cfg.learning_rate >> cfg.epochs >> cfg.l2 >> cfg.batch_size >> cfg.seed)) throw fail("bad config line");
  expect("weights");
  model.weights.resize(static_cast<Eigen::Index>(classes), features);
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    for (Eigen::Index k = 0; k < features; ++k) {
      if (!(in >> model.weights(r, k))) throw fail("truncated weights");
    }
  }
  expect("bias");
  model.bias.resize(static_cast<Eigen::Index>(classes));
  for (Eigen::Index r = 0; r < model.bias.size(); ++r) {
    if (!(in >> model.bias[r])) throw fail("truncated bias");
  }
  if (!model.weights.allFinite() || !model.bias.allFinite()) throw fail("non-finite parameters");
  return model;
}

SoftmaxModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace ctxrec
