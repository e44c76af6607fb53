#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ctxrec/pairclass.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace ctxrec;
using ctxrec::testing::TempDir;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
  }
  return m;
}

struct Separable {
  ContextSet contexts{{"method"}};
  DocVectors vectors;
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> held_out;
};

Separable separable(std::uint64_t seed) {
  Separable s;
  Rng rng(seed);
  const std::vector<std::string> labels = {"method", "none"};
  s.train = ctxrec::testing::separable_pairs(rng, s.vectors, labels, 200, 0.1, 5.0, 4, "train-");
  s.held_out = ctxrec::testing::separable_pairs(rng, s.vectors, labels, 100, 0.1, 5.0, 4, "test-");
  return s;
}

// Straightforward per-class counting.
struct NaiveMetrics {
  double accuracy = 0, macro_f1 = 0;
  std::vector<double> f1;
};

NaiveMetrics naive_metrics(int k, const std::vector<int>& truth, const std::vector<int>& pred) {
  NaiveMetrics m;
  int correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  m.accuracy = double(correct) / double(truth.size());
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp++;
      if (pred[i] == c && truth[i] != c) fp++;
      if (pred[i] != c && truth[i] == c) fn++;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0;
    m.f1.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0);
    m.macro_f1 += m.f1.back() / k;
  }
  return m;
}

}  // namespace

TEST_CASE("pair features") {
  DenseVector a(3), b(3);
  a << 1, -2, 3;
  b << 0.5, 4, -1;
  const DenseVector f = make_features(a, b);
  CHECK(f.size() == 12);
  CHECK(f.segment(0, 3) == a);
  CHECK(f.segment(3, 3) == b);
  CHECK(f.segment(6, 3) == (a - b).cwiseAbs());
  CHECK(f.segment(9, 3) == a.cwiseProduct(b));
  CHECK(make_features(a, a).segment(6, 3).isZero(0.0));
  const DenseVector g = make_features(b, a);
  CHECK(g.segment(0, 3) == f.segment(3, 3));
  CHECK(g.segment(3, 3) == f.segment(0, 3));
  CHECK(g.tail(6) == f.tail(6));
  CHECK_THROWS_AS(make_features(a, DenseVector::Zero(2)), InvalidArgumentError);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(123);
  for (int sample = 0; sample < 10; ++sample) {
    const Eigen::Index classes = 2 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index dim = 4 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::MatrixXd w = random_matrix(rng, classes, dim);
    const Eigen::VectorXd b = random_matrix(rng, classes, 1);
    const Eigen::MatrixXd x = 2.0 * random_matrix(rng, rows, dim);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < rows; ++i) labels.push_back(static_cast<int>(rng.below(classes)));
    const double l2 = sample % 2 ? 0.0 : 0.3;
    const LossGradient g = loss_and_gradient(w, b, x, labels, l2);

    const double h = 1e-5;
    Eigen::MatrixXd num_w(classes, dim);
    for (Eigen::Index i = 0; i < classes; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        Eigen::MatrixXd plus = w, minus = w;
        plus(i, j) += h;
        minus(i, j) -= h;
        num_w(i, j) = (loss_and_gradient(plus, b, x, labels, l2).loss -
                       loss_and_gradient(minus, b, x, labels, l2).loss) / (2 * h);
      }
    }
    Eigen::VectorXd num_b(classes);
    for (Eigen::Index i = 0; i < classes; ++i) {
      Eigen::VectorXd plus = b, minus = b;
      plus[i] += h;
      minus[i] -= h;
      num_b[i] = (loss_and_gradient(w, plus, x, labels, l2).loss - loss_and_gradient(w, minus, x, labels, l2).loss) /
                 (2 * h);
    }
    CHECK((g.weights - num_w).norm() / std::max(g.weights.norm(), num_w.norm()) < 1e-4);
    CHECK((g.bias - num_b).norm() / std::max(g.bias.norm(), num_b.norm()) < 1e-4);
    for (Eigen::Index i = 0; i < classes; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double denom = std::max({std::abs(g.weights(i, j)), std::abs(num_w(i, j)), 1e-6});
        CHECK(std::abs(g.weights(i, j) - num_w(i, j)) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("separable pairs are learned") {
  const Separable s = separable(1);
  const TrainResult r = train(s.train, s.vectors, s.contexts);
  CHECK(r.model.classes == std::vector<std::string>{"method", "none"});
  CHECK(r.model.document_dim() == 4);
  CHECK(evaluate(r.model, s.train, s.vectors).accuracy >= 0.95);
  const Metrics held = evaluate(r.model, s.held_out, s.vectors);
  CHECK(held.accuracy >= 0.90);
  CHECK(held.confusion.sum() == static_cast<int>(s.held_out.size()));

  double asym = 0.0;
  for (const auto& p : s.held_out) {
    const auto& va = s.vectors.at(p.a);
    const auto& vb = s.vectors.at(p.b);
    asym += (predict(r.model, va, vb) - predict(r.model, vb, va)).cwiseAbs().maxCoeff();
  }
  CHECK(asym / static_cast<double>(s.held_out.size()) <= 0.1);
}

TEST_CASE("training is deterministic") {
  const Separable s = separable(2);
  SoftmaxConfig c;
  c.epochs = 10;
  const TrainResult a = train(s.train, s.vectors, s.contexts, c);
  const TrainResult b = train(s.train, s.vectors, s.contexts, c);
  CHECK(a.model == b.model);
  CHECK(a.final_loss == b.final_loss);
  CHECK(a.epoch_losses.size() == 10);
  CHECK(a.final_loss == a.epoch_losses.back());
}

TEST_CASE("strong regularisation shrinks the weights") {
  const Separable s = separable(3);
  SoftmaxConfig c;
  c.l2 = 1e6;
  c.epochs = 20;
  const TrainResult r = train(s.train, s.vectors, s.contexts, c);
  CHECK(r.model.weights.norm() < 1e-2);
  CHECK(r.model.weights.allFinite());
}

TEST_CASE("full-batch loss is non-increasing") {
  const Separable s = separable(4);
  SoftmaxConfig c;
  c.batch_size = 100000;
  c.learning_rate = 0.02;
  c.epochs = 60;
  c.l2 = 1e-3;
  const TrainResult r = train(s.train, s.vectors, s.contexts, c);
  for (std::size_t i = 1; i < r.epoch_losses.size(); ++i) {
    CHECK(r.epoch_losses[i] <= r.epoch_losses[i - 1] + 1e-9);
  }
  CHECK(r.epoch_losses.back() < r.epoch_losses.front());
}

TEST_CASE("probabilities") {
  SoftmaxModel zero;
  zero.classes = {"a", "b", "none"};
  zero.weights = Eigen::MatrixXd::Zero(3, 8);
  zero.bias = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd u = predict(zero, DenseVector::Ones(2), DenseVector::Zero(2));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(u[i] - 1.0 / 3.0) < 1e-15);

  Rng rng(9);
  SoftmaxModel m = zero;
  for (int trial = 0; trial < 200; ++trial) {
    m.weights = 50.0 * random_matrix(rng, 3, 8);
    m.bias = 50.0 * random_matrix(rng, 3, 1);
    const Eigen::VectorXd p = predict(m, random_matrix(rng, 2, 1), random_matrix(rng, 2, 1));
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
  }
  CHECK_THROWS_AS(predict(zero, DenseVector::Ones(3), DenseVector::Ones(3)), InvalidArgumentError);
}

TEST_CASE("training input errors") {
  const ContextSet contexts({"method", "resource"});
  DocVectors v;
  v["a"] = DenseVector::Ones(2);
  v["b"] = DenseVector::Zero(2);
  v["c"] = DenseVector::Ones(2);
  const std::vector<LabeledPair> one_class = {{"a", "b", "method"}, {"b", "c", "method"}};
  CHECK_THROWS_AS(train(one_class, v, contexts), InvalidArgumentError);
  const std::vector<LabeledPair> missing = {{"a", "zz", "method"}, {"b", "c", "none"}};
  CHECK_THROWS_AS(train(missing, v, contexts), InvalidArgumentError);
  const std::vector<LabeledPair> unknown = {{"a", "b", "outcome"}, {"b", "c", "none"}};
  CHECK_THROWS_AS(train(unknown, v, contexts), UnknownContextError);
  const std::vector<LabeledPair> self = {{"a", "a", "method"}, {"b", "c", "none"}};
  CHECK_THROWS_AS(train(self, v, contexts), InvalidArgumentError);
  CHECK_THROWS_AS(train({}, v, contexts), InvalidArgumentError);
}

TEST_CASE("metrics") {
  SUBCASE("all correct") {
    const std::vector<int> t = {0, 1, 2, 1};
    const Metrics m = compute_metrics({"a", "b", "c"}, t, t);
    CHECK(m.accuracy == 1.0);
    CHECK(m.macro_f1 == 1.0);
    CHECK(m.confusion == Eigen::MatrixXi(Eigen::Vector3i(1, 2, 1).asDiagonal()));
  }
  SUBCASE("constant predictor on a balanced set") {
    const std::vector<int> t = {0, 0, 1, 1};
    const std::vector<int> p = {0, 0, 0, 0};
    const Metrics m = compute_metrics({"x", "none"}, t, p);
    CHECK(m.accuracy == 0.5);
    CHECK(std::abs(m.macro_f1 - 1.0 / 3.0) < 1e-15);
    CHECK(m.confusion(1, 0) == 2);
  }
  SUBCASE("independent re-implementation") {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
      const int k = 2 + static_cast<int>(rng.below(4));
      const std::size_t n = 1 + rng.below(60);
      std::vector<int> t, p;
      for (std::size_t i = 0; i < n; ++i) {
        t.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
        p.push_back(rng.uniform() < 0.5 ? t.back() : static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
      }
      std::vector<std::string> names;
      for (int c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
      const Metrics m = compute_metrics(names, t, p);
      const NaiveMetrics o = naive_metrics(k, t, p);
      CHECK(m.accuracy == doctest::Approx(o.accuracy).epsilon(1e-12));
      CHECK(m.macro_f1 == doctest::Approx(o.macro_f1).epsilon(1e-12));
      for (int c = 0; c < k; ++c) CHECK(m.per_class[static_cast<std::size_t>(c)].f1 == doctest::Approx(o.f1[c]));
      for (int i = 0; i < k; ++i) {
        std::size_t row = 0;
        for (int x : t) row += x == i;
        CHECK(static_cast<std::size_t>(m.confusion.row(i).sum()) == row);
      }
    }
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(compute_metrics({"a", "b"}, {}, {}), InvalidArgumentError);
  }
}

TEST_CASE("negative sampling") {
  const std::vector<std::string> ids = {"a", "b", "c", "d"};
  const std::vector<LabeledPair> pos = {{"a", "b", "method"}, {"c", "d", "method"}};
  const auto neg = sample_negative_pairs(pos, ids, 1.0, 3);
  CHECK(neg.size() == 2);
  for (const auto& p : neg) {
    CHECK(p.label == "none");
    CHECK(p.a != p.b);
    for (const auto& q : pos) {
      CHECK_FALSE(((p.a == q.a && p.b == q.b) || (p.a == q.b && p.b == q.a)));
    }
  }
  CHECK(sample_negative_pairs(pos, ids, 100.0, 3).size() == 4);
  CHECK(sample_negative_pairs(pos, ids, 1.0, 3) == neg);
  CHECK_THROWS_AS(sample_negative_pairs(pos, ids, -1.0, 3), InvalidArgumentError);
}

TEST_CASE("model persistence") {
  const Separable s = separable(5);
  SoftmaxConfig c;
  c.epochs = 3;
  const SoftmaxModel m = train(s.train, s.vectors, s.contexts, c).model;
  std::stringstream buf;
  save_model(m, buf);
  CHECK(buf.str().starts_with("ctxrec-softmax-model 1"));
  const SoftmaxModel back = load_model(buf);
  CHECK(back == m);

  std::istringstream wrong("ctxrec-softmax-model 99\n");
  CHECK_THROWS_AS(load_model(wrong), FormatError);
  std::istringstream truncated(buf.str().substr(0, buf.str().size() / 2));
  CHECK_THROWS_AS(load_model(truncated), FormatError);

  TempDir dir;
  save_model(m, dir / "model.txt");
  CHECK(load_model(dir / "model.txt") == m);
}

TEST_CASE("pairs file") {
  TempDir dir;
  std::ofstream(dir / "p.jsonl") << "{\"a\":\"x\",\"b\":\"y\",\"label\":\"method\"}\n\n{\"a\":\"y\",\"b\":\"z\",\"label\":\"none\"}\n";
  CHECK(load_pairs(dir / "p.jsonl") ==
        std::vector<LabeledPair>{{"x", "y", "method"}, {"y", "z", "none"}});
  std::ofstream(dir / "bad.jsonl") << "{\"a\":\"x\"}\n";
  CHECK_THROWS_AS(load_pairs(dir / "bad.jsonl"), FormatError);
}
