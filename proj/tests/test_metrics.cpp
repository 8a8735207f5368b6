#include "mckelm/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace mckelm;

TEST(Confusion, Tally) {
  const ConfusionMatrix cm = confusion({0, 0, 1}, {0, 1, 1}, 2);
  EXPECT_EQ(cm.counts, (std::vector<std::uint64_t>{1, 1, 0, 1}));
  EXPECT_EQ(cm.total, 3u);
  const ConfusionMatrix perfect = confusion({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p)
      if (t != p) {
        EXPECT_EQ(perfect.at(t, p), 0u);
      }
  const ConfusionMatrix empty = confusion({}, {}, 2);
  EXPECT_EQ(empty.total, 0u);
  EXPECT_EQ(empty.counts, (std::vector<std::uint64_t>(4, 0)));
  EXPECT_THROW(confusion({0}, {0, 1}, 2), Error);
  EXPECT_THROW(confusion({0}, {2}, 2), Error);
}

TEST(Accuracy, Values) {
  EXPECT_EQ(accuracy(confusion({0, 1, 1}, {0, 1, 1}, 2)), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(confusion({0, 0, 1}, {0, 1, 1}, 2)), 2.0 / 3.0);
  try {
    accuracy(confusion({}, {}, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty);
  }
}

TEST(Accuracy, GapTimesSampleCountGivesCorrectCount) {
  // 0.93 points of accuracy on 55,096 samples is about 512 samples.
  const std::uint64_t n = 55096;
  const double gap = 0.9966 - 0.9873;
  EXPECT_NEAR(gap * static_cast<double>(n), 513.0, 1.0);
  const std::uint64_t correct_a = 54909, correct_b = correct_a - 513;
  LabelVector truth(n, 0), pa(n, 1), pb(n, 1);
  std::fill(pa.begin(), pa.begin() + static_cast<std::ptrdiff_t>(correct_a), 0);
  std::fill(pb.begin(), pb.begin() + static_cast<std::ptrdiff_t>(correct_b), 0);
  const double delta = accuracy(confusion(truth, pa, 2)) - accuracy(confusion(truth, pb, 2));
  EXPECT_NEAR(delta * static_cast<double>(n), 513.0, 1e-6);
}

TEST(PerClass, Examples) {
  ConfusionMatrix cm{2, {2, 0, 0, 1}, 3};
  auto m = precision_recall_f1(cm, 0);
  EXPECT_EQ(m.precision.value, 1.0);
  EXPECT_EQ(m.recall.value, 1.0);
  EXPECT_EQ(m.f1.value, 1.0);

  ConfusionMatrix half{2, {1, 1, 1, 0}, 3};  // class 0: TP 1, FN 1, FP 1
  m = precision_recall_f1(half, 0);
  EXPECT_EQ(m.precision.value, 0.5);
  EXPECT_EQ(m.recall.value, 0.5);
  EXPECT_EQ(m.f1.value, 0.5);

  ConfusionMatrix none{2, {0, 0, 3, 0}, 3};  // class 1 never predicted, never true
  m = precision_recall_f1(none, 1);
  EXPECT_EQ(m.precision.value, 0.0);
  EXPECT_TRUE(m.precision.degenerate);
  EXPECT_THROW(precision_recall_f1(none, 2), Error);
}

TEST(Macro, Examples) {
  const MacroMetrics sym = macro_average(ConfusionMatrix{2, {4, 1, 1, 4}, 10});
  EXPECT_EQ(sym.precision.value, sym.per_class[0].precision.value);
  EXPECT_EQ(sym.recall.value, sym.per_class[1].recall.value);

  const MacroMetrics m = macro_average(ConfusionMatrix{2, {3, 1, 2, 4}, 10});
  EXPECT_NEAR(m.precision.value, 0.7, 1e-15);

  const MacroMetrics one = macro_average(confusion({0, 0, 0}, {0, 0, 1}, 2));
  EXPECT_TRUE(one.partial);
  EXPECT_TRUE(one.per_class[1].recall.degenerate);
  EXPECT_EQ(one.recall.value, one.per_class[0].recall.value);
  EXPECT_FALSE(one.per_class[1].precision.degenerate);
}

TEST(Invariants, RandomLabelings) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t c = 2 + rng() % 4, n = 1 + rng() % 60;
    LabelVector y(n), p(n);
    for (auto& v : y) v = static_cast<Label>(rng() % c);
    for (auto& v : p) v = static_cast<Label>(rng() % c);
    EXPECT_EQ(accuracy(confusion(y, y, c)), 1.0);
    const EvalReport r = evaluate(y, p, c);
    for (const auto& cm : r.macro.per_class) {
      for (const Metric* v : {&cm.precision, &cm.recall, &cm.f1}) {
        EXPECT_GE(v->value, 0.0);
        EXPECT_LE(v->value, 1.0);
      }
      if (!cm.f1.degenerate) {
        EXPECT_LE(cm.f1.value, std::max(cm.precision.value, cm.recall.value) + 1e-15);
        EXPECT_GE(cm.f1.value, std::min(cm.precision.value, cm.recall.value) - 1e-15);
      }
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    LabelVector y2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      y2[i] = y[perm[i]];
      p2[i] = p[perm[i]];
    }
    const EvalReport r2 = evaluate(y2, p2, c);
    EXPECT_EQ(r2.accuracy, r.accuracy);
    EXPECT_EQ(r2.macro.f1.value, r.macro.f1.value);
  }
}

TEST(Macro, F1IsHarmonicMeanOfMacroPrecisionAndRecall) {
  const MacroMetrics m = macro_average(ConfusionMatrix{3, {5, 1, 0, 2, 3, 1, 0, 4, 6}, 22});
  const double p = m.precision.value, r = m.recall.value;
  EXPECT_NEAR(m.f1.value, 2 * p * r / (p + r), 1e-15);
}
