#pragma once

#include "mckelm/error.hpp"
#include "mckelm/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mckelm {

struct ConfusionMatrix {
  std::size_t class_count = 0;
  std::vector<std::uint64_t> counts;  // row-major counts[true * c + predicted]
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * class_count + predicted]; }

  std::uint64_t true_positive(std::size_t k) const { return at(k, k); }
  std::uint64_t false_positive(std::size_t k) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < class_count; ++t) if (t != k) s += at(t, k);
    return s;
  }
  std::uint64_t false_negative(std::size_t k) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < class_count; ++p) if (p != k) s += at(k, p);
    return s;
  }
};

inline ConfusionMatrix confusion(const LabelVector& truth, const LabelVector& predicted, std::size_t c) {
  if (truth.size() != predicted.size())
    throw Error(ErrorKind::shape, "confusion: " + std::to_string(truth.size()) + " true labels vs " +
                                      std::to_string(predicted.size()) + " predictions");
  ConfusionMatrix cm;
  cm.class_count = c;
  cm.counts.assign(c * c, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= c || predicted[i] >= c)
      throw Error(ErrorKind::range, "confusion: label at position " + std::to_string(i) + " is not below " + std::to_string(c));
    ++cm.counts[truth[i] * c + predicted[i]];
  }
  cm.total = truth.size();
  return cm;
}

// Fraction of correct predictions, trace / total.
inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.total == 0) throw Error(ErrorKind::empty, "accuracy is undefined on zero samples");
  std::uint64_t correct = 0;
  for (std::size_t k = 0; k < cm.class_count; ++k) correct += cm.at(k, k);
  return static_cast<double>(correct) / static_cast<double>(cm.total);
}

// A metric whose denominator was zero reports 0 with degenerate set.
struct Metric {
  double value = 0.0;
  bool degenerate = false;
};

struct ClassMetrics {
  Metric precision;
  Metric recall;
  Metric f1;
};

inline Metric safe_ratio(double num, double denom) {
  if (denom == 0.0) return {0.0, true};
  return {num / denom, false};
}

inline Metric harmonic_mean(const Metric& p, const Metric& r) {
  if (p.degenerate || r.degenerate) return {0.0, true};
  return safe_ratio(2.0 * p.value * r.value, p.value + r.value);
}

inline ClassMetrics precision_recall_f1(const ConfusionMatrix& cm, std::size_t class_id) {
  if (class_id >= cm.class_count) throw Error(ErrorKind::range, "class " + std::to_string(class_id) + " out of range");
  const auto tp = static_cast<double>(cm.true_positive(class_id));
  const auto fp = static_cast<double>(cm.false_positive(class_id));
  const auto fn = static_cast<double>(cm.false_negative(class_id));
  ClassMetrics m;
  m.precision = safe_ratio(tp, tp + fp);
  m.recall = safe_ratio(tp, tp + fn);
  m.f1 = harmonic_mean(m.precision, m.recall);
  return m;
}

// Unweighted mean over the classes where each metric is defined. The macro
// F1 is the harmonic mean of macro precision and macro recall.
struct MacroMetrics {
  Metric precision;
  Metric recall;
  Metric f1;
  std::vector<ClassMetrics> per_class;
  bool partial = false;  // some class was excluded from an average
};

inline MacroMetrics macro_average(const ConfusionMatrix& cm) {
  MacroMetrics out;
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t p_n = 0, r_n = 0;
  for (std::size_t k = 0; k < cm.class_count; ++k) {
    const ClassMetrics m = precision_recall_f1(cm, k);
    out.per_class.push_back(m);
    if (!m.precision.degenerate) { p_sum += m.precision.value; ++p_n; }
    if (!m.recall.degenerate) { r_sum += m.recall.value; ++r_n; }
    if (m.precision.degenerate || m.recall.degenerate) out.partial = true;
  }
  out.precision = p_n ? Metric{p_sum / static_cast<double>(p_n), false} : Metric{0.0, true};
  out.recall = r_n ? Metric{r_sum / static_cast<double>(r_n), false} : Metric{0.0, true};
  out.f1 = harmonic_mean(out.precision, out.recall);
  return out;
}

struct EvalReport {
  std::string model;
  std::size_t samples = 0;
  double accuracy = 0.0;
  MacroMetrics macro;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
};

inline EvalReport evaluate(const LabelVector& truth, const LabelVector& predicted, std::size_t c) {
  EvalReport r;
  r.confusion = confusion(truth, predicted, c);
  r.samples = truth.size();
  r.accuracy = accuracy(r.confusion);
  r.macro = macro_average(r.confusion);
  return r;
}

}  // namespace mckelm
