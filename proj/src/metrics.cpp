// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "emodynamix/error.hpp"

namespace emx {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), w_(n_classes * n_classes, 0) {}

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> row_major)
    : n_(n_classes), w_(std::move(row_major)) {
  if (w_.size() != n_ * n_) {
    throw ShapeError("confusion matrix: " + std::to_string(w_.size()) + " entries for " + std::to_string(n_) +
                     " classes");
  }
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const std::size_t> predicted,
                                                  std::span<const std::size_t> truth, std::size_t n_classes) {
  if (predicted.size() != truth.size()) throw ShapeError("confusion matrix: prediction/truth length mismatch");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) cm.add(predicted[i], truth[i]);
  return cm;
}

void ConfusionMatrix::add(std::size_t pred, std::size_t truth, std::uint64_t count) {
  if (pred >= n_ || truth >= n_) {
    throw ValidationError("confusion matrix: class (" + std::to_string(pred) + ", " + std::to_string(truth) +
                          ") out of range for " + std::to_string(n_) + " classes");
  }
  w_[pred * n_ + truth] += count;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(w_.begin(), w_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::row_sum(std::size_t pred) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += (*this)(pred, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, truth);
  return s;
}

F1Scores f1_scores(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ValidationError("f1_scores: confusion matrix is empty");
  F1Scores out;
  out.per_class.resize(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassScore& s = out.per_class[c];
    const double tp = static_cast<double>(cm(c, c));
    const std::uint64_t row = cm.row_sum(c);
    s.support = cm.col_sum(c);
    s.precision = row ? tp / static_cast<double>(row) : 0.0;
    s.recall = s.support ? tp / static_cast<double>(s.support) : 0.0;
    s.f1 = (s.precision + s.recall > 0.0) ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    out.macro += s.f1;
    out.weighted += s.f1 * static_cast<double>(s.support);
  }
  out.macro /= static_cast<double>(cm.classes());
  out.weighted /= static_cast<double>(total);
  return out;
}

PreferenceBias preference_bias(const ConfusionMatrix& cm, std::size_t iterations, bool sample_std) {
  const std::size_t n = cm.classes();
  if (n == 0) throw ValidationError("preference_bias: no classes");
  std::vector<double> p(n, 1.0), next(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double pair = p[i] + p[j];
        // Zero-count terms are skipped so a collapsed pair (p_i = p_j = 0)
        // never produces 0/0.
        if (cm(i, j) && pair > 0.0) num += static_cast<double>(cm(i, j)) * p[j] / pair;
        if (cm(j, i) && pair > 0.0) den += static_cast<double>(cm(j, i)) / pair;
      }
      next[i] = num / (den == 0.0 ? 1e-12 : den);
    }
    p.swap(next);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) throw NumericError("preference_bias: non-finite preference for class " + std::to_string(i));
  }
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : p) ss += (x - mean) * (x - mean);
  const double divisor = sample_std && n > 1 ? static_cast<double>(n - 1) : static_cast<double>(n);
  return {std::sqrt(ss / divisor), std::move(p)};
}

EvalReport make_report(const ConfusionMatrix& cm, std::vector<std::string> labels) {
  if (labels.size() != cm.classes()) throw ShapeError("eval report: label count does not match the matrix");
  EvalReport r;
  r.labels = std::move(labels);
  r.confusion = cm;
  const F1Scores f1 = f1_scores(cm);
  r.macro_f1 = f1.macro;
  r.weighted_f1 = f1.weighted;
  r.per_class = f1.per_class;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) correct += cm(c, c);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(cm.total());
  const PreferenceBias pb = preference_bias(cm);
  r.bias = pb.bias;
  r.preferences = pb.preferences;
  return r;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& cm, std::span<const std::string> labels, bool normalize) {
  if (labels.size() != cm.classes()) throw ShapeError("confusion_csv: label count does not match the matrix");
  std::ostringstream out;
  out.precision(17);
  out << "predicted\\truth";
  for (const auto& l : labels) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    out << csv_field(labels[i]);
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      out << ',';
      if (normalize) {
        const std::uint64_t col = cm.col_sum(j);
        out << (col ? static_cast<double>(cm(i, j)) / static_cast<double>(col) : 0.0);
      } else {
        out << cm(i, j);
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace emx
