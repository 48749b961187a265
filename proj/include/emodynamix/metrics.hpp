// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace emx {

// w(i, j) counts samples predicted as class i whose ground truth is class j.
class ConfusionMatrix {
 public:
  ConfusionMatrix() : ConfusionMatrix(0) {}
  explicit ConfusionMatrix(std::size_t n_classes);
  ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> row_major);
  static ConfusionMatrix from_predictions(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                          std::size_t n_classes);

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t operator()(std::size_t pred, std::size_t truth) const { return w_[pred * n_ + truth]; }
  void add(std::size_t pred, std::size_t truth, std::uint64_t count = 1);

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t pred) const;
  std::uint64_t col_sum(std::size_t truth) const;
  const std::vector<std::uint64_t>& data() const noexcept { return w_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> w_;
};

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // ground-truth count
};

struct F1Scores {
  double macro = 0.0;
  double weighted = 0.0;
  std::vector<ClassScore> per_class;
};

// Terms with an empty row or column count as 0. Throws ValidationError on an
// empty matrix.
F1Scores f1_scores(const ConfusionMatrix& cm);

struct PreferenceBias {
  double bias = 0.0;  // standard deviation of `preferences`
  std::vector<double> preferences;
};

// Synchronous iteration from p = 1:
//   p_i <- [sum_j w_ij p_j / (p_i + p_j)] / [sum_j w_ji / (p_i + p_j)]
// A denominator that is exactly zero (class never seen as ground truth) is
// replaced by 1e-12.
PreferenceBias preference_bias(const ConfusionMatrix& cm, std::size_t iterations = 20, bool sample_std = false);

struct EvalReport {
  std::vector<std::string> labels;
  ConfusionMatrix confusion;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  double bias = 0.0;
  std::vector<ClassScore> per_class;
  std::vector<double> preferences;
};

EvalReport make_report(const ConfusionMatrix& cm, std::vector<std::string> labels);

// Header row of ground-truth labels, one row per predicted label. With
// `normalize`, each column is divided by its ground-truth count.
std::string confusion_csv(const ConfusionMatrix& cm, std::span<const std::string> labels, bool normalize = false);

}  // namespace emx
