#pragma once

#include <optional>
#include <span>
#include <vector>

namespace cxr {

// Mann-Whitney ROC AUC with rank-average tie handling. nullopt when the
// class lacks a positive or a negative sample.
std::optional<double> binary_auc(std::span<const double> scores,
                                 std::span<const int> labels);

struct AucResult {
  std::vector<std::optional<double>> per_class;  // nullopt = excluded
  double mean = 0.0;        // over included classes; NaN when none qualify
  int included_classes = 0;
};

// scores[i][c], labels[i][c] in {0,1}; classes without both a positive and a
// negative are excluded from the mean.
AucResult multilabel_auc(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<int>>& labels);

// Mean over studies with at least one positive label of
// |top-k classes by score ∩ positive classes| / min(k, #positives).
// Ties at the cut are broken by the lower class index. NaN when no study
// has a positive label.
double topk_accuracy(const std::vector<std::vector<double>>& scores,
                     const std::vector<std::vector<int>>& labels, int k);

}  // namespace cxr
