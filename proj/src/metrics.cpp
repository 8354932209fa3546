#include "cxr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cxr {

std::optional<double> binary_auc(std::span<const double> scores,
                                 std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores/labels length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (const int y : labels) n_pos += y != 0 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Rank sum of positives, averaging ranks within score ties.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }

  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

AucResult multilabel_auc(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<int>>& labels) {
  AucResult result;
  if (scores.empty()) {
    result.mean = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  const std::size_t n_classes = scores[0].size();
  double total = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<double> s(scores.size());
    std::vector<int> y(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      s[i] = scores[i][c];
      y[i] = labels[i][c];
    }
    const auto auc = binary_auc(s, y);
    result.per_class.push_back(auc);
    if (auc) {
      total += *auc;
      ++result.included_classes;
    }
  }
  result.mean = result.included_classes > 0
                    ? total / result.included_classes
                    : std::numeric_limits<double>::quiet_NaN();
  return result;
}

double topk_accuracy(const std::vector<std::vector<double>>& scores,
                     const std::vector<std::vector<int>>& labels, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::vector<double>& s = scores[i];
    const std::vector<int>& y = labels[i];
    const int n_pos = static_cast<int>(std::count_if(
        y.begin(), y.end(), [](int v) { return v != 0; }));
    if (n_pos == 0) continue;

    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (s[a] != s[b]) return s[a] > s[b];
      return a < b;  // tie: lower class index first
    });

    const int cut = std::min<int>(k, static_cast<int>(s.size()));
    int hits = 0;
    for (int t = 0; t < cut; ++t) hits += y[order[static_cast<std::size_t>(t)]];
    total += static_cast<double>(hits) / std::min(k, n_pos);
    ++counted;
  }
  return counted > 0 ? total / static_cast<double>(counted)
                     : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace cxr
