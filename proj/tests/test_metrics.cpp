#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cxr/linalg.hpp"
#include "cxr/metrics.hpp"

using namespace cxr;

TEST_CASE("binary AUC") {
  SUBCASE("perfectly ordered scores") {
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1};
    const std::vector<int> labels = {1, 1, 1, 0, 0};
    CHECK(*binary_auc(scores, labels) == 1.0);
  }
  SUBCASE("4-sample hand case: 3 of 4 pairs ordered correctly") {
    const std::vector<double> scores = {0.9, 0.8, 0.3, 0.2};
    const std::vector<int> labels = {1, 0, 1, 0};
    CHECK(*binary_auc(scores, labels) == 0.75);
  }
  SUBCASE("ties use the rank-average convention") {
    const std::vector<double> scores = {0.5, 0.5};
    const std::vector<int> labels = {1, 0};
    CHECK(*binary_auc(scores, labels) == 0.5);

    const std::vector<double> s2 = {0.9, 0.5, 0.5, 0.1};
    const std::vector<int> l2 = {1, 1, 0, 0};
    // pairs: (0.9 vs 0.5)=1, (0.9 vs 0.1)=1, (0.5 vs 0.5)=0.5, (0.5 vs 0.1)=1
    CHECK(*binary_auc(s2, l2) == 0.875);
  }
  SUBCASE("single-class data is excluded") {
    const std::vector<double> scores = {0.9, 0.8};
    CHECK_FALSE(binary_auc(scores, std::vector<int>{1, 1}).has_value());
    CHECK_FALSE(binary_auc(scores, std::vector<int>{0, 0}).has_value());
  }
  SUBCASE("random scores on balanced labels stay within 3 sigma of 0.5") {
    std::mt19937_64 gen(31);
    const std::size_t n = 1000;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = uniform01(gen);
      labels[i] = i < n / 2 ? 1 : 0;
    }
    // Mann-Whitney: sigma = sqrt(np*nn*(n+1)/12) / (np*nn)
    const double np = 500.0;
    const double nn = 500.0;
    const double sigma = std::sqrt(np * nn * (n + 1) / 12.0) / (np * nn);
    CHECK(std::fabs(*binary_auc(scores, labels) - 0.5) < 3.0 * sigma);
  }
}

TEST_CASE("multilabel AUC excludes degenerate classes from the mean") {
  const std::vector<std::vector<double>> scores = {
      {0.9, 0.4}, {0.8, 0.6}, {0.3, 0.5}, {0.2, 0.9}};
  const std::vector<std::vector<int>> labels = {
      {1, 1}, {0, 1}, {1, 1}, {0, 1}};  // class 1 has no negatives
  const AucResult result = multilabel_auc(scores, labels);
  CHECK(result.included_classes == 1);
  CHECK(result.per_class[0].has_value());
  CHECK_FALSE(result.per_class[1].has_value());
  CHECK(result.mean == 0.75);
}

TEST_CASE("top-k accuracy") {
  SUBCASE("k >= C is always 1") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::vector<double>> scores(5, std::vector<double>(6));
      std::vector<std::vector<int>> labels(5, std::vector<int>(6));
      bool any_positive = false;
      for (auto& row : scores) {
        for (auto& v : row) v = uniform01(gen);
      }
      for (auto& row : labels) {
        for (auto& v : row) v = gen() % 2;
      }
      for (const auto& row : labels) {
        for (const int v : row) any_positive |= v != 0;
      }
      if (!any_positive) labels[0][0] = 1;
      CHECK(topk_accuracy(scores, labels, 6) == 1.0);
      CHECK(topk_accuracy(scores, labels, 10) == 1.0);
    }
  }
  SUBCASE("single positive ranked first") {
    const std::vector<std::vector<double>> scores = {{0.9, 0.1, 0.2, 0.15, 0.05, 0.3}};
    const std::vector<std::vector<int>> labels = {{1, 0, 0, 0, 0, 0}};
    CHECK(topk_accuracy(scores, labels, 5) == 1.0);
  }
  SUBCASE("two positives with one inside the top 5") {
    const std::vector<std::vector<double>> scores = {
        {0.9, 0.8, 0.7, 0.6, 0.5, 0.1, 0.05}};
    const std::vector<std::vector<int>> labels = {{1, 0, 0, 0, 0, 1, 0}};
    CHECK(topk_accuracy(scores, labels, 5) == 0.5);
  }
  SUBCASE("studies without positives are skipped") {
    const std::vector<std::vector<double>> scores = {{0.9, 0.1}, {0.2, 0.8}};
    const std::vector<std::vector<int>> labels = {{0, 0}, {0, 1}};
    CHECK(topk_accuracy(scores, labels, 1) == 1.0);
  }
  SUBCASE("denominator is min(k, positives)") {
    const std::vector<std::vector<double>> scores = {{0.9, 0.8, 0.7}};
    const std::vector<std::vector<int>> labels = {{1, 1, 1}};
    CHECK(topk_accuracy(scores, labels, 2) == 1.0);  // 2 hits / min(2, 3)
  }
  SUBCASE("k must be positive") {
    CHECK_THROWS_AS(topk_accuracy({}, {}, 0), std::invalid_argument);
  }
}
