#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxr/label_extractor.hpp"

namespace cxr {

// Per-disease study counts at probabilities 1.0 / 0.7 / 0.5 / 0.3.
struct UncertaintyDistribution {
  static constexpr std::array<double, 4> kBuckets = {1.0, 0.7, 0.5, 0.3};
  std::array<std::array<std::int64_t, 4>, kNumDiseases> counts{};

  std::int64_t at(Disease d, double probability) const;
};

// Symmetric study counts; entry (i,j) = studies where both diseases have
// probability >= t_pos. The diagonal holds per-disease positive counts.
struct CooccurrenceMatrix {
  double t_pos = 1.0;
  std::array<std::array<std::int64_t, kNumDiseases>, kNumDiseases> counts{};
};

struct DatasetSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

UncertaintyDistribution build_distribution(
    const std::vector<SoftLabelVector>& labels);

CooccurrenceMatrix build_cooccurrence(const std::vector<SoftLabelVector>& labels,
                                      double t_pos);

// Deterministic 8:1:1 split. Study indices are shuffled by Fisher-Yates over
// mt19937_64(seed) with j = next() % (i + 1) for i = N-1 .. 1; the test set
// takes the first round(N/10) certain-only studies in shuffled order, the
// validation set the next round(N/10) of the remainder, the training set the
// rest. Throws SplitError when fewer certain-only studies exist than the
// test set needs.
DatasetSplit split_dataset(const std::vector<SoftLabelVector>& labels,
                           std::uint64_t seed);

std::string distribution_to_csv(const UncertaintyDistribution& dist);
std::string cooccurrence_to_csv(const CooccurrenceMatrix& co);

}  // namespace cxr
