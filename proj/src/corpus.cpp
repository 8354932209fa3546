#include "cxr/corpus.hpp"

#include <numeric>
#include <random>
#include <sstream>

namespace cxr {

std::int64_t UncertaintyDistribution::at(Disease d, double probability) const {
  for (std::size_t b = 0; b < kBuckets.size(); ++b) {
    if (kBuckets[b] == probability) {
      return counts[static_cast<std::size_t>(d)][b];
    }
  }
  return 0;
}

UncertaintyDistribution build_distribution(
    const std::vector<SoftLabelVector>& labels) {
  UncertaintyDistribution dist;
  for (const SoftLabelVector& study : labels) {
    for (std::size_t d = 0; d < kNumDiseases; ++d) {
      const double p = study.labels[d].probability;
      for (std::size_t b = 0; b < UncertaintyDistribution::kBuckets.size(); ++b) {
        if (p == UncertaintyDistribution::kBuckets[b]) {
          ++dist.counts[d][b];
          break;
        }
      }
    }
  }
  return dist;
}

CooccurrenceMatrix build_cooccurrence(const std::vector<SoftLabelVector>& labels,
                                      double t_pos) {
  if (!(t_pos > 0.0 && t_pos <= 1.0)) {
    throw std::invalid_argument("t_pos must be in (0, 1]");
  }
  CooccurrenceMatrix co;
  co.t_pos = t_pos;
  for (const SoftLabelVector& study : labels) {
    for (std::size_t i = 0; i < kNumDiseases; ++i) {
      if (study.labels[i].probability < t_pos) continue;
      for (std::size_t j = 0; j < kNumDiseases; ++j) {
        if (study.labels[j].probability < t_pos) continue;
        ++co.counts[i][j];
      }
    }
  }
  return co;
}

DatasetSplit split_dataset(const std::vector<SoftLabelVector>& labels,
                           std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 10) throw SplitError("corpus must have at least 10 studies");

  const auto tenth = static_cast<std::size_t>((n + 5) / 10);  // round(N/10)
  const std::size_t n_test = tenth;
  const std::size_t n_val = tenth;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(seed);
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<bool> in_test(n, false);
  DatasetSplit split;
  split.seed = seed;
  for (const std::size_t idx : order) {
    if (split.test.size() == n_test) break;
    if (is_certain_only(labels[idx])) {
      split.test.push_back(labels[idx].study_id);
      in_test[idx] = true;
    }
  }
  if (split.test.size() < n_test) {
    throw SplitError("only " + std::to_string(split.test.size()) +
                     " certain-only studies available; the test set needs " +
                     std::to_string(n_test));
  }
  for (const std::size_t idx : order) {
    if (in_test[idx]) continue;
    if (split.val.size() < n_val) {
      split.val.push_back(labels[idx].study_id);
    } else {
      split.train.push_back(labels[idx].study_id);
    }
  }
  return split;
}

std::string distribution_to_csv(const UncertaintyDistribution& dist) {
  std::ostringstream out;
  out << "disease,p1.0,p0.7,p0.5,p0.3\n";
  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    out << disease_name(static_cast<Disease>(d));
    for (std::size_t b = 0; b < UncertaintyDistribution::kBuckets.size(); ++b) {
      out << ',' << dist.counts[d][b];
    }
    out << '\n';
  }
  return out.str();
}

std::string cooccurrence_to_csv(const CooccurrenceMatrix& co) {
  std::ostringstream out;
  out << "disease";
  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    out << ',' << disease_name(static_cast<Disease>(d));
  }
  out << '\n';
  for (std::size_t i = 0; i < kNumDiseases; ++i) {
    out << disease_name(static_cast<Disease>(i));
    for (std::size_t j = 0; j < kNumDiseases; ++j) {
      out << ',' << co.counts[i][j];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cxr
