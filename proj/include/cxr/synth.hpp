#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxr/io.hpp"
#include "cxr/label_extractor.hpp"
#include "cxr/linalg.hpp"

namespace cxr {

// Synthetic corpus with a planted signal: per study and disease a wording
// category is drawn (positive / uncertain rank 2-4 / negated / unmentioned);
// the latent finding is Bernoulli(category probability) for uncertain
// wordings (calibrated) and deterministic otherwise. Regions carry the
// latent findings in their features; report sentences are assembled from the
// rule-table phrases so the labeler recovers the planted probabilities.
struct SynthConfig {
  std::size_t n_studies = 2000;
  std::uint64_t seed = 1;
  std::size_t feature_dim = 16;
  double signal = 5.0;
  double noise = 0.25;
  double certain_fraction = 0.55;  // studies restricted to certain wording
  double box_jitter = 0.02;
};

struct SynthCorpus {
  std::vector<ReportRecord> reports;
  std::vector<RegionRecord> regions;
  Matrix feature_table;
  std::vector<SoftLabelVector> planted_labels;
};

SynthCorpus generate_synth_corpus(const SynthConfig& config);

// The region carrying each disease's feature signal.
Region signal_region(Disease d);

}  // namespace cxr
