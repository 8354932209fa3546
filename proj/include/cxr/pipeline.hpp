#pragma once

#include <cstdint>
#include <vector>

#include "cxr/graph_builder.hpp"
#include "cxr/io.hpp"
#include "cxr/train.hpp"

namespace cxr {

// The 26-region graph on the default layout (placeholder features). Used to
// initialize the trainable dependency matrices.
AnatomyGraph canonical_graph(double tau, const KnowledgeGraphConfig& kg);

struct AssembledDataset {
  std::vector<TrainStudy> train;
  std::vector<TrainStudy> val;
  std::vector<TrainStudy> test;
  AnatomyGraph canonical;
};

// Join labels, region boxes, and the feature table into per-split model
// inputs, with phase-1 (knowledge graph) semantic edges.
AssembledDataset assemble_dataset(const std::vector<SoftLabelVector>& labels,
                                  const std::vector<RegionRecord>& regions,
                                  const Matrix& feature_table,
                                  const DatasetSplit& split, double tau,
                                  const KnowledgeGraphConfig& kg);

// Semantic bootstrap, stage two: a phase-1-trained model attributes top-1 and
// top-2 diseases to every canonical region (over mean training features), the
// training-split co-occurrence matrix relates them, and study graphs are
// rebuilt with the averaged phase-2 semantic adjacency.
AssembledDataset assemble_dataset_phase2(
    const std::vector<SoftLabelVector>& labels,
    const std::vector<RegionRecord>& regions, const Matrix& feature_table,
    const DatasetSplit& split, double tau, const KnowledgeGraphConfig& kg,
    const ModelParams& phase1_params, std::int64_t cooccur_min_count = 0);

}  // namespace cxr
