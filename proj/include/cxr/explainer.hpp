#pragma once

#include <array>
#include <string>
#include <vector>

#include "cxr/model.hpp"

namespace cxr {

struct EdgeContribution {
  int from = 0;  // node indexes within the explained graph
  int to = 0;
  double score = 0.0;
  double normalized = 0.0;
};

// Per-class gradient-times-feature attribution over the last-layer node and
// edge features of each relation.
struct Explanation {
  int class_id = 0;
  // Per relation: raw node scores (summed over the feature dimension) and
  // their normalized magnitudes in [0, 1].
  std::array<std::vector<double>, kNumRelations> node_scores;
  std::array<std::vector<double>, kNumRelations> node_normalized;
  std::array<std::vector<EdgeContribution>, kNumRelations> edge_scores;
  // Relation-summed node scores, used for ranking and rendering.
  std::vector<double> combined_node_scores;
  std::vector<double> combined_node_normalized;
  int top_node = 0;  // argmax of the combined normalized scores
};

// |v| / max|v|; all-zero input stays all-zero. Idempotent.
std::vector<double> normalize_scores(const std::vector<double>& scores);

// B^c = d(fused y_c)/d F^L per relation, S^c = B^c ⊙ F^L reduced over the
// feature dimension; edges analogously against the last consumed edge
// features. Throws std::out_of_range for an unknown class.
Explanation attribute(const Prediction& pred, const GraphView& graph,
                      const ModelParams& params, int class_id);

struct NodeTopDiseases {
  Disease top1 = Disease::Atelectasis;
  Disease top2 = Disease::Atelectasis;
  bool degenerate = false;  // all attributions were zero
};

// Ranks classes by each node's combined attribution score; ties and the
// degenerate all-zero case fall back to class order.
std::vector<NodeTopDiseases> top_diseases_per_node(const GraphView& graph,
                                                   const ModelParams& params);

struct OverlayOptions {
  double edge_threshold = 0.5;  // draw edges with normalized importance > this
  double node_threshold = 0.5;  // highlight nodes above this (besides the top)
  int canvas = 512;
};

// Standalone SVG: red box on the top node, yellow boxes on other nodes above
// the node threshold, green arrows for edges above the edge threshold.
// Element order is deterministic.
std::string render_overlay(const GraphView& graph, const Explanation& explanation,
                           const OverlayOptions& options = {});

}  // namespace cxr
