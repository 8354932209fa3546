#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxr/corpus.hpp"
#include "cxr/diseases.hpp"
#include "cxr/regions.hpp"

namespace cxr {

inline constexpr std::size_t kNumRelations = 3;

enum class Relation : int { Spatial = 0, Semantic = 1, Implicit = 2 };

std::string_view relation_name(Relation r);

// A detected anatomical structure: canonical region id, box, and the
// precomputed ROI feature vector.
struct AnatomicalRegion {
  Region region = Region::RightLung;
  BBox bbox;
  std::vector<double> feature;
};

using AdjacencyMatrix = std::vector<std::vector<double>>;

// Edge feature per ordered node pair (i, j): both normalized centers.
struct EdgeFeature {
  std::array<double, 4> values{};  // [cx_i, cy_i, cx_j, cy_j]
};

// Multi-relationship graph over the study's detected regions. Adjacency,
// initial dependency, and edge features are indexed by node position; node
// positions map to canonical regions through nodes[k].region.
struct AnatomyGraph {
  std::vector<AnatomicalRegion> nodes;
  std::array<AdjacencyMatrix, kNumRelations> adjacency;
  std::vector<std::vector<EdgeFeature>> edge_features;  // K x K, ordered pairs

  std::size_t size() const { return nodes.size(); }
  const AdjacencyMatrix& adj(Relation r) const {
    return adjacency[static_cast<std::size_t>(r)];
  }
};

// Transcription of the anatomy/disease knowledge graph config: which regions
// a disease mainly occurs on, and which disease pairs co-occur.
struct KnowledgeGraphConfig {
  std::vector<std::pair<Region, Disease>> anatomy_disease_edges;
  std::vector<std::pair<Disease, Disease>> disease_cooccurrence_edges;

  std::string source_text;

  bool region_has_disease(Region r, Disease d) const;
  bool diseases_cooccur(Disease a, Disease b) const;
};

struct KnowledgeGraphError : std::runtime_error {
  explicit KnowledgeGraphError(const std::string& message, int line = 0);
  int line;
};

struct DegenerateBoxError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Intersection over union of two boxes; 0 for disjoint boxes. Throws
// DegenerateBoxError when a box has non-positive width or height.
double iou(const BBox& a, const BBox& b);

// E_ij = 1 iff iou >= tau for i != j. At tau = 0 this equals the implicit
// (fully connected) adjacency.
AdjacencyMatrix build_spatial(const std::vector<AnatomicalRegion>& nodes,
                              double tau);

// Phase-1 semantic adjacency from the knowledge graph alone: nodes connect
// when they share a disease or are mapped to co-occurring diseases.
AdjacencyMatrix build_semantic_phase1(const std::vector<AnatomicalRegion>& nodes,
                                      const KnowledgeGraphConfig& kg);

// Phase-2 semantic adjacency: A1 connects nodes whose top-1 diseases are
// equal or co-occur more than min_count times in the corpus matrix, A2
// likewise for top-2; the result is (A1 + A2) / 2.
AdjacencyMatrix build_semantic_phase2(const std::vector<Disease>& top1,
                                      const std::vector<Disease>& top2,
                                      const CooccurrenceMatrix& co,
                                      std::int64_t min_count = 0);

AdjacencyMatrix build_implicit(std::size_t n_nodes);

// Assemble the three adjacencies and initial edge features for one study.
AnatomyGraph build_graph(std::vector<AnatomicalRegion> nodes, double tau,
                         AdjacencyMatrix semantic);

// Same, building the phase-1 semantic relationship from the config.
AnatomyGraph build_graph(std::vector<AnatomicalRegion> nodes, double tau,
                         const KnowledgeGraphConfig& kg);

// Parses the knowledge graph config:
//   [anatomy_disease]        Region name: Disease, Disease, ...
//   [disease_cooccurrence]   Disease -- Disease
// Throws KnowledgeGraphError with a line number on unknown names.
KnowledgeGraphConfig parse_knowledge_graph(std::string_view text);
KnowledgeGraphConfig load_knowledge_graph_file(const std::string& path);

// Built-in default (identical to configs/knowledge_graph_default.txt).
const KnowledgeGraphConfig& builtin_knowledge_graph();
std::string_view builtin_knowledge_graph_text();

}  // namespace cxr
