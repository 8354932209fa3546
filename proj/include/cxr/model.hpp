#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxr/graph_builder.hpp"
#include "cxr/label_extractor.hpp"
#include "cxr/linalg.hpp"

namespace cxr {

struct ModelDims {
  std::size_t input_dim = 0;      // node feature width d_in
  std::size_t hidden_dim = 64;    // conv output width d
  std::size_t edge_dim = 8;       // edge feature width p for layers 1..L
  std::size_t edge_input_dim = 4; // initial edge features: two centers
  std::size_t layers = 3;         // conv layers L (0 = heads on raw features)
  std::size_t head_hidden = 32;   // 0 = linear head
  std::size_t classes = kNumDiseases;
  std::size_t n_regions = kNumRegions;

  std::size_t node_width(std::size_t level) const {
    return level == 0 ? input_dim : hidden_dim;
  }
  std::size_t edge_width(std::size_t level) const {
    return level == 0 ? edge_input_dim : edge_dim;
  }
};

// One graph convolution layer. Layer l maps level l-1 activations to level l:
//   edge_jk^l = w_edge * edge_jk^(l-1)
//   F_k^l     = relu(w_self*F_k + sum_{j in N(k)} w_msg*[e_jk*w_neigh*F_j ; edge_jk^l])
// w_msg spans the concatenation, so its column count is d_l + p_l.
struct ConvLayerParams {
  Matrix w_self;   // d_l x d_{l-1}
  Matrix w_neigh;  // d_l x d_{l-1}
  Matrix w_msg;    // d_l x (d_l + p_l)
  Matrix w_edge;   // p_l x p_{l-1}
};

struct HeadParams {
  std::vector<Matrix> weights;  // hidden (optional) then output layer
  std::vector<Matrix> biases;   // 1 x n each
};

struct RelationParams {
  std::vector<ConvLayerParams> conv;
  HeadParams head;
  Matrix dependency;  // n_regions x n_regions trainable e_jk
};

struct ModelParams {
  ModelDims dims;
  double alpha = 0.3;
  double beta = 0.4;
  std::array<RelationParams, kNumRelations> relations;
  std::uint64_t revision = 0;  // bumped on parameter updates

  // Seeded init: weights uniform(+-1/sqrt(fan_in)) drawn in declared order
  // (relation, layer, w_self/w_neigh/w_msg/w_edge, then head weights),
  // biases zero, dependency copied from the canonical graph adjacency.
  static ModelParams init(const ModelDims& dims, std::uint64_t seed,
                          const AnatomyGraph& canonical, double alpha = 0.3,
                          double beta = 0.4);

  // All-zero tensors of the right shapes (checkpoint loading).
  static ModelParams zeros(const ModelDims& dims, double alpha = 0.3,
                           double beta = 0.4);

  double& dependency_at(Relation r, int region_j, int region_k) {
    return relations[static_cast<std::size_t>(r)].dependency.at(
        static_cast<std::size_t>(region_j), static_cast<std::size_t>(region_k));
  }
};

// Every trainable tensor, in serialization/update order.
std::vector<Matrix*> param_tensors(ModelParams& params);
std::vector<const Matrix*> param_tensors(const ModelParams& params);

// Per-study graph data laid out for the forward pass.
struct RelationEdgeList {
  std::vector<std::pair<int, int>> pairs;  // ordered (j, k), adjacency > 0
  Matrix init_features;                    // E x edge_input_dim
};

struct GraphView {
  int n_nodes = 0;
  std::vector<int> region_ids;  // node -> canonical region index
  std::vector<BBox> boxes;
  Matrix features;              // K x d_in
  std::array<RelationEdgeList, kNumRelations> edges;
};

GraphView make_graph_view(const AnatomyGraph& graph);

// Cached activations of one forward pass, reused by backward and attribution.
struct RelationTrace {
  std::vector<Matrix> node_f;   // levels 0..L, K x d_level
  std::vector<Matrix> node_pre; // levels 1..L
  std::vector<Matrix> edge_f;   // levels 0..L, E x p_level
  std::vector<Matrix> neigh_h;  // levels 1..L: w_neigh * F^(l-1)
  std::vector<Matrix> agg;      // levels 1..L: sum_j e_jk * H_j
  std::vector<Matrix> edge_sum; // levels 1..L: sum_j edge_jk^l
  std::vector<double> pooled;   // d_L
  std::vector<std::vector<double>> head_pre;  // per head layer
  std::vector<std::vector<double>> head_act;  // post-activation
  std::vector<double> scores;   // sigmoid(z), length C
};

struct Prediction {
  std::array<RelationTrace, kNumRelations> traces;
  std::vector<double> fused;  // alpha*sp + beta*se + (1-alpha-beta)*im
  std::uint64_t params_revision = 0;
  const GraphView* graph = nullptr;
};

struct StaleCacheError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Single conv layer (level `layer` in 1..L) applied to explicit inputs.
// Returns (F^l, edge^l).
std::pair<Matrix, Matrix> conv_layer(const GraphView& graph, Relation relation,
                                     std::size_t layer, const Matrix& node_in,
                                     const Matrix& edge_in,
                                     const ModelParams& params);

Prediction forward(const GraphView& graph, const ModelParams& params);

enum class LossMode { Hard, ExpertSoft };

inline constexpr double kProbClamp = 1e-7;

std::vector<double> label_targets(const SoftLabelVector& labels);

// Mean over classes of binary cross entropy against 0/1 targets.
double loss_hard(std::span<const double> fused, std::span<const double> targets);

// Default: mean over classes of soft binary cross entropy against the expert
// probabilities. Literal form: -sum_c p_ex,c * log(fused_c).
double loss_expert(std::span<const double> fused, std::span<const double> targets,
                   bool literal = false);

struct ModelGrads {
  ModelParams tensors;  // same shapes; values hold gradients
  double grad_alpha = 0.0;
  double grad_beta = 0.0;

  static ModelGrads like(const ModelParams& params);
  void zero();
  void add(const ModelGrads& other);
};

// Analytic gradients of the loss for one study, accumulated into `grads`.
// Returns the loss. Throws StaleCacheError when the prediction was computed
// against a different parameter revision.
double backward(const Prediction& pred, const GraphView& graph,
                const ModelParams& params, std::span<const double> targets,
                LossMode mode, bool literal, ModelGrads& grads);

}  // namespace cxr
