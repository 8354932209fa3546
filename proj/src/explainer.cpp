#include "cxr/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cxr {

namespace {

// Head backward for one class: d(head output c)/d pooled. The attribution
// target is the fused class score before the probability squashing, which
// keeps the depth-0 linear decomposition exact.
std::vector<double> head_class_gradient(const HeadParams& head,
                                        const RelationTrace& trace,
                                        std::size_t class_id) {
  std::vector<double> current(head.weights.back().rows, 0.0);
  current[class_id] = 1.0;
  for (std::size_t i = head.weights.size(); i-- > 0;) {
    std::vector<double> below(head.weights[i].cols, 0.0);
    matvec_transpose_add(head.weights[i], current, below);
    if (i == 0) return below;
    for (std::size_t n = 0; n < below.size(); ++n) {
      if (trace.head_pre[i - 1][n] <= 0.0) below[n] = 0.0;
    }
    current = std::move(below);
  }
  return current;  // unreachable for a non-empty head
}

}  // namespace

std::vector<double> normalize_scores(const std::vector<double>& scores) {
  double max_abs = 0.0;
  for (const double s : scores) max_abs = std::max(max_abs, std::fabs(s));
  std::vector<double> out(scores.size(), 0.0);
  if (max_abs == 0.0) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::fabs(scores[i]) / max_abs;
  }
  return out;
}

Explanation attribute(const Prediction& pred, const GraphView& graph,
                      const ModelParams& params, int class_id) {
  if (pred.params_revision != params.revision || pred.graph != &graph) {
    throw StaleCacheError("cached forward pass does not match the parameters");
  }
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= params.dims.classes) {
    throw std::out_of_range("unknown class id " + std::to_string(class_id));
  }

  const ModelDims& dims = params.dims;
  const auto K = static_cast<std::size_t>(graph.n_nodes);
  const std::size_t L = dims.layers;
  const std::size_t d_last = dims.node_width(L);
  const double weights[kNumRelations] = {params.alpha, params.beta,
                                         1.0 - params.alpha - params.beta};

  Explanation explanation;
  explanation.class_id = class_id;
  explanation.combined_node_scores.assign(K, 0.0);

  for (std::size_t r = 0; r < kNumRelations; ++r) {
    const RelationTrace& trace = pred.traces[r];
    const RelationParams& rp = params.relations[r];

    // d(fused score for class) / d pooled = w_r * head gradient.
    std::vector<double> d_pooled = head_class_gradient(
        rp.head, trace, static_cast<std::size_t>(class_id));
    for (double& v : d_pooled) v *= weights[r];

    // B = d(score)/d F^L: every node row is d_pooled / K via mean pooling.
    // S = B ⊙ F^L, reduced over the feature dimension.
    const Matrix& last = trace.node_f[L];
    std::vector<double>& node_scores = explanation.node_scores[r];
    node_scores.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::size_t d = 0; d < d_last; ++d) {
        acc += d_pooled[d] / static_cast<double>(K) * last.at(k, d);
      }
      node_scores[k] = acc;
    }
    explanation.node_normalized[r] = normalize_scores(node_scores);
    for (std::size_t k = 0; k < K; ++k) {
      explanation.combined_node_scores[k] += node_scores[k];
    }

    // Edge scores: d(score)/d edge^L ⊙ edge^L. Edge features reach the
    // output through the last conv layer's node update, so the gradient is
    // (w_msg right)^T (B_k ⊙ relu'(pre^L_k)) for each edge (j, k).
    std::vector<EdgeContribution>& edge_scores = explanation.edge_scores[r];
    if (L >= 1) {
      const ConvLayerParams& layer = rp.conv[L - 1];
      const Matrix& pre = trace.node_pre[L - 1];
      const Matrix& edge_last = trace.edge_f[L];
      const RelationEdgeList& edges = graph.edges[r];
      const std::size_t p_last = dims.edge_width(L);

      Matrix per_node_edge_grad(K, p_last);
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> p_k(d_last, 0.0);
        for (std::size_t d = 0; d < d_last; ++d) {
          p_k[d] = pre.at(k, d) > 0.0
                       ? d_pooled[d] / static_cast<double>(K)
                       : 0.0;
        }
        for (std::size_t row = 0; row < layer.w_msg.rows; ++row) {
          const double* w = layer.w_msg.row(row) + d_last;
          for (std::size_t p = 0; p < p_last; ++p) {
            per_node_edge_grad.at(k, p) += w[p] * p_k[row];
          }
        }
      }
      for (std::size_t e = 0; e < edges.pairs.size(); ++e) {
        const auto [j, k] = edges.pairs[e];
        double acc = 0.0;
        for (std::size_t p = 0; p < p_last; ++p) {
          acc += per_node_edge_grad.at(static_cast<std::size_t>(k), p) *
                 edge_last.at(e, p);
        }
        edge_scores.push_back(EdgeContribution{j, k, acc, 0.0});
      }
      std::vector<double> raw(edge_scores.size());
      for (std::size_t e = 0; e < edge_scores.size(); ++e) raw[e] = edge_scores[e].score;
      const std::vector<double> normalized = normalize_scores(raw);
      for (std::size_t e = 0; e < edge_scores.size(); ++e) {
        edge_scores[e].normalized = normalized[e];
      }
    }
  }

  explanation.combined_node_normalized =
      normalize_scores(explanation.combined_node_scores);
  explanation.top_node = static_cast<int>(std::distance(
      explanation.combined_node_normalized.begin(),
      std::max_element(explanation.combined_node_normalized.begin(),
                       explanation.combined_node_normalized.end())));
  return explanation;
}

std::vector<NodeTopDiseases> top_diseases_per_node(const GraphView& graph,
                                                   const ModelParams& params) {
  const std::size_t n_classes = params.dims.classes;
  if (n_classes < 2) {
    throw std::invalid_argument("need at least two classes to rank");
  }
  const Prediction pred = forward(graph, params);

  const auto K = static_cast<std::size_t>(graph.n_nodes);
  std::vector<std::vector<double>> score_per_class(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    score_per_class[c] =
        attribute(pred, graph, params, static_cast<int>(c)).combined_node_scores;
  }

  std::vector<NodeTopDiseases> result(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> order(n_classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return score_per_class[a][k] > score_per_class[b][k];
    });
    bool all_zero = true;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (score_per_class[c][k] != 0.0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) {
      result[k] = NodeTopDiseases{static_cast<Disease>(0), static_cast<Disease>(1), true};
    } else {
      result[k] = NodeTopDiseases{static_cast<Disease>(order[0]),
                                  static_cast<Disease>(order[1]), false};
    }
  }
  return result;
}

std::string render_overlay(const GraphView& graph, const Explanation& explanation,
                           const OverlayOptions& options) {
  const double size = options.canvas;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.canvas
      << "\" height=\"" << options.canvas << "\" viewBox=\"0 0 "
      << options.canvas << ' ' << options.canvas << "\">\n";
  svg << "  <defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" "
         "refX=\"6\" refY=\"3\" orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" "
         "fill=\"green\"/></marker></defs>\n";

  // Edges first so boxes draw on top. One green arrow per selected directed
  // edge, relations in order.
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    for (const EdgeContribution& edge : explanation.edge_scores[r]) {
      if (!(edge.normalized > options.edge_threshold)) continue;
      const BBox& a = graph.boxes[static_cast<std::size_t>(edge.from)];
      const BBox& b = graph.boxes[static_cast<std::size_t>(edge.to)];
      svg << "  <line x1=\"" << a.cx() * size << "\" y1=\"" << a.cy() * size
          << "\" x2=\"" << b.cx() * size << "\" y2=\"" << b.cy() * size
          << "\" stroke=\"green\" stroke-width=\"2\" "
             "marker-end=\"url(#arrow)\"/>\n";
    }
  }

  for (std::size_t k = 0; k < graph.boxes.size(); ++k) {
    const bool is_top = static_cast<int>(k) == explanation.top_node;
    const bool highlighted =
        explanation.combined_node_normalized[k] > options.node_threshold;
    if (!is_top && !highlighted) continue;
    const BBox& box = graph.boxes[k];
    svg << "  <rect x=\"" << box.x * size << "\" y=\"" << box.y * size
        << "\" width=\"" << box.w * size << "\" height=\"" << box.h * size
        << "\" fill=\"none\" stroke=\"" << (is_top ? "red" : "yellow")
        << "\" stroke-width=\"" << (is_top ? 3 : 2) << "\"><title>"
        << region_name(static_cast<Region>(graph.region_ids[k])) << "</title></rect>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cxr
