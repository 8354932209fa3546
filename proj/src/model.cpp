#include "cxr/model.hpp"

#include <algorithm>
#include <cmath>

namespace cxr {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

std::span<double> row_span(Matrix& m, std::size_t r) {
  return {m.row(r), m.cols};
}
std::span<const double> row_span(const Matrix& m, std::size_t r) {
  return {m.row(r), m.cols};
}

// y += M[:, col0:col0+n] x
void matvec_cols_add(const Matrix& m, std::size_t col0, std::span<const double> x,
                     std::span<double> y) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.row(r) + col0;
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
}

// y += (M[:, col0:col0+n])^T x
void matvec_cols_transpose_add(const Matrix& m, std::size_t col0,
                               std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.row(r) + col0;
    const double xr = x[r];
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += w[c] * xr;
  }
}

// M[:, col0:...] += a b^T
void outer_cols_add(Matrix& m, std::size_t col0, std::span<const double> a,
                    std::span<const double> b) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* w = m.row(r) + col0;
    const double ar = a[r];
    for (std::size_t c = 0; c < b.size(); ++c) w[c] += ar * b[c];
  }
}

void axpy(std::span<double> y, double a, std::span<const double> x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

HeadParams make_head(const ModelDims& dims, std::mt19937_64& gen) {
  HeadParams head;
  const std::size_t d_last = dims.node_width(dims.layers);
  if (dims.head_hidden > 0) {
    head.weights.emplace_back(dims.head_hidden, d_last);
    head.weights.emplace_back(dims.classes, dims.head_hidden);
    head.biases.emplace_back(1, dims.head_hidden);
    head.biases.emplace_back(1, dims.classes);
  } else {
    head.weights.emplace_back(dims.classes, d_last);
    head.biases.emplace_back(1, dims.classes);
  }
  for (Matrix& w : head.weights) init_uniform_fanin(w, gen);
  return head;
}

// One conv step: consumes level l-1 node/edge features, fills the level-l
// slots of the caches. Updated edge features feed the node update.
void conv_step(const GraphView& graph, Relation relation, std::size_t level,
               const ModelParams& params, const Matrix& node_in,
               const Matrix& edge_in, Matrix& edge_out, Matrix& neigh_h,
               Matrix& agg, Matrix& edge_sum, Matrix& node_pre,
               Matrix& node_out) {
  const auto r = static_cast<std::size_t>(relation);
  const RelationParams& rp = params.relations[r];
  const ConvLayerParams& layer = rp.conv[level - 1];
  const ModelDims& dims = params.dims;
  const RelationEdgeList& edges = graph.edges[r];

  const auto K = static_cast<std::size_t>(graph.n_nodes);
  const std::size_t n_edges = edges.pairs.size();
  const std::size_t d_in = dims.node_width(level - 1);
  const std::size_t d_out = dims.node_width(level);
  const std::size_t p_in = dims.edge_width(level - 1);
  const std::size_t p_out = dims.edge_width(level);

  if (node_in.rows != K || node_in.cols != d_in || edge_in.cols != p_in) {
    throw DimensionError("conv layer input dimensions do not match params");
  }

  edge_out = Matrix(n_edges, p_out);
  for (std::size_t e = 0; e < n_edges; ++e) {
    matvec_add(layer.w_edge, row_span(edge_in, e), row_span(edge_out, e));
  }

  neigh_h = Matrix(K, d_out);
  for (std::size_t k = 0; k < K; ++k) {
    matvec_add(layer.w_neigh, row_span(node_in, k), row_span(neigh_h, k));
  }

  agg = Matrix(K, d_out);
  edge_sum = Matrix(K, p_out);
  for (std::size_t e = 0; e < n_edges; ++e) {
    const auto [j, k] = edges.pairs[e];
    const double dep = rp.dependency.at(
        static_cast<std::size_t>(graph.region_ids[static_cast<std::size_t>(j)]),
        static_cast<std::size_t>(graph.region_ids[static_cast<std::size_t>(k)]));
    axpy(row_span(agg, static_cast<std::size_t>(k)), dep,
         row_span(neigh_h, static_cast<std::size_t>(j)));
    axpy(row_span(edge_sum, static_cast<std::size_t>(k)), 1.0,
         row_span(edge_out, e));
  }

  node_pre = Matrix(K, d_out);
  for (std::size_t k = 0; k < K; ++k) {
    auto pre = row_span(node_pre, k);
    matvec_add(layer.w_self, row_span(node_in, k), pre);
    matvec_cols_add(layer.w_msg, 0, row_span(agg, k), pre);
    matvec_cols_add(layer.w_msg, d_out, row_span(edge_sum, k), pre);
  }

  node_out = Matrix(K, d_out);
  for (std::size_t i = 0; i < node_out.data.size(); ++i) {
    node_out.data[i] = std::max(0.0, node_pre.data[i]);
  }
}

void head_forward(const HeadParams& head, std::span<const double> input,
                  RelationTrace& trace) {
  trace.head_pre.clear();
  trace.head_act.clear();
  std::vector<double> current(input.begin(), input.end());
  for (std::size_t i = 0; i < head.weights.size(); ++i) {
    const Matrix& w = head.weights[i];
    std::vector<double> pre(w.rows, 0.0);
    matvec_add(w, current, pre);
    for (std::size_t n = 0; n < pre.size(); ++n) pre[n] += head.biases[i].at(0, n);
    trace.head_pre.push_back(pre);
    const bool last = i + 1 == head.weights.size();
    if (!last) {
      for (double& v : pre) v = std::max(0.0, v);
    }
    trace.head_act.push_back(pre);
    current = std::move(pre);
  }
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> d_fused;  // dL/d p_c
};

LossGrad fused_loss_grad(std::span<const double> fused,
                         std::span<const double> targets, LossMode mode,
                         bool literal) {
  (void)mode;  // Hard and ExpertSoft share the formula; targets differ
  LossGrad out;
  const std::size_t n = fused.size();
  out.d_fused.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const double y = targets[c];
    const double q = clamp_prob(fused[c]);
    const bool clamped = fused[c] <= kProbClamp || fused[c] >= 1.0 - kProbClamp;
    if (literal) {
      out.loss += -y * std::log(q);
      if (!clamped) out.d_fused[c] = -y / q;
    } else {
      out.loss += -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
      if (!clamped) out.d_fused[c] = (q - y) / (q * (1.0 - q));
    }
  }
  if (!literal) {
    out.loss /= static_cast<double>(n);
    for (double& g : out.d_fused) g /= static_cast<double>(n);
  }
  return out;
}

}  // namespace

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed,
                              const AnatomyGraph& canonical, double alpha,
                              double beta) {
  if (alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0) {
    throw std::invalid_argument("fusion weights need alpha, beta >= 0 and alpha + beta <= 1");
  }
  ModelParams params;
  params.dims = dims;
  params.alpha = alpha;
  params.beta = beta;

  std::mt19937_64 gen(seed);
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    RelationParams& rp = params.relations[r];
    for (std::size_t l = 1; l <= dims.layers; ++l) {
      ConvLayerParams layer;
      layer.w_self = Matrix(dims.node_width(l), dims.node_width(l - 1));
      layer.w_neigh = Matrix(dims.node_width(l), dims.node_width(l - 1));
      layer.w_msg = Matrix(dims.node_width(l), dims.node_width(l) + dims.edge_width(l));
      layer.w_edge = Matrix(dims.edge_width(l), dims.edge_width(l - 1));
      init_uniform_fanin(layer.w_self, gen);
      init_uniform_fanin(layer.w_neigh, gen);
      init_uniform_fanin(layer.w_msg, gen);
      init_uniform_fanin(layer.w_edge, gen);
      rp.conv.push_back(std::move(layer));
    }
    rp.head = make_head(dims, gen);

    rp.dependency = Matrix(dims.n_regions, dims.n_regions);
    const AdjacencyMatrix& adj = canonical.adj(static_cast<Relation>(r));
    for (std::size_t i = 0; i < canonical.size(); ++i) {
      for (std::size_t j = 0; j < canonical.size(); ++j) {
        const auto ri = static_cast<std::size_t>(canonical.nodes[i].region);
        const auto rj = static_cast<std::size_t>(canonical.nodes[j].region);
        rp.dependency.at(ri, rj) = adj[i][j];
      }
    }
  }
  return params;
}

ModelParams ModelParams::zeros(const ModelDims& dims, double alpha, double beta) {
  AnatomyGraph empty;
  for (auto& adj : empty.adjacency) adj.clear();
  ModelParams params = init(dims, 0, empty, alpha, beta);
  for (Matrix* tensor : param_tensors(params)) tensor->zero();
  return params;
}

std::vector<Matrix*> param_tensors(ModelParams& params) {
  std::vector<Matrix*> tensors;
  for (RelationParams& rp : params.relations) {
    for (ConvLayerParams& layer : rp.conv) {
      tensors.push_back(&layer.w_self);
      tensors.push_back(&layer.w_neigh);
      tensors.push_back(&layer.w_msg);
      tensors.push_back(&layer.w_edge);
    }
    for (std::size_t i = 0; i < rp.head.weights.size(); ++i) {
      tensors.push_back(&rp.head.weights[i]);
      tensors.push_back(&rp.head.biases[i]);
    }
    tensors.push_back(&rp.dependency);
  }
  return tensors;
}

std::vector<const Matrix*> param_tensors(const ModelParams& params) {
  std::vector<Matrix*> mutable_tensors =
      param_tensors(const_cast<ModelParams&>(params));
  return {mutable_tensors.begin(), mutable_tensors.end()};
}

GraphView make_graph_view(const AnatomyGraph& graph) {
  GraphView view;
  view.n_nodes = static_cast<int>(graph.size());
  if (view.n_nodes == 0) throw std::invalid_argument("graph has no nodes");

  const std::size_t d_in = graph.nodes[0].feature.size();
  view.features = Matrix(graph.size(), d_in);
  for (std::size_t k = 0; k < graph.size(); ++k) {
    if (graph.nodes[k].feature.size() != d_in) {
      throw DimensionError("node features must share one dimension");
    }
    std::copy(graph.nodes[k].feature.begin(), graph.nodes[k].feature.end(),
              view.features.row(k));
    view.region_ids.push_back(static_cast<int>(graph.nodes[k].region));
    view.boxes.push_back(graph.nodes[k].bbox);
  }

  for (std::size_t r = 0; r < kNumRelations; ++r) {
    RelationEdgeList& list = view.edges[r];
    const AdjacencyMatrix& adj = graph.adjacency[r];
    for (std::size_t j = 0; j < graph.size(); ++j) {
      for (std::size_t k = 0; k < graph.size(); ++k) {
        if (j != k && adj[j][k] > 0.0) {
          list.pairs.emplace_back(static_cast<int>(j), static_cast<int>(k));
        }
      }
    }
    list.init_features = Matrix(list.pairs.size(), 4);
    for (std::size_t e = 0; e < list.pairs.size(); ++e) {
      const auto [j, k] = list.pairs[e];
      const EdgeFeature& feat =
          graph.edge_features[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      std::copy(feat.values.begin(), feat.values.end(), list.init_features.row(e));
    }
  }
  return view;
}

std::pair<Matrix, Matrix> conv_layer(const GraphView& graph, Relation relation,
                                     std::size_t layer, const Matrix& node_in,
                                     const Matrix& edge_in,
                                     const ModelParams& params) {
  if (layer < 1 || layer > params.dims.layers) {
    throw std::invalid_argument("conv layer index out of range");
  }
  Matrix edge_out, neigh_h, agg, edge_sum, node_pre, node_out;
  conv_step(graph, relation, layer, params, node_in, edge_in, edge_out, neigh_h,
            agg, edge_sum, node_pre, node_out);
  return {std::move(node_out), std::move(edge_out)};
}

Prediction forward(const GraphView& graph, const ModelParams& params) {
  Prediction pred;
  pred.params_revision = params.revision;
  pred.graph = &graph;

  const ModelDims& dims = params.dims;
  const auto K = static_cast<std::size_t>(graph.n_nodes);
  const std::size_t L = dims.layers;

  for (std::size_t r = 0; r < kNumRelations; ++r) {
    RelationTrace& trace = pred.traces[r];
    trace.node_f.assign(L + 1, Matrix());
    trace.node_pre.assign(L, Matrix());
    trace.edge_f.assign(L + 1, Matrix());
    trace.neigh_h.assign(L, Matrix());
    trace.agg.assign(L, Matrix());
    trace.edge_sum.assign(L, Matrix());

    trace.node_f[0] = graph.features;
    trace.edge_f[0] = graph.edges[r].init_features;

    for (std::size_t l = 1; l <= L; ++l) {
      conv_step(graph, static_cast<Relation>(r), l, params, trace.node_f[l - 1],
                trace.edge_f[l - 1], trace.edge_f[l], trace.neigh_h[l - 1],
                trace.agg[l - 1], trace.edge_sum[l - 1], trace.node_pre[l - 1],
                trace.node_f[l]);
    }

    const Matrix& last = trace.node_f[L];
    const std::size_t d_last = dims.node_width(L);
    trace.pooled.assign(d_last, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t d = 0; d < d_last; ++d) trace.pooled[d] += last.at(k, d);
    }
    for (double& v : trace.pooled) v /= static_cast<double>(K);

    head_forward(params.relations[r].head, trace.pooled, trace);
    trace.scores = trace.head_act.back();
    for (double& s : trace.scores) s = sigmoid(s);
  }

  const double gamma = 1.0 - params.alpha - params.beta;
  pred.fused.assign(dims.classes, 0.0);
  for (std::size_t c = 0; c < dims.classes; ++c) {
    pred.fused[c] = params.alpha * pred.traces[0].scores[c] +
                    params.beta * pred.traces[1].scores[c] +
                    gamma * pred.traces[2].scores[c];
  }
  return pred;
}

std::vector<double> label_targets(const SoftLabelVector& labels) {
  std::vector<double> targets(kNumDiseases, 0.0);
  for (std::size_t d = 0; d < kNumDiseases; ++d) {
    targets[d] = labels.labels[d].probability;
  }
  return targets;
}

double loss_hard(std::span<const double> fused, std::span<const double> targets) {
  return fused_loss_grad(fused, targets, LossMode::Hard, false).loss;
}

double loss_expert(std::span<const double> fused, std::span<const double> targets,
                   bool literal) {
  return fused_loss_grad(fused, targets, LossMode::ExpertSoft, literal).loss;
}

ModelGrads ModelGrads::like(const ModelParams& params) {
  ModelGrads grads;
  grads.tensors = params;
  grads.zero();
  return grads;
}

void ModelGrads::zero() {
  for (Matrix* m : param_tensors(tensors)) m->zero();
  grad_alpha = 0.0;
  grad_beta = 0.0;
}

void ModelGrads::add(const ModelGrads& other) {
  const auto mine = param_tensors(tensors);
  const auto theirs = param_tensors(other.tensors);
  for (std::size_t i = 0; i < mine.size(); ++i) {
    for (std::size_t n = 0; n < mine[i]->data.size(); ++n) {
      mine[i]->data[n] += theirs[i]->data[n];
    }
  }
  grad_alpha += other.grad_alpha;
  grad_beta += other.grad_beta;
}

double backward(const Prediction& pred, const GraphView& graph,
                const ModelParams& params, std::span<const double> targets,
                LossMode mode, bool literal, ModelGrads& grads) {
  if (pred.params_revision != params.revision || pred.graph != &graph) {
    throw StaleCacheError(
        "cached forward pass does not match the current parameters/graph");
  }

  const ModelDims& dims = params.dims;
  const auto K = static_cast<std::size_t>(graph.n_nodes);
  const std::size_t L = dims.layers;
  const std::size_t C = dims.classes;

  const LossGrad lg = fused_loss_grad(pred.fused, targets, mode, literal);

  const double weights[kNumRelations] = {params.alpha, params.beta,
                                         1.0 - params.alpha - params.beta};
  for (std::size_t c = 0; c < C; ++c) {
    grads.grad_alpha +=
        lg.d_fused[c] * (pred.traces[0].scores[c] - pred.traces[2].scores[c]);
    grads.grad_beta +=
        lg.d_fused[c] * (pred.traces[1].scores[c] - pred.traces[2].scores[c]);
  }

  for (std::size_t r = 0; r < kNumRelations; ++r) {
    const RelationTrace& trace = pred.traces[r];
    const RelationParams& rp = params.relations[r];
    RelationParams& grp = grads.tensors.relations[r];
    const RelationEdgeList& edges = graph.edges[r];

    // d loss / d head output pre-activation
    std::vector<double> d_pre(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const double s = trace.scores[c];
      d_pre[c] = lg.d_fused[c] * weights[r] * s * (1.0 - s);
    }

    // Head backward.
    std::vector<double> d_pooled(trace.pooled.size(), 0.0);
    const std::size_t n_head = rp.head.weights.size();
    std::vector<double> current = std::move(d_pre);
    for (std::size_t i = n_head; i-- > 0;) {
      const std::span<const double> input =
          i == 0 ? std::span<const double>(trace.pooled)
                 : std::span<const double>(trace.head_act[i - 1]);
      outer_add(grp.head.weights[i], current, input);
      for (std::size_t n = 0; n < current.size(); ++n) {
        grp.head.biases[i].at(0, n) += current[n];
      }
      if (i == 0) {
        matvec_transpose_add(rp.head.weights[i], current, d_pooled);
      } else {
        std::vector<double> d_act(rp.head.weights[i].cols, 0.0);
        matvec_transpose_add(rp.head.weights[i], current, d_act);
        for (std::size_t n = 0; n < d_act.size(); ++n) {
          if (trace.head_pre[i - 1][n] <= 0.0) d_act[n] = 0.0;
        }
        current = std::move(d_act);
      }
    }

    // Pooling: dF^L = d_pooled / K, broadcast to all nodes.
    const std::size_t d_last = dims.node_width(L);
    Matrix d_node(K, d_last);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t d = 0; d < d_last; ++d) {
        d_node.at(k, d) = d_pooled[d] / static_cast<double>(K);
      }
    }

    // Conv backward, top layer down.
    Matrix d_edge;  // dL/d edge^l for the current level
    for (std::size_t l = L; l >= 1; --l) {
      const ConvLayerParams& layer = rp.conv[l - 1];
      ConvLayerParams& glayer = grp.conv[l - 1];
      const std::size_t d_out = dims.node_width(l);
      const std::size_t d_in = dims.node_width(l - 1);
      const std::size_t p_out = dims.edge_width(l);
      const std::size_t n_edges = edges.pairs.size();

      if (l == L) d_edge = Matrix(n_edges, p_out);  // starts empty at the top

      // P = dL/d pre, through the rectifier.
      Matrix p_mat(K, d_out);
      const Matrix& pre = trace.node_pre[l - 1];
      for (std::size_t i = 0; i < p_mat.data.size(); ++i) {
        p_mat.data[i] = pre.data[i] > 0.0 ? d_node.data[i] : 0.0;
      }

      Matrix d_node_prev(K, d_in);
      Matrix u_mat(K, d_out);  // (w_msg left)^T P_k
      Matrix w_mat(K, p_out);  // (w_msg right)^T P_k
      const Matrix& node_in = trace.node_f[l - 1];
      for (std::size_t k = 0; k < K; ++k) {
        const auto pk = row_span(p_mat, k);
        outer_add(glayer.w_self, pk, row_span(node_in, k));
        matvec_transpose_add(layer.w_self, pk, row_span(d_node_prev, k));
        outer_cols_add(glayer.w_msg, 0, pk, row_span(trace.agg[l - 1], k));
        outer_cols_add(glayer.w_msg, d_out, pk, row_span(trace.edge_sum[l - 1], k));
        matvec_cols_transpose_add(layer.w_msg, 0, pk, row_span(u_mat, k));
        matvec_cols_transpose_add(layer.w_msg, d_out, pk, row_span(w_mat, k));
      }

      // Edge-path gradients: dependency, neighbor messages, edge features.
      Matrix v_mat(K, d_out);  // sum_k e_jk * u_k, grouped by source j
      const Matrix& neigh_h = trace.neigh_h[l - 1];
      for (std::size_t e = 0; e < n_edges; ++e) {
        const auto [j, k] = edges.pairs[e];
        const auto js = static_cast<std::size_t>(j);
        const auto ks = static_cast<std::size_t>(k);
        const auto rj = static_cast<std::size_t>(graph.region_ids[js]);
        const auto rk = static_cast<std::size_t>(graph.region_ids[ks]);
        grp.dependency.at(rj, rk) +=
            dot(row_span(u_mat, ks), row_span(neigh_h, js));
        axpy(row_span(v_mat, js), rp.dependency.at(rj, rk), row_span(u_mat, ks));
        axpy(row_span(d_edge, e), 1.0, row_span(w_mat, ks));
      }
      for (std::size_t j = 0; j < K; ++j) {
        outer_add(glayer.w_neigh, row_span(v_mat, j), row_span(node_in, j));
        matvec_transpose_add(layer.w_neigh, row_span(v_mat, j),
                             row_span(d_node_prev, j));
      }

      // Edge feature chain: edge^l = w_edge * edge^(l-1).
      const Matrix& edge_in = trace.edge_f[l - 1];
      Matrix d_edge_prev(n_edges, dims.edge_width(l - 1));
      for (std::size_t e = 0; e < n_edges; ++e) {
        outer_add(glayer.w_edge, row_span(d_edge, e), row_span(edge_in, e));
        matvec_transpose_add(layer.w_edge, row_span(d_edge, e),
                             row_span(d_edge_prev, e));
      }

      d_node = std::move(d_node_prev);
      d_edge = std::move(d_edge_prev);
    }
  }
  return lg.loss;
}

}  // namespace cxr
