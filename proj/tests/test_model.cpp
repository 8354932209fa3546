#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cxr/model.hpp"
#include "cxr/pipeline.hpp"
#include "test_support.hpp"

using namespace cxr;

namespace {

ModelParams scalar_params() {
  ModelDims dims;
  dims.input_dim = 1;
  dims.hidden_dim = 1;
  dims.edge_dim = 1;
  dims.layers = 1;
  dims.head_hidden = 0;
  dims.classes = 2;
  ModelParams params = ModelParams::zeros(dims);
  ConvLayerParams& layer = params.relations[2].conv[0];  // implicit
  layer.w_self.at(0, 0) = 2.0;
  layer.w_neigh.at(0, 0) = 3.0;
  layer.w_msg.at(0, 0) = 1.0;   // node part of the concatenated message
  layer.w_msg.at(0, 1) = 0.5;   // edge part
  layer.w_edge.at(0, 0) = 0.1;
  layer.w_edge.at(0, 1) = 0.2;
  layer.w_edge.at(0, 2) = 0.3;
  layer.w_edge.at(0, 3) = 0.4;
  params.relations[2].dependency.at(0, 1) = 1.0;
  params.relations[2].dependency.at(1, 0) = 1.0;
  return params;
}

AnatomyGraph two_node_graph() {
  std::vector<AnatomicalRegion> nodes = {
      test::region_node(static_cast<Region>(0), {0.0, 0.0, 0.2, 0.2}, {0.8}),
      test::region_node(static_cast<Region>(1), {0.1, 0.0, 0.2, 0.2}, {-0.4}),
  };
  return build_graph(std::move(nodes), 1.0,
                     AdjacencyMatrix(2, std::vector<double>(2, 0.0)));
}

double loss_for(const Prediction& pred, std::span<const double> targets,
                LossMode mode, bool literal) {
  if (literal) return loss_expert(pred.fused, targets, true);
  return mode == LossMode::Hard ? loss_hard(pred.fused, targets)
                                : loss_expert(pred.fused, targets);
}

}  // namespace

TEST_CASE("conv layer: hand-computed two-node scalar network") {
  const AnatomyGraph graph = two_node_graph();
  const GraphView view = make_graph_view(graph);
  const ModelParams params = scalar_params();

  const auto [nodes_out, edges_out] =
      conv_layer(view, Relation::Implicit, 1, view.features,
                 view.edges[2].init_features, params);

  // Edge (0,1): centers [0.1,0.1,0.2,0.1] -> 0.01+0.02+0.06+0.04 = 0.13.
  // Edge (1,0): centers [0.2,0.1,0.1,0.1] -> 0.02+0.02+0.03+0.04 = 0.11.
  REQUIRE(edges_out.rows == 2);
  const double e01 = view.edges[2].pairs[0] == std::pair{0, 1}
                         ? edges_out.at(0, 0)
                         : edges_out.at(1, 0);
  const double e10 = view.edges[2].pairs[0] == std::pair{0, 1}
                         ? edges_out.at(1, 0)
                         : edges_out.at(0, 0);
  CHECK(e01 == doctest::Approx(0.13).epsilon(1e-12));
  CHECK(e10 == doctest::Approx(0.11).epsilon(1e-12));

  // Node 0: relu(2*0.8 + 1*(1*3*(-0.4)) + 0.5*0.11) = relu(0.455).
  // Node 1: relu(2*(-0.4) + 1*(1*3*0.8) + 0.5*0.13) = relu(1.665).
  CHECK(nodes_out.at(0, 0) == doctest::Approx(0.455).epsilon(1e-12));
  CHECK(nodes_out.at(1, 0) == doctest::Approx(1.665).epsilon(1e-12));
}

TEST_CASE("conv layer: isolated node reduces to the self path") {
  const AnatomyGraph graph = two_node_graph();  // tau=1: no spatial edges
  const GraphView view = make_graph_view(graph);
  ModelParams params = scalar_params();
  params.relations[0].conv[0].w_self.at(0, 0) = 2.0;

  const auto [nodes_out, edges_out] =
      conv_layer(view, Relation::Spatial, 1, view.features,
                 view.edges[0].init_features, params);
  CHECK(view.edges[0].pairs.empty());
  CHECK(nodes_out.at(0, 0) == doctest::Approx(1.6));  // relu(2 * 0.8)
  CHECK(nodes_out.at(1, 0) == 0.0);                   // relu(2 * -0.4)
}

TEST_CASE("conv layer: zero inputs give zero outputs") {
  const AnatomyGraph graph = two_node_graph();
  const GraphView view = make_graph_view(graph);
  const ModelParams params = scalar_params();
  Matrix zero_nodes(2, 1);
  Matrix zero_edges(2, 4);
  const auto [nodes_out, edges_out] =
      conv_layer(view, Relation::Implicit, 1, zero_nodes, zero_edges, params);
  for (const double v : nodes_out.data) CHECK(v == 0.0);
  for (const double v : edges_out.data) CHECK(v == 0.0);
}

TEST_CASE("conv layer: dimension mismatch raises") {
  const AnatomyGraph graph = two_node_graph();
  const GraphView view = make_graph_view(graph);
  const ModelParams params = scalar_params();
  Matrix bad_nodes(2, 3);
  CHECK_THROWS_AS(conv_layer(view, Relation::Implicit, 1, bad_nodes,
                             view.edges[2].init_features, params),
                  DimensionError);
}

TEST_CASE("forward: fusion weights") {
  std::mt19937_64 gen(2);
  const AnatomyGraph graph = test::random_graph(gen, 5, 3);
  const GraphView view = make_graph_view(graph);
  ModelDims dims;
  dims.input_dim = 3;
  dims.hidden_dim = 4;
  dims.edge_dim = 3;
  dims.layers = 2;
  dims.head_hidden = 4;
  dims.classes = 6;
  const AnatomyGraph canonical = canonical_graph(0.4, builtin_knowledge_graph());

  SUBCASE("alpha=1 reproduces the spatial head exactly") {
    const ModelParams params = ModelParams::init(dims, 3, canonical, 1.0, 0.0);
    const Prediction pred = forward(view, params);
    for (std::size_t c = 0; c < dims.classes; ++c) {
      CHECK(pred.fused[c] == pred.traces[0].scores[c]);
    }
  }
  SUBCASE("alpha=beta=1/3 is the mean of the three heads") {
    const ModelParams params =
        ModelParams::init(dims, 3, canonical, 1.0 / 3, 1.0 / 3);
    const Prediction pred = forward(view, params);
    for (std::size_t c = 0; c < dims.classes; ++c) {
      const double mean = (pred.traces[0].scores[c] + pred.traces[1].scores[c] +
                           pred.traces[2].scores[c]) /
                          3.0;
      CHECK(pred.fused[c] == doctest::Approx(mean).epsilon(1e-12));
    }
  }
  SUBCASE("fused is always the stated convex combination") {
    const ModelParams params = ModelParams::init(dims, 3, canonical, 0.3, 0.4);
    const Prediction pred = forward(view, params);
    for (std::size_t c = 0; c < dims.classes; ++c) {
      const double expect = 0.3 * pred.traces[0].scores[c] +
                            0.4 * pred.traces[1].scores[c] +
                            0.3 * pred.traces[2].scores[c];
      CHECK(pred.fused[c] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  SUBCASE("invalid fusion weights rejected") {
    CHECK_THROWS_AS(ModelParams::init(dims, 3, canonical, 0.8, 0.4),
                    std::invalid_argument);
  }
}

TEST_CASE("forward: single-node graph pools to that node's features") {
  AnatomyGraph graph;
  graph.nodes.push_back(
      test::region_node(Region::Cardiac, {0.4, 0.4, 0.2, 0.2}, {0.7, -0.2}));
  for (auto& adj : graph.adjacency) adj = AdjacencyMatrix(1, {0.0});
  graph.edge_features.assign(1, std::vector<EdgeFeature>(1));
  const GraphView view = make_graph_view(graph);

  ModelDims dims;
  dims.input_dim = 2;
  dims.hidden_dim = 3;
  dims.edge_dim = 2;
  dims.layers = 0;  // heads directly on the features
  dims.head_hidden = 0;
  dims.classes = 2;
  const ModelParams params = ModelParams::init(
      dims, 5, canonical_graph(0.4, builtin_knowledge_graph()), 0.3, 0.4);
  const Prediction pred = forward(view, params);
  CHECK(pred.traces[0].pooled[0] == doctest::Approx(0.7));
  CHECK(pred.traces[0].pooled[1] == doctest::Approx(-0.2));
}

TEST_CASE("losses") {
  SUBCASE("perfect prediction is (clamped) zero") {
    const double fused[] = {1.0, 0.0};
    const double targets[] = {1.0, 0.0};
    CHECK(loss_hard(fused, targets) < 1e-6);
  }
  SUBCASE("hand values: ln 2 both ways") {
    const double half[] = {0.5};
    const double one[] = {1.0};
    const double zero[] = {0.0};
    CHECK(loss_hard(half, one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(loss_hard(half, zero) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("expert loss at p_ex = fused = 0.7 is the entropy bound") {
    const double fused[] = {0.7};
    const double targets[] = {0.7};
    const double expect = -(0.7 * std::log(0.7) + 0.3 * std::log(0.3));
    CHECK(loss_expert(fused, targets) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.6109).epsilon(1e-4));
  }
  SUBCASE("expert reduces to hard on 0/1 targets") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> fused(18);
      std::vector<double> targets(18);
      for (auto& f : fused) f = 0.001 + 0.998 * uniform01(gen);
      for (auto& t : targets) t = gen() % 2 ? 1.0 : 0.0;
      CHECK(std::fabs(loss_expert(fused, targets) - loss_hard(fused, targets)) <
            1e-12);
    }
  }
  SUBCASE("literal form is the plain cross-entropy sum") {
    const double fused[] = {0.5, 0.25};
    const double targets[] = {1.0, 0.0};
    CHECK(loss_expert(fused, targets, true) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("backward: gradients match central finite differences") {
  std::mt19937_64 gen(7);
  int checked = 0;
  for (int inst = 0; inst < 30; ++inst) {
    ModelDims dims;
    GraphView view;
    AnatomyGraph graph;
    ModelParams params;
    Prediction pred;
    // Central differences are invalid across rectifier kinks; resample until
    // the forward pass clears them by a margin.
    while (true) {
      dims = ModelDims{};
      dims.input_dim = 2 + gen() % 3;
      dims.hidden_dim = 3;
      dims.edge_dim = 3;
      dims.layers = 3;
      dims.head_hidden = (inst % 2 == 0) ? 3 : 0;
      dims.classes = 4;
      graph = test::random_graph(gen, 2 + static_cast<int>(gen() % 5),
                                 static_cast<int>(dims.input_dim));
      view = make_graph_view(graph);
      params = ModelParams::init(
          dims, gen(), canonical_graph(0.4, builtin_knowledge_graph()), 0.35, 0.25);
      pred = forward(view, params);
      if (test::fd_safe(pred)) break;
    }
    std::vector<double> targets(dims.classes);
    for (auto& t : targets) t = uniform01(gen);
    const LossMode mode = inst % 3 == 0 ? LossMode::Hard : LossMode::ExpertSoft;
    if (mode == LossMode::Hard) {
      for (auto& t : targets) t = t > 0.5 ? 1.0 : 0.0;
    }
    const bool literal = inst % 5 == 0;

    ModelGrads grads = ModelGrads::like(params);
    backward(pred, view, params, targets, mode, literal, grads);

    const auto tensors = param_tensors(params);
    const auto grad_tensors = param_tensors(grads.tensors);
    const double eps = 1e-5;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      for (std::size_t n = 0; n < tensors[t]->data.size(); ++n) {
        const double saved = tensors[t]->data[n];
        tensors[t]->data[n] = saved + eps;
        const double up = loss_for(forward(view, params), targets, mode, literal);
        tensors[t]->data[n] = saved - eps;
        const double down = loss_for(forward(view, params), targets, mode, literal);
        tensors[t]->data[n] = saved;
        const double fd = (up - down) / (2.0 * eps);
        const double an = grad_tensors[t]->data[n];
        const double err =
            std::fabs(fd - an) / std::max({1e-3, std::fabs(fd), std::fabs(an)});
        CHECK(err < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked > 10000);
}

TEST_CASE("backward: clamped perfect prediction has zero head gradients") {
  std::mt19937_64 gen(6);
  const AnatomyGraph graph = test::random_graph(gen, 3, 2);
  const GraphView view = make_graph_view(graph);
  ModelDims dims;
  dims.input_dim = 2;
  dims.hidden_dim = 2;
  dims.edge_dim = 2;
  dims.layers = 1;
  dims.head_hidden = 0;
  dims.classes = 2;
  ModelParams params = ModelParams::zeros(dims, 0.3, 0.4);
  for (auto& relation : params.relations) {
    relation.head.biases[0].at(0, 0) = 50.0;   // class 0 saturates at 1
    relation.head.biases[0].at(0, 1) = -50.0;  // class 1 saturates at 0
  }
  const std::vector<double> targets = {1.0, 0.0};
  const Prediction pred = forward(view, params);
  ModelGrads grads = ModelGrads::like(params);
  const double loss = backward(pred, view, params, targets, LossMode::Hard,
                               false, grads);
  CHECK(loss < 1e-6);
  for (const auto& relation : grads.tensors.relations) {
    for (const Matrix& b : relation.head.biases) {
      for (const double v : b.data) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("backward: soft-mode pre-squash gradient is (fused - target) / C") {
  std::mt19937_64 gen(9);
  const AnatomyGraph graph = test::random_graph(gen, 4, 3);
  const GraphView view = make_graph_view(graph);
  ModelDims dims;
  dims.input_dim = 3;
  dims.hidden_dim = 3;
  dims.edge_dim = 3;
  dims.layers = 1;
  dims.head_hidden = 0;
  dims.classes = 5;
  // Single active relation: alpha = 1 makes fused = sigmoid(z_spatial).
  const ModelParams params = ModelParams::init(
      dims, 21, canonical_graph(0.4, builtin_knowledge_graph()), 1.0, 0.0);
  std::vector<double> targets(dims.classes);
  for (auto& t : targets) t = uniform01(gen);

  const Prediction pred = forward(view, params);
  ModelGrads grads = ModelGrads::like(params);
  backward(pred, view, params, targets, LossMode::ExpertSoft, false, grads);

  // The output bias gradient is exactly dL/dz.
  const Matrix& bias_grad = grads.tensors.relations[0].head.biases[0];
  for (std::size_t c = 0; c < dims.classes; ++c) {
    const double expect = (pred.fused[c] - targets[c]) / dims.classes;
    CHECK(bias_grad.at(0, c) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("backward: implicit-head gradients scale with 1 - alpha - beta") {
  std::mt19937_64 gen(10);
  const AnatomyGraph graph = test::random_graph(gen, 4, 3);
  const GraphView view = make_graph_view(graph);
  ModelDims dims;
  dims.input_dim = 3;
  dims.hidden_dim = 3;
  dims.edge_dim = 3;
  dims.layers = 1;
  dims.head_hidden = 0;
  dims.classes = 4;
  const AnatomyGraph canonical = canonical_graph(0.4, builtin_knowledge_graph());
  std::vector<double> targets = {1.0, 0.0, 0.7, 0.3};

  for (const auto [alpha, beta] : {std::pair{0.2, 0.2}, std::pair{0.5, 0.1}}) {
    const ModelParams params = ModelParams::init(dims, 33, canonical, alpha, beta);
    const double gamma = 1.0 - alpha - beta;
    const Prediction pred = forward(view, params);
    ModelGrads grads = ModelGrads::like(params);
    backward(pred, view, params, targets, LossMode::ExpertSoft, false, grads);

    for (std::size_t c = 0; c < dims.classes; ++c) {
      const double q = pred.fused[c];
      const double d_fused = (q - targets[c]) / (q * (1.0 - q)) / dims.classes;
      const double s = pred.traces[2].scores[c];
      const double expect = d_fused * gamma * s * (1.0 - s);
      CHECK(grads.tensors.relations[2].head.biases[0].at(0, c) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5;
    AnatomyGraph graph = test::random_graph(gen, n, 3);

    // Reversed node order with consistently permuted semantic adjacency.
    std::vector<AnatomicalRegion> reversed_nodes(graph.nodes.rbegin(),
                                                 graph.nodes.rend());
    AdjacencyMatrix reversed_sem(n, std::vector<double>(n, 0.0));
    const AdjacencyMatrix& sem = graph.adj(Relation::Semantic);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        reversed_sem[static_cast<std::size_t>(n - 1 - i)]
                    [static_cast<std::size_t>(n - 1 - j)] =
            sem[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    const AnatomyGraph permuted =
        build_graph(reversed_nodes, 0.3, std::move(reversed_sem));

    ModelDims dims;
    dims.input_dim = 3;
    dims.hidden_dim = 4;
    dims.edge_dim = 3;
    dims.layers = 3;
    dims.head_hidden = 4;
    dims.classes = 6;
    const ModelParams params = ModelParams::init(
        dims, gen(), canonical_graph(0.4, builtin_knowledge_graph()), 0.3, 0.4);

    const GraphView view_a = make_graph_view(graph);
    const GraphView view_b = make_graph_view(permuted);
    const Prediction a = forward(view_a, params);
    const Prediction b = forward(view_b, params);
    for (std::size_t c = 0; c < dims.classes; ++c) {
      CHECK(a.fused[c] == doctest::Approx(b.fused[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("stale cache raises") {
  std::mt19937_64 gen(15);
  const AnatomyGraph graph = test::random_graph(gen, 3, 2);
  const GraphView view = make_graph_view(graph);
  ModelDims dims;
  dims.input_dim = 2;
  dims.hidden_dim = 2;
  dims.edge_dim = 2;
  dims.layers = 1;
  dims.head_hidden = 0;
  dims.classes = 2;
  ModelParams params = ModelParams::init(
      dims, 8, canonical_graph(0.4, builtin_knowledge_graph()), 0.3, 0.4);
  const Prediction pred = forward(view, params);
  params.revision++;  // parameters changed after the cached forward
  ModelGrads grads = ModelGrads::like(params);
  const std::vector<double> targets = {1.0, 0.0};
  CHECK_THROWS_AS(
      backward(pred, view, params, targets, LossMode::Hard, false, grads),
      StaleCacheError);
}
