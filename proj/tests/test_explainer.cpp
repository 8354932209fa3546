#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cxr/explainer.hpp"
#include "cxr/pipeline.hpp"
#include "test_support.hpp"

using namespace cxr;

namespace {

// Depth-0 model: heads read the mean-pooled raw features, linear head.
ModelParams linear_model(std::size_t d_in, std::size_t classes, double alpha,
                         double beta) {
  ModelDims dims;
  dims.input_dim = d_in;
  dims.hidden_dim = d_in;
  dims.edge_dim = 2;
  dims.layers = 0;
  dims.head_hidden = 0;
  dims.classes = classes;
  return ModelParams::zeros(dims, alpha, beta);
}

AnatomyGraph graph_with_features(std::vector<std::vector<double>> features) {
  std::vector<AnatomicalRegion> nodes;
  const auto& layout = default_region_layout();
  for (std::size_t k = 0; k < features.size(); ++k) {
    nodes.push_back(test::region_node(static_cast<Region>(k), layout[k],
                                      std::move(features[k])));
  }
  return build_graph(std::move(nodes), 0.5, builtin_knowledge_graph());
}

}  // namespace

TEST_CASE("linear oracle: attribution is the additive logit decomposition") {
  // Two relations weighted 1/0/0 so only the spatial head matters.
  ModelParams params = linear_model(3, 2, 1.0, 0.0);
  Matrix& w = params.relations[0].head.weights[0];
  w.at(0, 0) = 0.5;
  w.at(0, 1) = -1.5;
  w.at(0, 2) = 2.0;
  w.at(1, 0) = 1.0;
  params.relations[0].head.biases[0].at(0, 0) = 0.25;

  const AnatomyGraph graph = graph_with_features(
      {{1.0, 2.0, -0.5}, {0.5, -1.0, 0.0}, {2.0, 0.0, 1.0}});
  const GraphView view = make_graph_view(graph);
  const Prediction pred = forward(view, params);
  const Explanation explanation = attribute(pred, view, params, 0);

  const double k = 3.0;
  const std::vector<std::vector<double>> f = {
      {1.0, 2.0, -0.5}, {0.5, -1.0, 0.0}, {2.0, 0.0, 1.0}};
  double logit = 0.25;  // bias
  for (std::size_t node = 0; node < 3; ++node) {
    const double contribution =
        (0.5 * f[node][0] - 1.5 * f[node][1] + 2.0 * f[node][2]) / k;
    CHECK(std::fabs(explanation.node_scores[0][node] - contribution) < 1e-10);
    CHECK(std::fabs(explanation.combined_node_scores[node] - contribution) <
          1e-10);
    logit += contribution;
  }
  // Decomposition is complete: node scores sum to the logit minus the bias.
  double total = 0.0;
  for (const double s : explanation.combined_node_scores) total += s;
  CHECK(std::fabs(total - (logit - 0.25)) < 1e-10);
}

TEST_CASE("linear oracle: single node score equals w dot f exactly") {
  ModelParams params = linear_model(2, 2, 1.0, 0.0);
  params.relations[0].head.weights[0].at(0, 0) = 0.7;
  params.relations[0].head.weights[0].at(0, 1) = -0.3;

  AnatomyGraph graph;
  graph.nodes.push_back(
      test::region_node(Region::Cardiac, {0.4, 0.4, 0.2, 0.2}, {2.0, 1.0}));
  for (auto& adj : graph.adjacency) adj = AdjacencyMatrix(1, {0.0});
  graph.edge_features.assign(1, std::vector<EdgeFeature>(1));
  const GraphView view = make_graph_view(graph);
  const Prediction pred = forward(view, params);
  const Explanation explanation = attribute(pred, view, params, 0);
  CHECK(std::fabs(explanation.node_scores[0][0] - (0.7 * 2.0 - 0.3 * 1.0)) <
        1e-10);
}

TEST_CASE("zero features give zero scores; doubling doubles them") {
  ModelParams params = linear_model(2, 2, 1.0, 0.0);
  params.relations[0].head.weights[0].at(0, 0) = 1.0;
  params.relations[0].head.weights[0].at(0, 1) = 0.5;

  const AnatomyGraph graph =
      graph_with_features({{1.0, -2.0}, {0.0, 0.0}, {0.5, 0.5}});
  const GraphView view = make_graph_view(graph);
  const Prediction pred = forward(view, params);
  const Explanation a = attribute(pred, view, params, 0);
  CHECK(a.node_scores[0][1] == 0.0);

  const AnatomyGraph doubled =
      graph_with_features({{2.0, -4.0}, {0.0, 0.0}, {0.5, 0.5}});
  const GraphView view_doubled = make_graph_view(doubled);
  const Prediction pred_doubled = forward(view_doubled, params);
  const Explanation b = attribute(pred_doubled, view_doubled, params, 0);
  CHECK(b.node_scores[0][0] == doctest::Approx(2.0 * a.node_scores[0][0]).epsilon(1e-12));
  CHECK(b.node_scores[0][2] == doctest::Approx(a.node_scores[0][2]).epsilon(1e-12));
}

TEST_CASE("edge attributions satisfy the scaling sum rule") {
  // With one conv layer the only edge consumption is edge^1 = w_edge * edge^0,
  // so scaling every initial edge feature of one relation by (1 + eps) moves
  // the fused class logit by (sum of that relation's edge scores) * eps.
  std::mt19937_64 gen(44);
  for (int trial = 0; trial < 5; ++trial) {
    ModelDims dims;
    dims.input_dim = 3;
    dims.hidden_dim = 3;
    dims.edge_dim = 3;
    dims.layers = 1;
    dims.head_hidden = 3;
    dims.classes = 3;
    AnatomyGraph graph;
    GraphView view;
    ModelParams params;
    Prediction pred;
    while (true) {
      graph = test::random_graph(gen, 4, 3);
      view = make_graph_view(graph);
      params = ModelParams::init(
          dims, gen(), canonical_graph(0.4, builtin_knowledge_graph()), 0.3, 0.4);
      pred = forward(view, params);
      if (test::fd_safe(pred)) break;
    }
    const int class_id = static_cast<int>(gen() % dims.classes);
    const Explanation explanation = attribute(pred, view, params, class_id);

    const double weights[3] = {0.3, 0.4, 0.3};
    const auto fused_logit = [&](const GraphView& v) {
      const Prediction p = forward(v, params);
      double z = 0.0;
      for (std::size_t r = 0; r < kNumRelations; ++r) {
        z += weights[r] *
             p.traces[r].head_act.back()[static_cast<std::size_t>(class_id)];
      }
      return z;
    };

    for (std::size_t r = 0; r < kNumRelations; ++r) {
      double sum = 0.0;
      for (const EdgeContribution& e : explanation.edge_scores[r]) sum += e.score;

      const double eps = 1e-6;
      GraphView up = view;
      GraphView down = view;
      for (double& v : up.edges[r].init_features.data) v *= 1.0 + eps;
      for (double& v : down.edges[r].init_features.data) v *= 1.0 - eps;
      const double fd = (fused_logit(up) - fused_logit(down)) / (2.0 * eps);
      CHECK(sum == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("normalization: magnitude in [0,1], max maps to 1, idempotent") {
  const std::vector<double> scores = {-4.0, 2.0, 0.0, 1.0};
  const std::vector<double> normalized = normalize_scores(scores);
  CHECK(normalized == std::vector<double>{1.0, 0.5, 0.0, 0.25});
  CHECK(normalize_scores(normalized) == normalized);
  CHECK(normalize_scores(std::vector<double>{0.0, 0.0}) ==
        std::vector<double>{0.0, 0.0});
}

TEST_CASE("unknown class and stale cache raise") {
  ModelParams params = linear_model(2, 2, 1.0, 0.0);
  const AnatomyGraph graph = graph_with_features({{1.0, 0.0}, {0.0, 1.0}});
  const GraphView view = make_graph_view(graph);
  const Prediction pred = forward(view, params);
  CHECK_THROWS_AS(attribute(pred, view, params, 99), std::out_of_range);
  CHECK_THROWS_AS(attribute(pred, view, params, -1), std::out_of_range);
  params.revision++;
  CHECK_THROWS_AS(attribute(pred, view, params, 0), StaleCacheError);
}

TEST_CASE("top diseases per node") {
  SUBCASE("one-signal model puts its class on the signal node") {
    ModelParams params = linear_model(2, kNumDiseases, 1.0, 0.0);
    const auto cardio = static_cast<std::size_t>(Disease::Cardiomegaly);
    params.relations[0].head.weights[0].at(cardio, 0) = 1.0;

    // Node 16 is Cardiac in the enum order used by graph_with_features.
    std::vector<std::vector<double>> features(20, {0.05, 0.0});
    features[static_cast<std::size_t>(Region::Cardiac)] = {5.0, 0.0};
    const AnatomyGraph graph = graph_with_features(std::move(features));
    const GraphView view = make_graph_view(graph);
    const auto tops = top_diseases_per_node(view, params);
    CHECK(tops[static_cast<std::size_t>(Region::Cardiac)].top1 ==
          Disease::Cardiomegaly);
    CHECK_FALSE(tops[static_cast<std::size_t>(Region::Cardiac)].degenerate);
  }
  SUBCASE("ties break by class order") {
    ModelParams params = linear_model(2, kNumDiseases, 1.0, 0.0);
    // Classes 3 and 5 get identical weights; 3 must rank first.
    params.relations[0].head.weights[0].at(3, 0) = 1.0;
    params.relations[0].head.weights[0].at(5, 0) = 1.0;
    const AnatomyGraph graph = graph_with_features({{1.0, 0.0}, {0.5, 0.0}});
    const GraphView view = make_graph_view(graph);
    const auto tops = top_diseases_per_node(view, params);
    CHECK(tops[0].top1 == static_cast<Disease>(3));
    CHECK(tops[0].top2 == static_cast<Disease>(5));
  }
  SUBCASE("all-zero attributions flag the degenerate default") {
    const ModelParams params = linear_model(2, kNumDiseases, 1.0, 0.0);
    const AnatomyGraph graph = graph_with_features({{1.0, 0.0}, {0.5, 0.0}});
    const GraphView view = make_graph_view(graph);
    const auto tops = top_diseases_per_node(view, params);
    CHECK(tops[0].degenerate);
    CHECK(tops[0].top1 == static_cast<Disease>(0));
    CHECK(tops[0].top2 == static_cast<Disease>(1));
  }
}

TEST_CASE("overlay rendering") {
  std::vector<std::vector<double>> features = {{1.0, 0.0}, {0.5, 0.0}, {0.2, 0.0}};
  const AnatomyGraph graph = graph_with_features(std::move(features));
  const GraphView view = make_graph_view(graph);

  Explanation explanation;
  explanation.class_id = 0;
  explanation.combined_node_scores = {3.0, 1.0, 0.2};
  explanation.combined_node_normalized = normalize_scores({3.0, 1.0, 0.2});
  explanation.top_node = 0;
  explanation.edge_scores[0] = {{0, 1, 0.9, 0.9}, {1, 2, 0.4, 0.4}};

  const auto count = [](const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = text.find(needle); at != std::string::npos;
         at = text.find(needle, at + 1)) {
      ++n;
    }
    return n;
  };

  SUBCASE("threshold 0.5 draws exactly one arrow") {
    const std::string svg = render_overlay(view, explanation);
    CHECK(count(svg, "<line") == 1);
    CHECK(count(svg, "stroke=\"red\"") == 1);
    // node 1 normalized 1/3 stays below the node threshold
    CHECK(count(svg, "stroke=\"yellow\"") == 0);
  }
  SUBCASE("threshold above the maximum draws no arrows") {
    OverlayOptions options;
    options.edge_threshold = 1.0 + 1e-9;
    const std::string svg = render_overlay(view, explanation, options);
    CHECK(count(svg, "<line") == 0);
  }
  SUBCASE("single node draws one red box and nothing else") {
    AnatomyGraph one;
    one.nodes.push_back(
        test::region_node(Region::Cardiac, {0.4, 0.4, 0.2, 0.2}, {1.0}));
    for (auto& adj : one.adjacency) adj = AdjacencyMatrix(1, {0.0});
    one.edge_features.assign(1, std::vector<EdgeFeature>(1));
    const GraphView single = make_graph_view(one);
    Explanation ex;
    ex.class_id = 0;
    ex.combined_node_scores = {1.0};
    ex.combined_node_normalized = {1.0};
    ex.top_node = 0;
    const std::string svg = render_overlay(single, ex);
    CHECK(count(svg, "<rect") == 1);
    CHECK(count(svg, "stroke=\"red\"") == 1);
    CHECK(count(svg, "<line") == 0);
  }
  SUBCASE("every drawn edge exists in the relation's adjacency") {
    std::mt19937_64 gen(5);
    const AnatomyGraph random = test::random_graph(gen, 5, 2);
    const GraphView rview = make_graph_view(random);
    const ModelParams params = ModelParams::init(
        [] {
          ModelDims d;
          d.input_dim = 2;
          d.hidden_dim = 3;
          d.edge_dim = 2;
          d.layers = 1;
          d.head_hidden = 0;
          d.classes = 2;
          return d;
        }(),
        3, canonical_graph(0.4, builtin_knowledge_graph()), 0.3, 0.4);
    const Prediction pred = forward(rview, params);
    const Explanation ex = attribute(pred, rview, params, 0);
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      for (const EdgeContribution& edge : ex.edge_scores[r]) {
        const bool present =
            std::find(rview.edges[r].pairs.begin(), rview.edges[r].pairs.end(),
                      std::pair{edge.from, edge.to}) != rview.edges[r].pairs.end();
        CHECK(present);
        CHECK(edge.normalized >= 0.0);
        CHECK(edge.normalized <= 1.0);
      }
    }
  }
}
