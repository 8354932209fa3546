#include "cxr/graph_builder.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cxr/text.hpp"

namespace cxr {

namespace {

const char* const kDefaultKnowledgeGraphText =
    R"(# Default chest knowledge graph: where each finding mainly occurs, and
# which findings tend to appear together. Region and disease names follow
# the canonical vocabularies. Edit and pass via --kg to override.

[anatomy_disease]
Right costophrenic sulcus: Pleural Effusion, Blunting of costophrenic angle
Left costophrenic sulcus: Pleural Effusion, Blunting of costophrenic angle
Right lower lung: Pleural Effusion, Atelectasis, Consolidation, Pneumonia
Left lower lung: Pleural Effusion, Atelectasis, Consolidation, Pneumonia
Right hemidiaphragm: Pleural Effusion, Hernia
Left hemidiaphragm: Pleural Effusion, Hernia
Cardiac: Cardiomegaly
Cavoatrial: Cardiomegaly
Mediastinum: Cardiomegaly, Hernia, Scoliosis
Hilar of right lung: Edema, Vascular congestion
Hilar of left lung: Edema, Vascular congestion
Right lung: Edema, Consolidation, Pneumonia, Lung Opacity
Left lung: Edema, Consolidation, Pneumonia, Lung Opacity
Apical of right lung: Pneumothorax
Apical of left lung: Pneumothorax
Right upper lung: Pneumothorax, Emphysema, Pleural Thickening
Left upper lung: Pneumothorax, Emphysema, Pleural Thickening
Right mid lung: Atelectasis, Granuloma, Lung Opacity
Left mid lung: Atelectasis, Granuloma, Lung Opacity
Right clavicle: Fracture
Left clavicle: Fracture
Aortic arch structure: Calcification, Tortuosity of the thoracic aorta
Descending aorta: Calcification, Tortuosity of the thoracic aorta
Superior vena cava structure: Vascular congestion

[disease_cooccurrence]
Cardiomegaly -- Edema
Cardiomegaly -- Pleural Effusion
Cardiomegaly -- Vascular congestion
Edema -- Pleural Effusion
Edema -- Vascular congestion
Atelectasis -- Pleural Effusion
Atelectasis -- Lung Opacity
Pneumonia -- Consolidation
Pneumonia -- Lung Opacity
Pneumonia -- Pleural Effusion
Consolidation -- Lung Opacity
Pleural Effusion -- Blunting of costophrenic angle
)";

AdjacencyMatrix zero_matrix(std::size_t n) {
  return AdjacencyMatrix(n, std::vector<double>(n, 0.0));
}

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::Spatial: return "spatial";
    case Relation::Semantic: return "semantic";
    case Relation::Implicit: return "implicit";
  }
  return "";
}

KnowledgeGraphError::KnowledgeGraphError(const std::string& message,
                                         int line_number)
    : std::runtime_error(line_number > 0
                             ? "knowledge graph:" + std::to_string(line_number) +
                                   ": " + message
                             : "knowledge graph: " + message),
      line(line_number) {}

bool KnowledgeGraphConfig::region_has_disease(Region r, Disease d) const {
  return std::find(anatomy_disease_edges.begin(), anatomy_disease_edges.end(),
                   std::pair{r, d}) != anatomy_disease_edges.end();
}

bool KnowledgeGraphConfig::diseases_cooccur(Disease a, Disease b) const {
  for (const auto& [x, y] : disease_cooccurrence_edges) {
    if ((x == a && y == b) || (x == b && y == a)) return true;
  }
  return false;
}

double iou(const BBox& a, const BBox& b) {
  if (a.w <= 0.0 || a.h <= 0.0 || b.w <= 0.0 || b.h <= 0.0) {
    throw DegenerateBoxError("box with non-positive width or height");
  }
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

AdjacencyMatrix build_spatial(const std::vector<AnatomicalRegion>& nodes,
                              double tau) {
  const std::size_t n = nodes.size();
  AdjacencyMatrix adj = zero_matrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (iou(nodes[i].bbox, nodes[j].bbox) >= tau) {
        adj[i][j] = adj[j][i] = 1.0;
      }
    }
  }
  return adj;
}

AdjacencyMatrix build_semantic_phase1(const std::vector<AnatomicalRegion>& nodes,
                                      const KnowledgeGraphConfig& kg) {
  const std::size_t n = nodes.size();

  std::vector<std::vector<Disease>> diseases_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [region, disease] : kg.anatomy_disease_edges) {
      if (region == nodes[i].region) diseases_of[i].push_back(disease);
    }
  }

  AdjacencyMatrix adj = zero_matrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool connected = false;
      for (const Disease a : diseases_of[i]) {
        for (const Disease b : diseases_of[j]) {
          if (a == b || kg.diseases_cooccur(a, b)) {
            connected = true;
            break;
          }
        }
        if (connected) break;
      }
      if (connected) adj[i][j] = adj[j][i] = 1.0;
    }
  }
  return adj;
}

AdjacencyMatrix build_semantic_phase2(const std::vector<Disease>& top1,
                                      const std::vector<Disease>& top2,
                                      const CooccurrenceMatrix& co,
                                      std::int64_t min_count) {
  if (top1.size() != top2.size()) {
    throw std::invalid_argument("top1/top2 must have one disease per node");
  }
  const std::size_t n = top1.size();
  const auto related = [&](Disease a, Disease b) {
    if (a == b) return true;
    return co.counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] >
           min_count;
  };
  AdjacencyMatrix adj = zero_matrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a1 = related(top1[i], top1[j]) ? 1.0 : 0.0;
      const double a2 = related(top2[i], top2[j]) ? 1.0 : 0.0;
      const double value = (a1 + a2) / 2.0;
      adj[i][j] = adj[j][i] = value;
    }
  }
  return adj;
}

AdjacencyMatrix build_implicit(std::size_t n_nodes) {
  AdjacencyMatrix adj = zero_matrix(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (std::size_t j = 0; j < n_nodes; ++j) {
      if (i != j) adj[i][j] = 1.0;
    }
  }
  return adj;
}

AnatomyGraph build_graph(std::vector<AnatomicalRegion> nodes, double tau,
                         AdjacencyMatrix semantic) {
  if (nodes.size() < 2) {
    throw std::invalid_argument("a graph needs at least 2 nodes");
  }
  if (semantic.size() != nodes.size()) {
    throw std::invalid_argument("semantic adjacency size mismatch");
  }
  AnatomyGraph graph;
  graph.adjacency[static_cast<std::size_t>(Relation::Spatial)] =
      build_spatial(nodes, tau);
  graph.adjacency[static_cast<std::size_t>(Relation::Semantic)] =
      std::move(semantic);
  graph.adjacency[static_cast<std::size_t>(Relation::Implicit)] =
      build_implicit(nodes.size());

  const std::size_t n = nodes.size();
  graph.edge_features.assign(n, std::vector<EdgeFeature>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      graph.edge_features[i][j].values = {nodes[i].bbox.cx(), nodes[i].bbox.cy(),
                                          nodes[j].bbox.cx(), nodes[j].bbox.cy()};
    }
  }
  graph.nodes = std::move(nodes);
  return graph;
}

AnatomyGraph build_graph(std::vector<AnatomicalRegion> nodes, double tau,
                         const KnowledgeGraphConfig& kg) {
  AdjacencyMatrix semantic = build_semantic_phase1(nodes, kg);
  return build_graph(std::move(nodes), tau, std::move(semantic));
}

KnowledgeGraphConfig parse_knowledge_graph(std::string_view text) {
  KnowledgeGraphConfig kg;
  kg.source_text = std::string(text);

  enum class Part { None, AnatomyDisease, Cooccurrence };
  Part current = Part::None;

  std::istringstream stream{kg.source_text};
  std::string raw_line;
  int line = 0;
  while (std::getline(stream, raw_line)) {
    ++line;
    const std::size_t hash = raw_line.find('#');
    if (hash != std::string::npos) raw_line.resize(hash);
    const std::string trimmed = normalize_text(raw_line);
    if (trimmed.empty()) continue;

    if (trimmed == "[anatomy_disease]") {
      current = Part::AnatomyDisease;
      continue;
    }
    if (trimmed == "[disease_cooccurrence]") {
      current = Part::Cooccurrence;
      continue;
    }
    if (trimmed.front() == '[') {
      throw KnowledgeGraphError("unknown section '" + trimmed + "'", line);
    }

    if (current == Part::AnatomyDisease) {
      const std::size_t colon = trimmed.find(':');
      if (colon == std::string::npos) {
        throw KnowledgeGraphError("expected 'Region: Disease, ...'", line);
      }
      const auto region = parse_region(trimmed.substr(0, colon));
      if (!region) {
        throw KnowledgeGraphError(
            "unknown region '" + trimmed.substr(0, colon) + "'", line);
      }
      std::string value = trimmed.substr(colon + 1);
      std::size_t start = 0;
      while (start < value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        const std::string name =
            normalize_text(value.substr(start, comma - start));
        if (!name.empty()) {
          const auto disease = parse_disease(name);
          if (!disease) {
            throw KnowledgeGraphError("unknown disease '" + name + "'", line);
          }
          kg.anatomy_disease_edges.emplace_back(*region, *disease);
        }
        start = comma + 1;
      }
    } else if (current == Part::Cooccurrence) {
      const std::size_t dash = trimmed.find("--");
      if (dash == std::string::npos) {
        throw KnowledgeGraphError("expected 'Disease -- Disease'", line);
      }
      const auto a = parse_disease(trimmed.substr(0, dash));
      const auto b = parse_disease(trimmed.substr(dash + 2));
      if (!a || !b) {
        throw KnowledgeGraphError("unknown disease in pair", line);
      }
      kg.disease_cooccurrence_edges.emplace_back(*a, *b);
    } else {
      throw KnowledgeGraphError("content before any [section] header", line);
    }
  }
  return kg;
}

KnowledgeGraphConfig load_knowledge_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KnowledgeGraphError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_knowledge_graph(buffer.str());
}

const KnowledgeGraphConfig& builtin_knowledge_graph() {
  static const KnowledgeGraphConfig kg =
      parse_knowledge_graph(kDefaultKnowledgeGraphText);
  return kg;
}

std::string_view builtin_knowledge_graph_text() {
  return kDefaultKnowledgeGraphText;
}

}  // namespace cxr
