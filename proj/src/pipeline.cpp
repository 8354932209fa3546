#include "cxr/pipeline.hpp"

#include <functional>
#include <map>

#include "cxr/explainer.hpp"

namespace cxr {

namespace {

std::vector<AnatomicalRegion> nodes_from_record(const RegionRecord& record,
                                                const Matrix& feature_table) {
  std::vector<AnatomicalRegion> nodes;
  for (const RegionEntry& entry : record.regions) {
    if (entry.feature_row >= feature_table.rows) {
      throw IoError("feature row " + std::to_string(entry.feature_row) +
                    " out of range for study " + record.study_id);
    }
    AnatomicalRegion node;
    node.region = entry.region;
    node.bbox = entry.bbox;
    node.feature.assign(feature_table.row(entry.feature_row),
                        feature_table.row(entry.feature_row) + feature_table.cols);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

using SemanticProvider =
    std::function<AdjacencyMatrix(const std::vector<AnatomicalRegion>&)>;

AssembledDataset assemble_with(const std::vector<SoftLabelVector>& labels,
                               const std::vector<RegionRecord>& regions,
                               const Matrix& feature_table,
                               const DatasetSplit& split, double tau,
                               const KnowledgeGraphConfig& kg,
                               const SemanticProvider& semantic_for) {
  std::map<std::string, const SoftLabelVector*> label_by_id;
  for (const SoftLabelVector& l : labels) label_by_id[l.study_id] = &l;
  std::map<std::string, const RegionRecord*> record_by_id;
  for (const RegionRecord& r : regions) record_by_id[r.study_id] = &r;

  AssembledDataset data;
  data.canonical = canonical_graph(tau, kg);

  const auto build_list = [&](const std::vector<std::string>& ids,
                              std::vector<TrainStudy>& out) {
    for (const std::string& id : ids) {
      const auto label_it = label_by_id.find(id);
      const auto record_it = record_by_id.find(id);
      if (label_it == label_by_id.end() || record_it == record_by_id.end()) {
        throw IoError("study " + id + " missing labels or regions");
      }
      std::vector<AnatomicalRegion> nodes =
          nodes_from_record(*record_it->second, feature_table);
      AdjacencyMatrix semantic = semantic_for(nodes);
      AnatomyGraph graph = build_graph(std::move(nodes), tau, std::move(semantic));
      out.push_back(make_train_study(id, graph, *label_it->second));
    }
  };
  build_list(split.train, data.train);
  build_list(split.val, data.val);
  build_list(split.test, data.test);
  return data;
}

}  // namespace

AnatomyGraph canonical_graph(double tau, const KnowledgeGraphConfig& kg) {
  std::vector<AnatomicalRegion> nodes;
  const auto& layout = default_region_layout();
  for (std::size_t r = 0; r < kNumRegions; ++r) {
    AnatomicalRegion node;
    node.region = static_cast<Region>(r);
    node.bbox = layout[r];
    node.feature = {0.0};
    nodes.push_back(std::move(node));
  }
  return build_graph(std::move(nodes), tau, kg);
}

AssembledDataset assemble_dataset(const std::vector<SoftLabelVector>& labels,
                                  const std::vector<RegionRecord>& regions,
                                  const Matrix& feature_table,
                                  const DatasetSplit& split, double tau,
                                  const KnowledgeGraphConfig& kg) {
  return assemble_with(labels, regions, feature_table, split, tau, kg,
                       [&](const std::vector<AnatomicalRegion>& nodes) {
                         return build_semantic_phase1(nodes, kg);
                       });
}

AssembledDataset assemble_dataset_phase2(
    const std::vector<SoftLabelVector>& labels,
    const std::vector<RegionRecord>& regions, const Matrix& feature_table,
    const DatasetSplit& split, double tau, const KnowledgeGraphConfig& kg,
    const ModelParams& phase1_params, std::int64_t cooccur_min_count) {
  std::map<std::string, const SoftLabelVector*> label_by_id;
  for (const SoftLabelVector& l : labels) label_by_id[l.study_id] = &l;
  std::map<std::string, const RegionRecord*> record_by_id;
  for (const RegionRecord& r : regions) record_by_id[r.study_id] = &r;

  // Mean training features per canonical region.
  Matrix mean_features(kNumRegions, feature_table.cols);
  std::vector<std::int64_t> seen(kNumRegions, 0);
  std::vector<SoftLabelVector> train_labels;
  for (const std::string& id : split.train) {
    const auto record_it = record_by_id.find(id);
    const auto label_it = label_by_id.find(id);
    if (record_it == record_by_id.end() || label_it == label_by_id.end()) {
      throw IoError("study " + id + " missing labels or regions");
    }
    train_labels.push_back(*label_it->second);
    for (const RegionEntry& entry : record_it->second->regions) {
      const auto r = static_cast<std::size_t>(entry.region);
      ++seen[r];
      for (std::size_t f = 0; f < feature_table.cols; ++f) {
        mean_features.at(r, f) += feature_table.at(entry.feature_row, f);
      }
    }
  }
  for (std::size_t r = 0; r < kNumRegions; ++r) {
    if (seen[r] == 0) continue;
    for (std::size_t f = 0; f < feature_table.cols; ++f) {
      mean_features.at(r, f) /= static_cast<double>(seen[r]);
    }
  }

  // Canonical graph carrying the mean features, attributed by the trained
  // phase-1 model.
  std::vector<AnatomicalRegion> canonical_nodes;
  const auto& layout = default_region_layout();
  for (std::size_t r = 0; r < kNumRegions; ++r) {
    AnatomicalRegion node;
    node.region = static_cast<Region>(r);
    node.bbox = layout[r];
    node.feature.assign(mean_features.row(r), mean_features.row(r) + mean_features.cols);
    canonical_nodes.push_back(std::move(node));
  }
  const AnatomyGraph canonical = build_graph(std::move(canonical_nodes), tau, kg);
  const GraphView canonical_view = make_graph_view(canonical);
  const std::vector<NodeTopDiseases> tops =
      top_diseases_per_node(canonical_view, phase1_params);

  const CooccurrenceMatrix co = build_cooccurrence(train_labels, 1.0);

  return assemble_with(
      labels, regions, feature_table, split, tau, kg,
      [&](const std::vector<AnatomicalRegion>& nodes) {
        std::vector<Disease> top1;
        std::vector<Disease> top2;
        for (const AnatomicalRegion& node : nodes) {
          const auto r = static_cast<std::size_t>(node.region);
          top1.push_back(tops[r].top1);
          top2.push_back(tops[r].top2);
        }
        return build_semantic_phase2(top1, top2, co, cooccur_min_count);
      });
}

}  // namespace cxr
