#include "cxr/io.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cxr {

namespace {

using nlohmann::json;

json parse_json_line(const std::string& line, const std::string& path, int n) {
  json record = json::parse(line, nullptr, false);
  if (record.is_discarded()) {
    throw IoError(path + ":" + std::to_string(n) + ": invalid JSON");
  }
  return record;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IoError(path + ": truncated file");
  }
  return v;
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

double read_f64(std::istream& in, const std::string& path) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IoError(path + ": truncated file");
  }
  return v;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot read " + path);
  return in;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in = open_in(path, true);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out = open_out(path, true);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path);
}

std::vector<ReportRecord> read_reports(const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<ReportRecord> reports;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      reports.push_back(ReportRecord{file.stem().string(),
                                     read_text_file(file.string())});
    }
    return reports;
  }

  std::ifstream in = open_in(path, false);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json record = parse_json_line(line, path, n);
    if (!record.contains("study_id") || !record.contains("text")) {
      throw IoError(path + ":" + std::to_string(n) +
                    ": record needs study_id and text");
    }
    reports.push_back(ReportRecord{record["study_id"].get<std::string>(),
                                   record["text"].get<std::string>()});
  }
  return reports;
}

void write_reports_jsonl(const std::string& path,
                         const std::vector<ReportRecord>& reports) {
  std::ofstream out = open_out(path, true);
  for (const ReportRecord& report : reports) {
    json record;
    record["study_id"] = report.study_id;
    record["text"] = report.text;
    out << record.dump() << '\n';
  }
}

void write_labels_jsonl(const std::string& path,
                        const std::vector<SoftLabelVector>& labels) {
  std::ofstream out = open_out(path, true);
  for (const SoftLabelVector& study : labels) {
    json record;
    record["study_id"] = study.study_id;
    json list = json::array();
    for (std::size_t d = 0; d < kNumDiseases; ++d) {
      json item;
      item["disease"] = disease_name(static_cast<Disease>(d));
      item["probability"] = study.labels[d].probability;
      if (study.labels[d].severity) {
        item["severity"] = severity_name(*study.labels[d].severity);
      }
      list.push_back(std::move(item));
    }
    record["labels"] = std::move(list);
    out << record.dump() << '\n';
  }
}

std::vector<SoftLabelVector> read_labels_jsonl(const std::string& path) {
  std::ifstream in = open_in(path, false);
  std::vector<SoftLabelVector> labels;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json record = parse_json_line(line, path, n);
    SoftLabelVector study;
    study.study_id = record.at("study_id").get<std::string>();
    for (const json& item : record.at("labels")) {
      const auto disease = parse_disease(item.at("disease").get<std::string>());
      if (!disease) {
        throw IoError(path + ":" + std::to_string(n) + ": unknown disease '" +
                      item.at("disease").get<std::string>() + "'");
      }
      SoftLabel& label = study[*disease];
      label.probability = item.at("probability").get<double>();
      if (item.contains("severity")) {
        label.severity = parse_severity(item["severity"].get<std::string>());
        if (!label.severity) {
          throw IoError(path + ":" + std::to_string(n) + ": unknown severity '" +
                        item["severity"].get<std::string>() + "'");
        }
      }
    }
    labels.push_back(std::move(study));
  }
  return labels;
}

void write_regions_jsonl(const std::string& path,
                         const std::vector<RegionRecord>& records) {
  std::ofstream out = open_out(path, true);
  for (const RegionRecord& record : records) {
    json j;
    j["study_id"] = record.study_id;
    json list = json::array();
    for (const RegionEntry& entry : record.regions) {
      json item;
      item["name"] = region_name(entry.region);
      item["bbox"] = {entry.bbox.x, entry.bbox.y, entry.bbox.w, entry.bbox.h};
      item["feature_file_offset"] = entry.feature_row;
      list.push_back(std::move(item));
    }
    j["regions"] = std::move(list);
    out << j.dump() << '\n';
  }
}

std::vector<RegionRecord> read_regions_jsonl(const std::string& path) {
  std::ifstream in = open_in(path, false);
  std::vector<RegionRecord> records;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json j = parse_json_line(line, path, n);
    RegionRecord record;
    record.study_id = j.at("study_id").get<std::string>();
    for (const json& item : j.at("regions")) {
      RegionEntry entry;
      const auto region = parse_region(item.at("name").get<std::string>());
      if (!region) {
        throw IoError(path + ":" + std::to_string(n) + ": unknown region '" +
                      item.at("name").get<std::string>() + "'");
      }
      entry.region = *region;
      const json& box = item.at("bbox");
      if (!box.is_array() || box.size() != 4) {
        throw IoError(path + ":" + std::to_string(n) + ": bbox must be [x,y,w,h]");
      }
      entry.bbox = BBox{box[0].get<double>(), box[1].get<double>(),
                        box[2].get<double>(), box[3].get<double>()};
      entry.feature_row = item.at("feature_file_offset").get<std::uint64_t>();
      record.regions.push_back(entry);
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_feature_table(const std::string& path, const Matrix& rows) {
  std::ofstream out = open_out(path, true);
  out.write("RGNF", 4);
  write_u32(out, static_cast<std::uint32_t>(rows.rows));
  write_u32(out, static_cast<std::uint32_t>(rows.cols));
  for (const double value : rows.data) {
    const float f = static_cast<float>(value);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
  if (!out) throw IoError("failed writing " + path);
}

Matrix read_feature_table(const std::string& path) {
  std::ifstream in = open_in(path, true);
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "RGNF", 4) != 0) {
    throw IoError(path + ": not a feature table (bad magic)");
  }
  const std::uint32_t n_rows = read_u32(in, path);
  const std::uint32_t width = read_u32(in, path);
  Matrix rows(n_rows, width);
  for (double& value : rows.data) {
    float f = 0.0f;
    if (!in.read(reinterpret_cast<char*>(&f), sizeof f)) {
      throw IoError(path + ": truncated feature table");
    }
    value = static_cast<double>(f);
  }
  return rows;
}

void write_split_json(const std::string& path, const DatasetSplit& split) {
  json j;
  j["seed"] = split.seed;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  write_text_file(path, j.dump(2) + "\n");
}

DatasetSplit read_split_json(const std::string& path) {
  const json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw IoError(path + ": invalid JSON");
  DatasetSplit split;
  split.seed = j.at("seed").get<std::uint64_t>();
  split.train = j.at("train").get<std::vector<std::string>>();
  split.val = j.at("val").get<std::vector<std::string>>();
  split.test = j.at("test").get<std::vector<std::string>>();
  return split;
}

void write_checkpoint(const std::string& path, const ModelParams& params,
                      double tau) {
  std::ofstream out = open_out(path, true);
  out.write("MRGC", 4);
  write_u32(out, 1);  // version
  const ModelDims& dims = params.dims;
  write_u32(out, static_cast<std::uint32_t>(dims.input_dim));
  write_u32(out, static_cast<std::uint32_t>(dims.hidden_dim));
  write_u32(out, static_cast<std::uint32_t>(dims.edge_dim));
  write_u32(out, static_cast<std::uint32_t>(dims.edge_input_dim));
  write_u32(out, static_cast<std::uint32_t>(dims.layers));
  write_u32(out, static_cast<std::uint32_t>(dims.head_hidden));
  write_u32(out, static_cast<std::uint32_t>(dims.classes));
  write_u32(out, static_cast<std::uint32_t>(dims.n_regions));
  write_f64(out, params.alpha);
  write_f64(out, params.beta);
  write_f64(out, tau);
  for (const Matrix* tensor : param_tensors(params)) {
    for (const double v : tensor->data) write_f64(out, v);
  }
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path, true);
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "MRGC", 4) != 0) {
    throw IoError(path + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != 1) {
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version));
  }
  ModelDims dims;
  dims.input_dim = read_u32(in, path);
  dims.hidden_dim = read_u32(in, path);
  dims.edge_dim = read_u32(in, path);
  dims.edge_input_dim = read_u32(in, path);
  dims.layers = read_u32(in, path);
  dims.head_hidden = read_u32(in, path);
  dims.classes = read_u32(in, path);
  dims.n_regions = read_u32(in, path);

  Checkpoint checkpoint;
  const double alpha = read_f64(in, path);
  const double beta = read_f64(in, path);
  checkpoint.tau = read_f64(in, path);
  checkpoint.params = ModelParams::zeros(dims, alpha, beta);
  for (Matrix* tensor : param_tensors(checkpoint.params)) {
    for (double& v : tensor->data) v = read_f64(in, path);
  }
  return checkpoint;
}

std::string explanation_to_json(const std::string& study_id,
                                const GraphView& graph,
                                const Explanation& explanation) {
  json j;
  j["study_id"] = study_id;
  j["class"] = disease_name(static_cast<Disease>(explanation.class_id));
  j["top_node"] =
      region_name(static_cast<Region>(graph.region_ids[static_cast<std::size_t>(
          explanation.top_node)]));

  json nodes = json::array();
  for (std::size_t k = 0; k < graph.region_ids.size(); ++k) {
    json node;
    node["name"] = region_name(static_cast<Region>(graph.region_ids[k]));
    node["score"] = explanation.combined_node_scores[k];
    node["normalized"] = explanation.combined_node_normalized[k];
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);

  json edges = json::array();
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    for (const EdgeContribution& edge : explanation.edge_scores[r]) {
      json item;
      item["relation"] = relation_name(static_cast<Relation>(r));
      item["i"] = edge.from;
      item["j"] = edge.to;
      item["score"] = edge.score;
      item["normalized"] = edge.normalized;
      edges.push_back(std::move(item));
    }
  }
  j["edges"] = std::move(edges);
  return j.dump(2) + "\n";
}

}  // namespace cxr
