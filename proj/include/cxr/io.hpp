#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxr/corpus.hpp"
#include "cxr/explainer.hpp"
#include "cxr/label_extractor.hpp"
#include "cxr/model.hpp"

namespace cxr {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// --- Reports ---------------------------------------------------------------
// Either a JSONL file ({"study_id", "text"} per line) or a directory of
// plain-text files, one report per file, study id = file stem.
struct ReportRecord {
  std::string study_id;
  std::string text;
};

std::vector<ReportRecord> read_reports(const std::string& path);
void write_reports_jsonl(const std::string& path,
                         const std::vector<ReportRecord>& reports);

// --- Labels ----------------------------------------------------------------
// One record per study:
//   {"study_id": "...", "labels": [{"disease", "probability", "severity"?}]}
void write_labels_jsonl(const std::string& path,
                        const std::vector<SoftLabelVector>& labels);
std::vector<SoftLabelVector> read_labels_jsonl(const std::string& path);

// --- Regions + features ----------------------------------------------------
// Regions JSONL per study:
//   {"study_id", "regions": [{"name", "bbox": [x,y,w,h], "feature_file_offset"}]}
// feature_file_offset is the row index into the shared feature table.
struct RegionEntry {
  Region region = Region::RightLung;
  BBox bbox;
  std::uint64_t feature_row = 0;
};

struct RegionRecord {
  std::string study_id;
  std::vector<RegionEntry> regions;
};

void write_regions_jsonl(const std::string& path,
                         const std::vector<RegionRecord>& records);
std::vector<RegionRecord> read_regions_jsonl(const std::string& path);

// Feature table: magic "RGNF", u32 row count, u32 feature width, then
// row-major float32, little-endian.
void write_feature_table(const std::string& path, const Matrix& rows);
Matrix read_feature_table(const std::string& path);

// --- Splits ----------------------------------------------------------------
void write_split_json(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split_json(const std::string& path);

// --- Checkpoints -----------------------------------------------------------
// Magic "MRGC", u32 version, u32 dims (input, hidden, edge, edge_input,
// layers, head_hidden, classes, n_regions), f64 alpha/beta/tau, then every
// tensor in declared parameter order as f64, little-endian.
struct Checkpoint {
  ModelParams params;
  double tau = 0.5;
};

void write_checkpoint(const std::string& path, const ModelParams& params,
                      double tau);
Checkpoint read_checkpoint(const std::string& path);

// --- Explanations ----------------------------------------------------------
std::string explanation_to_json(const std::string& study_id,
                                const GraphView& graph,
                                const Explanation& explanation);

}  // namespace cxr
