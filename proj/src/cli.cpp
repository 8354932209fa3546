#include "cxr/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cxr/corpus.hpp"
#include "cxr/explainer.hpp"
#include "cxr/io.hpp"
#include "cxr/pipeline.hpp"
#include "cxr/report_parser.hpp"
#include "cxr/synth.hpp"

namespace cxr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRules = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDiverged = 4;

std::string hex_checksum(uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.10g", v);
  return buffer;
}

// Tracks files written to the output directory; a command that fails before
// commit() leaves nothing half-written behind.
struct Outputs {
  fs::path dir;
  std::vector<fs::path> written;
  bool committed = false;

  explicit Outputs(const std::string& out) : dir(out) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + out);
  }

  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;

  ~Outputs() {
    if (committed) return;
    for (const fs::path& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  std::string path(const std::string& name) {
    written.push_back(dir / name);
    return (dir / name).string();
  }

  void commit() { committed = true; }
};

void write_manifest(Outputs& outs, json manifest) {
  manifest["tool_version"] = std::string(kToolVersion);
  write_text_file(outs.path("manifest.json"), manifest.dump(2) + "\n");
}

RuleSet rules_from_flag(const std::string& rules_path) {
  return rules_path.empty() ? builtin_rules() : load_rules_file(rules_path);
}

KnowledgeGraphConfig kg_from_flag(const std::string& kg_path) {
  return kg_path.empty() ? builtin_knowledge_graph()
                         : load_knowledge_graph_file(kg_path);
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream stream(csv);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) grid.push_back(std::stod(item));
  }
  if (grid.empty()) throw std::invalid_argument("empty grid '" + csv + "'");
  return grid;
}

struct DataDir {
  std::vector<SoftLabelVector> labels;
  std::vector<RegionRecord> regions;
  Matrix features;
  DatasetSplit split;
};

DataDir load_data_dir(const std::string& dir) {
  const fs::path base(dir);
  DataDir data;
  data.labels = read_labels_jsonl((base / "labels.jsonl").string());
  data.regions = read_regions_jsonl((base / "regions.jsonl").string());
  data.features = read_feature_table((base / "features.rgnf").string());
  data.split = read_split_json((base / "split.json").string());
  return data;
}

// --- label -------------------------------------------------------------

struct LabelArgs {
  std::string reports;
  std::string rules;
  std::string out;
};

int cmd_label(const LabelArgs& args) {
  const RuleSet rules = rules_from_flag(args.rules);
  const std::vector<ReportRecord> reports = read_reports(args.reports);

  std::vector<SoftLabelVector> labels;
  std::size_t skipped = 0;
  for (const ReportRecord& record : reports) {
    try {
      const RadiologyReport parsed = parse_report(record.text, record.study_id);
      labels.push_back(extract_labels(parsed, rules));
    } catch (const EmptyReportError&) {
      std::cerr << "warning: skipping empty report " << record.study_id << "\n";
      ++skipped;
    }
  }

  Outputs outs(args.out);
  write_labels_jsonl(outs.path("labels.jsonl"), labels);
  json manifest;
  manifest["command"] = "label";
  manifest["inputs"] = {{"reports", args.reports},
                        {"rules", args.rules.empty() ? "<builtin>" : args.rules}};
  manifest["outputs"] = {{"labels", "labels.jsonl"}};
  manifest["rules_checksum"] = hex_checksum(rules.checksum());
  write_manifest(outs, manifest);
  outs.commit();

  std::cout << "wrote " << labels.size() << " label records";
  if (skipped > 0) std::cout << " (" << skipped << " empty reports skipped)";
  std::cout << "\n";
  return kExitOk;
}

// --- stats -------------------------------------------------------------

struct StatsArgs {
  std::string labels;
  double t_pos = 1.0;
  std::string out;
};

int cmd_stats(const StatsArgs& args) {
  const std::vector<SoftLabelVector> labels = read_labels_jsonl(args.labels);
  const UncertaintyDistribution dist = build_distribution(labels);
  const CooccurrenceMatrix co = build_cooccurrence(labels, args.t_pos);

  Outputs outs(args.out);
  write_text_file(outs.path("distribution.csv"), distribution_to_csv(dist));
  write_text_file(outs.path("cooccurrence.csv"), cooccurrence_to_csv(co));
  json manifest;
  manifest["command"] = "stats";
  manifest["inputs"] = {{"labels", args.labels}};
  manifest["params"] = {{"t_pos", args.t_pos}};
  manifest["outputs"] = {{"distribution", "distribution.csv"},
                         {"cooccurrence", "cooccurrence.csv"}};
  write_manifest(outs, manifest);
  outs.commit();
  std::cout << "wrote distribution.csv and cooccurrence.csv for "
            << labels.size() << " studies\n";
  return kExitOk;
}

// --- split -------------------------------------------------------------

struct SplitArgs {
  std::string labels;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_split(const SplitArgs& args) {
  const std::vector<SoftLabelVector> labels = read_labels_jsonl(args.labels);
  const DatasetSplit split = split_dataset(labels, args.seed);
  Outputs outs(args.out);
  write_split_json(outs.path("split.json"), split);
  json manifest;
  manifest["command"] = "split";
  manifest["seed"] = args.seed;
  manifest["inputs"] = {{"labels", args.labels}};
  manifest["outputs"] = {{"split", "split.json"}};
  write_manifest(outs, manifest);
  outs.commit();
  std::cout << "split " << labels.size() << " studies into " << split.train.size()
            << "/" << split.val.size() << "/" << split.test.size() << "\n";
  return kExitOk;
}

// --- synth -------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t studies = 2000;
  std::uint64_t seed = 1;
  std::size_t feature_dim = 16;
  double signal = 5.0;
  double noise = 0.25;
  double certain_fraction = 0.55;
  std::string rules;
};

int cmd_synth(const SynthArgs& args) {
  SynthConfig config;
  config.n_studies = args.studies;
  config.seed = args.seed;
  config.feature_dim = args.feature_dim;
  config.signal = args.signal;
  config.noise = args.noise;
  config.certain_fraction = args.certain_fraction;
  const SynthCorpus corpus = generate_synth_corpus(config);

  const RuleSet rules = rules_from_flag(args.rules);
  std::vector<SoftLabelVector> labels;
  for (const ReportRecord& record : corpus.reports) {
    labels.push_back(
        extract_labels(parse_report(record.text, record.study_id), rules));
  }
  const DatasetSplit split = split_dataset(labels, args.seed);

  Outputs outs(args.out);
  write_reports_jsonl(outs.path("reports.jsonl"), corpus.reports);
  write_regions_jsonl(outs.path("regions.jsonl"), corpus.regions);
  write_feature_table(outs.path("features.rgnf"), corpus.feature_table);
  write_labels_jsonl(outs.path("labels.jsonl"), labels);
  write_split_json(outs.path("split.json"), split);

  json manifest;
  manifest["command"] = "synth";
  manifest["seed"] = args.seed;
  manifest["params"] = {{"studies", args.studies},
                        {"feature_dim", args.feature_dim},
                        {"signal", args.signal},
                        {"noise", args.noise},
                        {"certain_fraction", args.certain_fraction}};
  manifest["rules_checksum"] = hex_checksum(rules.checksum());
  manifest["outputs"] = {{"reports", "reports.jsonl"},
                         {"regions", "regions.jsonl"},
                         {"features", "features.rgnf"},
                         {"labels", "labels.jsonl"},
                         {"split", "split.json"}};
  write_manifest(outs, manifest);
  outs.commit();
  std::cout << "generated " << corpus.reports.size() << " synthetic studies\n";
  return kExitOk;
}

// --- train -------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string kg;
  std::string loss = "expert";
  std::string optimizer = "adam";
  std::string semantic = "phase1";
  TrainConfig config;
};

TrainConfig resolve_train_config(const TrainArgs& args) {
  TrainConfig config = args.config;
  if (args.loss == "hard") {
    config.loss_mode = LossMode::Hard;
  } else if (args.loss == "expert") {
    config.loss_mode = LossMode::ExpertSoft;
  } else if (args.loss == "expert-literal") {
    config.loss_mode = LossMode::ExpertSoft;
    config.eq_literal = true;
  } else {
    throw std::invalid_argument("unknown loss '" + args.loss + "'");
  }
  if (args.optimizer == "adam") {
    config.optimizer = Optimizer::Adam;
  } else if (args.optimizer == "sgd") {
    config.optimizer = Optimizer::SgdMomentum;
  } else {
    throw std::invalid_argument("unknown optimizer '" + args.optimizer + "'");
  }
  return config;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& history) {
  std::string csv = "epoch,train_loss,val_mean_auc,top5,top10\n";
  for (const EpochMetrics& row : history) {
    csv += std::to_string(row.epoch) + ',' + format_double(row.train_loss) + ',' +
           format_double(row.val_mean_auc) + ',' + format_double(row.top5) +
           ',' + format_double(row.top10) + '\n';
  }
  return csv;
}

int cmd_train(const TrainArgs& args) {
  const DataDir data = load_data_dir(args.data);
  const KnowledgeGraphConfig kg = kg_from_flag(args.kg);
  const TrainConfig config = resolve_train_config(args);

  AssembledDataset dataset =
      assemble_dataset(data.labels, data.regions, data.features, data.split,
                       config.tau, kg);
  TrainResult result =
      train_model(dataset.train, dataset.val, config, dataset.canonical);
  std::vector<EpochMetrics> history = result.history;

  if (args.semantic == "phase2") {
    AssembledDataset phase2 = assemble_dataset_phase2(
        data.labels, data.regions, data.features, data.split, config.tau, kg,
        result.params);
    result = train_model(phase2.train, phase2.val, config, phase2.canonical);
    history.insert(history.end(), result.history.begin(), result.history.end());
  } else if (args.semantic != "phase1") {
    throw std::invalid_argument("unknown semantic mode '" + args.semantic + "'");
  }

  Outputs outs(args.out);
  write_checkpoint(outs.path("checkpoint.mrgc"), result.params, config.tau);
  write_text_file(outs.path("metrics.csv"), metrics_to_csv(history));

  json manifest;
  manifest["command"] = "train";
  manifest["seed"] = config.seed;
  manifest["inputs"] = {{"data", args.data},
                        {"kg", args.kg.empty() ? "<builtin>" : args.kg}};
  manifest["params"] = {{"loss", args.loss},
                        {"optimizer", args.optimizer},
                        {"semantic", args.semantic},
                        {"learning_rate", config.learning_rate},
                        {"momentum", config.momentum},
                        {"batch_size", config.batch_size},
                        {"epochs", config.epochs},
                        {"alpha", config.alpha},
                        {"beta", config.beta},
                        {"tau", config.tau},
                        {"hidden_dim", config.hidden_dim},
                        {"edge_dim", config.edge_dim},
                        {"layers", config.layers},
                        {"head_hidden", config.head_hidden}};
  manifest["outputs"] = {{"checkpoint", "checkpoint.mrgc"},
                         {"metrics", "metrics.csv"}};
  write_manifest(outs, manifest);
  outs.commit();

  std::cout << "best epoch " << result.best_epoch << ", val mean AUC "
            << format_double(result.best_val_auc) << "\n";
  return kExitOk;
}

// --- eval --------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string split_name = "val";
  std::string unmentioned = "negative";
  std::string kg;
  std::string out;
  int threads = 0;
};

int cmd_eval(const EvalArgs& args) {
  const DataDir data = load_data_dir(args.data);
  const KnowledgeGraphConfig kg = kg_from_flag(args.kg);
  const Checkpoint checkpoint = read_checkpoint(args.checkpoint);

  const AssembledDataset dataset =
      assemble_dataset(data.labels, data.regions, data.features, data.split,
                       checkpoint.tau, kg);
  const std::vector<TrainStudy>* studies = nullptr;
  if (args.split_name == "train") {
    studies = &dataset.train;
  } else if (args.split_name == "val") {
    studies = &dataset.val;
  } else if (args.split_name == "test") {
    studies = &dataset.test;
  } else {
    throw std::invalid_argument("unknown split '" + args.split_name + "'");
  }

  EvalOptions options;
  if (args.unmentioned == "exclude") {
    options.exclude_unmentioned = true;
  } else if (args.unmentioned != "negative") {
    throw std::invalid_argument("unknown unmentioned policy '" +
                                args.unmentioned + "'");
  }
  options.threads = args.threads;
  const EvalResult result = evaluate(checkpoint.params, *studies, options);

  Outputs outs(args.out);
  std::string csv = "name,auc\n";
  for (std::size_t c = 0; c < result.auc.per_class.size(); ++c) {
    csv += std::string(disease_name(static_cast<Disease>(c))) + ',';
    csv += result.auc.per_class[c] ? format_double(*result.auc.per_class[c])
                                   : std::string("excluded");
    csv += '\n';
  }
  write_text_file(outs.path("eval_per_class.csv"), csv);
  write_text_file(outs.path("eval_summary.csv"),
                  "split,n_studies,mean_auc,top5,top10\n" + args.split_name + ',' +
                      std::to_string(result.n_studies) + ',' +
                      format_double(result.auc.mean) + ',' +
                      format_double(result.top5) + ',' +
                      format_double(result.top10) + '\n');

  json manifest;
  manifest["command"] = "eval";
  manifest["inputs"] = {{"data", args.data},
                        {"checkpoint", args.checkpoint},
                        {"kg", args.kg.empty() ? "<builtin>" : args.kg}};
  manifest["params"] = {{"split", args.split_name},
                        {"unmentioned", args.unmentioned},
                        {"tau", checkpoint.tau}};
  manifest["outputs"] = {{"summary", "eval_summary.csv"},
                         {"per_class", "eval_per_class.csv"}};
  write_manifest(outs, manifest);
  outs.commit();

  std::cout << args.split_name << " mean AUC " << format_double(result.auc.mean)
            << ", top-5 " << format_double(result.top5) << ", top-10 "
            << format_double(result.top10) << " (" << result.n_studies
            << " studies)\n";
  return kExitOk;
}

// --- sweep -------------------------------------------------------------

struct SweepArgs {
  std::string data;
  std::string out;
  std::string kg;
  std::string mode = "alphabeta";
  std::string alpha_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  std::string beta_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  std::string tau_grid = "0.2,0.3,0.4,0.5,0.6";
  TrainArgs train;
};

int cmd_sweep(const SweepArgs& args) {
  const DataDir data = load_data_dir(args.data);
  const KnowledgeGraphConfig kg = kg_from_flag(args.kg);
  const TrainConfig config = resolve_train_config(args.train);

  std::vector<SweepCell> cells;
  std::string csv;
  if (args.mode == "alphabeta") {
    const AssembledDataset dataset =
        assemble_dataset(data.labels, data.regions, data.features, data.split,
                         config.tau, kg);
    cells = sweep_fusion(dataset.train, dataset.val, config, dataset.canonical,
                         parse_grid(args.alpha_grid), parse_grid(args.beta_grid));
    csv = "alpha,beta,mean_auc\n";
    for (const SweepCell& cell : cells) {
      csv += format_double(cell.alpha) + "," + format_double(cell.beta) + "," +
             format_double(cell.mean_auc) + "\n";
    }
  } else if (args.mode == "tau") {
    cells = sweep_tau(parse_grid(args.tau_grid), [&](double tau) {
      const AssembledDataset dataset = assemble_dataset(
          data.labels, data.regions, data.features, data.split, tau, kg);
      TrainConfig cell_config = config;
      cell_config.tau = tau;
      return train_model(dataset.train, dataset.val, cell_config,
                         dataset.canonical)
          .best_val_auc;
    });
    csv = "tau,mean_auc\n";
    for (const SweepCell& cell : cells) {
      csv += format_double(cell.tau) + "," + format_double(cell.mean_auc) + "\n";
    }
  } else {
    throw std::invalid_argument("unknown sweep mode '" + args.mode + "'");
  }

  Outputs outs(args.out);
  write_text_file(outs.path("sweep.csv"), csv);
  json manifest;
  manifest["command"] = "sweep";
  manifest["seed"] = config.seed;
  manifest["inputs"] = {{"data", args.data}};
  manifest["params"] = {{"mode", args.mode},
                        {"alpha_grid", args.alpha_grid},
                        {"beta_grid", args.beta_grid},
                        {"tau_grid", args.tau_grid},
                        {"epochs", config.epochs}};
  manifest["outputs"] = {{"sweep", "sweep.csv"}};
  write_manifest(outs, manifest);
  outs.commit();
  std::cout << "swept " << cells.size() << " cells\n";
  return kExitOk;
}

// --- explain -----------------------------------------------------------

struct ExplainArgs {
  std::string data;
  std::string checkpoint;
  std::string study;
  std::string disease;
  std::string kg;
  std::string out;
  double edge_threshold = 0.5;
  double node_threshold = 0.5;
};

int cmd_explain(const ExplainArgs& args) {
  const DataDir data = load_data_dir(args.data);
  const KnowledgeGraphConfig kg = kg_from_flag(args.kg);
  const Checkpoint checkpoint = read_checkpoint(args.checkpoint);

  const auto disease = parse_disease(args.disease);
  if (!disease) {
    throw std::invalid_argument("unknown disease '" + args.disease + "'");
  }

  DatasetSplit single;
  single.train = {args.study};
  const AssembledDataset dataset =
      assemble_dataset(data.labels, data.regions, data.features, single,
                       checkpoint.tau, kg);
  const TrainStudy& study = dataset.train.at(0);

  const Prediction pred = forward(study.view, checkpoint.params);
  const Explanation explanation =
      attribute(pred, study.view, checkpoint.params, static_cast<int>(*disease));

  OverlayOptions overlay;
  overlay.edge_threshold = args.edge_threshold;
  overlay.node_threshold = args.node_threshold;

  Outputs outs(args.out);
  write_text_file(outs.path("explanation.json"),
                  explanation_to_json(args.study, study.view, explanation));
  write_text_file(outs.path("overlay.svg"),
                  render_overlay(study.view, explanation, overlay));

  json manifest;
  manifest["command"] = "explain";
  manifest["inputs"] = {{"data", args.data}, {"checkpoint", args.checkpoint}};
  manifest["params"] = {{"study", args.study},
                        {"class", args.disease},
                        {"edge_threshold", args.edge_threshold},
                        {"node_threshold", args.node_threshold}};
  manifest["outputs"] = {{"explanation", "explanation.json"},
                         {"overlay", "overlay.svg"}};
  write_manifest(outs, manifest);
  outs.commit();

  std::cout << "top node: "
            << region_name(static_cast<Region>(
                   study.view.region_ids[static_cast<std::size_t>(
                       explanation.top_node)]))
            << "\n";
  return kExitOk;
}

void add_train_flags(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--loss", args.loss, "hard | expert | expert-literal");
  cmd->add_option("--optimizer", args.optimizer, "adam | sgd");
  cmd->add_option("--seed", args.config.seed, "random seed");
  cmd->add_option("--lr", args.config.learning_rate, "learning rate");
  cmd->add_option("--momentum", args.config.momentum, "momentum / Adam beta1");
  cmd->add_option("--batch", args.config.batch_size, "batch size");
  cmd->add_option("--epochs", args.config.epochs, "training epochs");
  cmd->add_option("--alpha", args.config.alpha, "spatial fusion weight");
  cmd->add_option("--beta", args.config.beta, "semantic fusion weight");
  cmd->add_option("--tau", args.config.tau, "spatial IOU threshold");
  cmd->add_option("--hidden", args.config.hidden_dim, "conv feature width");
  cmd->add_option("--edge-dim", args.config.edge_dim, "edge feature width");
  cmd->add_option("--layers", args.config.layers, "conv layers");
  cmd->add_option("--head-hidden", args.config.head_hidden,
                  "head hidden width (0 = linear)");
  cmd->add_option("--threads", args.config.threads, "worker threads (0 = auto)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"severity/uncertainty-aware report labeling and anatomical "
               "graph classification"};
  app.require_subcommand(1);

  LabelArgs label_args;
  CLI::App* label = app.add_subcommand(
      "label", "extract soft disease labels from report text");
  label->add_option("--reports", label_args.reports,
                    "reports JSONL or directory of .txt files")
      ->required();
  label->add_option("--rules", label_args.rules, "rules file (default builtin)");
  label->add_option("--out", label_args.out, "output directory")->required();

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand(
      "stats", "uncertainty distribution and co-occurrence tables");
  stats->add_option("--labels", stats_args.labels, "labels JSONL")->required();
  stats->add_option("--t-pos", stats_args.t_pos,
                    "positive threshold for co-occurrence");
  stats->add_option("--out", stats_args.out, "output directory")->required();

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand("split", "deterministic 8:1:1 split");
  split->add_option("--labels", split_args.labels, "labels JSONL")->required();
  split->add_option("--seed", split_args.seed, "shuffle seed");
  split->add_option("--out", split_args.out, "output directory")->required();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic planted-signal corpus");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--studies", synth_args.studies, "number of studies");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--feature-dim", synth_args.feature_dim, "feature width");
  synth->add_option("--signal", synth_args.signal, "signal strength");
  synth->add_option("--noise", synth_args.noise, "noise level");
  synth->add_option("--certain-fraction", synth_args.certain_fraction,
                    "fraction of certain-only studies");
  synth->add_option("--rules", synth_args.rules, "rules file (default builtin)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train the graph network");
  train->add_option("--data", train_args.data, "dataset directory")->required();
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--kg", train_args.kg, "knowledge graph file (default builtin)");
  train->add_option("--semantic", train_args.semantic, "phase1 | phase2");
  add_train_flags(train, train_args);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--data", eval_args.data, "dataset directory")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")
      ->required();
  eval->add_option("--split", eval_args.split_name, "train | val | test");
  eval->add_option("--unmentioned", eval_args.unmentioned,
                   "negative | exclude (0.1 labels in AUC)");
  eval->add_option("--kg", eval_args.kg, "knowledge graph file");
  eval->add_option("--threads", eval_args.threads, "worker threads");
  eval->add_option("--out", eval_args.out, "output directory")->required();

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter sweeps");
  sweep->add_option("--data", sweep_args.data, "dataset directory")->required();
  sweep->add_option("--out", sweep_args.out, "output directory")->required();
  sweep->add_option("--kg", sweep_args.kg, "knowledge graph file");
  sweep->add_option("--mode", sweep_args.mode, "alphabeta | tau");
  sweep->add_option("--alpha-grid", sweep_args.alpha_grid, "comma list");
  sweep->add_option("--beta-grid", sweep_args.beta_grid, "comma list");
  sweep->add_option("--tau-grid", sweep_args.tau_grid, "comma list");
  add_train_flags(sweep, sweep_args.train);

  ExplainArgs explain_args;
  CLI::App* explain = app.add_subcommand(
      "explain", "node/edge attribution for one study and class");
  explain->add_option("--data", explain_args.data, "dataset directory")
      ->required();
  explain->add_option("--checkpoint", explain_args.checkpoint, "checkpoint file")
      ->required();
  explain->add_option("--study", explain_args.study, "study id")->required();
  explain->add_option("--class", explain_args.disease, "disease name")
      ->required();
  explain->add_option("--kg", explain_args.kg, "knowledge graph file");
  explain->add_option("--edge-threshold", explain_args.edge_threshold,
                      "normalized edge importance cutoff");
  explain->add_option("--node-threshold", explain_args.node_threshold,
                      "normalized node importance cutoff");
  explain->add_option("--out", explain_args.out, "output directory")->required();

  std::vector<const char*> argv;
  argv.push_back("cxrgraph");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (label->parsed()) return cmd_label(label_args);
    if (stats->parsed()) return cmd_stats(stats_args);
    if (split->parsed()) return cmd_split(split_args);
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (sweep->parsed()) {
      sweep_args.train.data = sweep_args.data;
      sweep_args.train.kg = sweep_args.kg;
      return cmd_sweep(sweep_args);
    }
    if (explain->parsed()) return cmd_explain(explain_args);
  } catch (const RuleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRules;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace cxr
