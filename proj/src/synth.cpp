#include "cxr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cxr/regions.hpp"

namespace cxr {

namespace {

double gaussian(std::mt19937_64& gen) {
  const double u1 = std::max(uniform01(gen), 1e-300);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// One unambiguous keyword per disease for sentence assembly.
const char* canonical_keyword(Disease d) {
  switch (d) {
    case Disease::Atelectasis: return "atelectasis";
    case Disease::BluntingOfCostophrenicAngle: return "blunting of costophrenic angle";
    case Disease::Calcification: return "calcification";
    case Disease::Cardiomegaly: return "cardiomegaly";
    case Disease::Consolidation: return "consolidation";
    case Disease::Edema: return "edema";
    case Disease::Emphysema: return "emphysema";
    case Disease::Fracture: return "fracture";
    case Disease::Granuloma: return "granuloma";
    case Disease::Hernia: return "hernia";
    case Disease::LungOpacity: return "opacity";
    case Disease::PleuralEffusion: return "pleural effusion";
    case Disease::PleuralThickening: return "pleural thickening";
    case Disease::Pneumonia: return "pneumonia";
    case Disease::Pneumothorax: return "pneumothorax";
    case Disease::Scoliosis: return "scoliosis";
    case Disease::TortuosityOfThoracicAorta: return "tortuosity of the thoracic aorta";
    case Disease::VascularCongestion: return "vascular congestion";
  }
  return "";
}

enum class Wording { Positive, Rank2, Rank3, Rank4, Negated, Unmentioned };

double wording_probability(Wording w) {
  switch (w) {
    case Wording::Positive: return 1.0;
    case Wording::Rank2: return 0.7;
    case Wording::Rank3: return 0.5;
    case Wording::Rank4: return 0.3;
    case Wording::Negated: return 0.0;
    case Wording::Unmentioned: return 0.1;
  }
  return 0.1;
}

Wording draw_wording(std::mt19937_64& gen, bool certain_only) {
  const double u = uniform01(gen);
  if (certain_only) {
    if (u < 0.22) return Wording::Positive;
    if (u < 0.40) return Wording::Negated;
    return Wording::Unmentioned;
  }
  if (u < 0.12) return Wording::Positive;
  if (u < 0.24) return Wording::Rank2;
  if (u < 0.32) return Wording::Rank3;
  if (u < 0.40) return Wording::Rank4;
  if (u < 0.55) return Wording::Negated;
  return Wording::Unmentioned;
}

std::string make_sentence(Disease d, Wording w, std::optional<Severity> severity,
                          std::mt19937_64& gen) {
  const std::string kw = canonical_keyword(d);
  std::string sev;
  if (severity) sev = std::string(severity_name(*severity)) + " ";
  switch (w) {
    case Wording::Positive:
      return uniform01(gen) < 0.5 ? "there is " + sev + kw + "."
                                  : sev + kw + " is seen.";
    case Wording::Rank2:
      return "likely " + sev + kw + ".";
    case Wording::Rank3:
      return "possible " + sev + kw + ".";
    case Wording::Rank4:
      return uniform01(gen) < 0.5 ? kw + " cannot be excluded."
                                  : kw + " is not excluded.";
    case Wording::Negated:
      return uniform01(gen) < 0.5 ? "no " + kw + "." : "no evidence of " + kw + ".";
    case Wording::Unmentioned:
      return "";
  }
  return "";
}

}  // namespace

Region signal_region(Disease d) {
  switch (d) {
    case Disease::Atelectasis: return Region::RightLowerLung;
    case Disease::BluntingOfCostophrenicAngle: return Region::RightCostophrenicSulcus;
    case Disease::Calcification: return Region::AorticArchStructure;
    case Disease::Cardiomegaly: return Region::Cardiac;
    case Disease::Consolidation: return Region::LeftLowerLung;
    case Disease::Edema: return Region::HilarOfRightLung;
    case Disease::Emphysema: return Region::RightUpperLung;
    case Disease::Fracture: return Region::RightClavicle;
    case Disease::Granuloma: return Region::RightMidLung;
    case Disease::Hernia: return Region::LeftHemidiaphragm;
    case Disease::LungOpacity: return Region::LeftMidLung;
    case Disease::PleuralEffusion: return Region::LeftCostophrenicSulcus;
    case Disease::PleuralThickening: return Region::LeftUpperLung;
    case Disease::Pneumonia: return Region::LeftLung;
    case Disease::Pneumothorax: return Region::ApicalOfRightLung;
    case Disease::Scoliosis: return Region::Mediastinum;
    case Disease::TortuosityOfThoracicAorta: return Region::DescendingAorta;
    case Disease::VascularCongestion: return Region::HilarOfLeftLung;
  }
  return Region::RightLung;
}

SynthCorpus generate_synth_corpus(const SynthConfig& config) {
  std::mt19937_64 gen(config.seed);
  const std::size_t d_in = config.feature_dim;

  // Fixed unit direction per disease.
  std::vector<std::vector<double>> directions(kNumDiseases);
  for (auto& direction : directions) {
    direction.resize(d_in);
    double norm = 0.0;
    for (double& v : direction) {
      v = gaussian(gen);
      norm += v * v;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (double& v : direction) v /= norm;
  }

  SynthCorpus corpus;
  corpus.feature_table = Matrix(config.n_studies * kNumRegions, d_in);

  for (std::size_t s = 0; s < config.n_studies; ++s) {
    char study_id[32];
    std::snprintf(study_id, sizeof study_id, "synth-%05zu", s);
    const bool certain_only = uniform01(gen) < config.certain_fraction;

    SoftLabelVector planted;
    planted.study_id = study_id;
    std::array<bool, kNumDiseases> latent{};
    std::vector<std::string> findings;
    std::vector<std::string> impression;

    for (std::size_t d = 0; d < kNumDiseases; ++d) {
      const auto disease = static_cast<Disease>(d);
      const Wording wording = draw_wording(gen, certain_only);
      const double p = wording_probability(wording);

      // Uncertain wordings are calibrated: the finding is truly present with
      // the written probability. Certain wordings are literal.
      bool present = false;
      if (wording == Wording::Positive) {
        present = true;
      } else if (wording == Wording::Rank2 || wording == Wording::Rank3 ||
                 wording == Wording::Rank4) {
        present = uniform01(gen) < p;
      }
      latent[d] = present;

      std::optional<Severity> severity;
      if (wording == Wording::Positive && uniform01(gen) < 0.5) {
        const double pick = uniform01(gen);
        severity = pick < 1.0 / 3 ? Severity::Mild
                   : pick < 2.0 / 3 ? Severity::Moderate
                                    : Severity::Severe;
      }

      planted[disease].probability = p;
      if (wording != Wording::Unmentioned) planted[disease].severity = severity;

      const std::string sentence = make_sentence(disease, wording, severity, gen);
      if (!sentence.empty()) {
        (uniform01(gen) < 0.25 ? impression : findings).push_back(sentence);
      }
    }

    std::string text = "FINDINGS:";
    if (findings.empty()) findings.push_back("lungs are clear.");
    for (const std::string& sentence : findings) text += " " + sentence;
    if (!impression.empty()) {
      text += " IMPRESSION:";
      for (const std::string& sentence : impression) text += " " + sentence;
    }
    corpus.reports.push_back(ReportRecord{study_id, text});

    // Region boxes: jittered default layout, all regions present.
    RegionRecord record;
    record.study_id = study_id;
    const auto& layout = default_region_layout();
    for (std::size_t r = 0; r < kNumRegions; ++r) {
      BBox box = layout[r];
      box.x = std::clamp(box.x + (2.0 * uniform01(gen) - 1.0) * config.box_jitter,
                         0.0, 0.95);
      box.y = std::clamp(box.y + (2.0 * uniform01(gen) - 1.0) * config.box_jitter,
                         0.0, 0.95);
      box.w = std::clamp(box.w + (2.0 * uniform01(gen) - 1.0) * config.box_jitter,
                         0.01, 1.0 - box.x);
      box.h = std::clamp(box.h + (2.0 * uniform01(gen) - 1.0) * config.box_jitter,
                         0.01, 1.0 - box.y);
      record.regions.push_back(
          RegionEntry{static_cast<Region>(r), box, s * kNumRegions + r});
    }
    corpus.regions.push_back(std::move(record));

    // Features: noise everywhere, plus the latent findings on their regions.
    for (std::size_t r = 0; r < kNumRegions; ++r) {
      double* row = corpus.feature_table.row(s * kNumRegions + r);
      for (std::size_t f = 0; f < d_in; ++f) row[f] = config.noise * gaussian(gen);
    }
    for (std::size_t d = 0; d < kNumDiseases; ++d) {
      if (!latent[d]) continue;
      const auto region_idx = static_cast<std::size_t>(signal_region(static_cast<Disease>(d)));
      double* row = corpus.feature_table.row(s * kNumRegions + region_idx);
      for (std::size_t f = 0; f < d_in; ++f) {
        row[f] += config.signal * directions[d][f];
      }
    }

    corpus.planted_labels.push_back(std::move(planted));
  }
  return corpus;
}

}  // namespace cxr
