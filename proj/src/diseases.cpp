#include "cxr/diseases.hpp"

#include "cxr/text.hpp"

namespace cxr {

const std::array<std::string_view, kNumDiseases>& disease_names() {
  static const std::array<std::string_view, kNumDiseases> names = {
      "Atelectasis",
      "Blunting of costophrenic angle",
      "Calcification",
      "Cardiomegaly",
      "Consolidation",
      "Edema",
      "Emphysema",
      "Fracture",
      "Granuloma",
      "Hernia",
      "Lung Opacity",
      "Pleural Effusion",
      "Pleural Thickening",
      "Pneumonia",
      "Pneumothorax",
      "Scoliosis",
      "Tortuosity of the thoracic aorta",
      "Vascular congestion",
  };
  return names;
}

std::string_view disease_name(Disease d) {
  return disease_names()[static_cast<std::size_t>(d)];
}

std::optional<Disease> parse_disease(std::string_view name) {
  const std::string key = normalize_text(std::string(name));
  for (std::size_t i = 0; i < kNumDiseases; ++i) {
    if (normalize_text(std::string(disease_names()[i])) == key) {
      return static_cast<Disease>(i);
    }
  }
  return std::nullopt;
}

}  // namespace cxr
