#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace cxr {

// The 18 disease labels, in canonical order. This order is the class order
// everywhere: label vectors, model outputs, CSV columns, tie-breaking.
enum class Disease : int {
  Atelectasis = 0,
  BluntingOfCostophrenicAngle,
  Calcification,
  Cardiomegaly,
  Consolidation,
  Edema,
  Emphysema,
  Fracture,
  Granuloma,
  Hernia,
  LungOpacity,
  PleuralEffusion,
  PleuralThickening,
  Pneumonia,
  Pneumothorax,
  Scoliosis,
  TortuosityOfThoracicAorta,
  VascularCongestion,
};

inline constexpr std::size_t kNumDiseases = 18;

const std::array<std::string_view, kNumDiseases>& disease_names();

std::string_view disease_name(Disease d);

// Case-insensitive lookup by display name; nullopt for unknown names.
std::optional<Disease> parse_disease(std::string_view name);

}  // namespace cxr
