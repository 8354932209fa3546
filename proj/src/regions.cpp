#include "cxr/regions.hpp"

#include "cxr/text.hpp"

namespace cxr {

const std::array<std::string_view, kNumRegions>& region_names() {
  static const std::array<std::string_view, kNumRegions> names = {
      "Right lung",
      "Right upper lung",
      "Right mid lung",
      "Right lower lung",
      "Hilar of right lung",
      "Apical of right lung",
      "Right costophrenic sulcus",
      "Right hemidiaphragm",
      "Left lung",
      "Left upper lung",
      "Left mid lung",
      "Left lower lung",
      "Hilar of left lung",
      "Apical of left lung",
      "Left costophrenic sulcus",
      "Left hemidiaphragm",
      "Cardiac",
      "Cavoatrial",
      "Descending aorta",
      "Structure of carina",
      "Main Bronchus",
      "Right clavicle",
      "Left clavicle",
      "Mediastinum",
      "Aortic arch structure",
      "Superior vena cava structure",
  };
  return names;
}

std::string_view region_name(Region r) {
  return region_names()[static_cast<std::size_t>(r)];
}

std::optional<Region> parse_region(std::string_view name) {
  const std::string key = normalize_text(std::string(name));
  for (std::size_t i = 0; i < kNumRegions; ++i) {
    if (normalize_text(std::string(region_names()[i])) == key) {
      return static_cast<Region>(i);
    }
  }
  return std::nullopt;
}

const std::array<BBox, kNumRegions>& default_region_layout() {
  // Hand-placed plausible boxes. Lung zones overlap their parent lung with
  // IOU just over 0.5 and neighboring zones with IOU ~0.36, so spatial
  // adjacency thins out gradually over the 0.2..0.6 threshold range.
  static const std::array<BBox, kNumRegions> layout = {{
      {0.07, 0.16, 0.37, 0.58},  // Right lung
      {0.07, 0.16, 0.37, 0.30},  // Right upper lung
      {0.07, 0.30, 0.37, 0.30},  // Right mid lung
      {0.07, 0.44, 0.37, 0.30},  // Right lower lung
      {0.30, 0.36, 0.15, 0.18},  // Hilar of right lung
      {0.10, 0.12, 0.30, 0.14},  // Apical of right lung
      {0.07, 0.66, 0.16, 0.12},  // Right costophrenic sulcus
      {0.07, 0.62, 0.35, 0.14},  // Right hemidiaphragm
      {0.56, 0.16, 0.37, 0.58},  // Left lung
      {0.56, 0.16, 0.37, 0.30},  // Left upper lung
      {0.56, 0.30, 0.37, 0.30},  // Left mid lung
      {0.56, 0.44, 0.37, 0.30},  // Left lower lung
      {0.55, 0.36, 0.15, 0.18},  // Hilar of left lung
      {0.60, 0.12, 0.30, 0.14},  // Apical of left lung
      {0.77, 0.66, 0.16, 0.12},  // Left costophrenic sulcus
      {0.58, 0.62, 0.35, 0.14},  // Left hemidiaphragm
      {0.38, 0.44, 0.26, 0.24},  // Cardiac
      {0.49, 0.50, 0.10, 0.10},  // Cavoatrial
      {0.49, 0.30, 0.08, 0.36},  // Descending aorta
      {0.45, 0.33, 0.10, 0.08},  // Structure of carina
      {0.41, 0.30, 0.18, 0.12},  // Main Bronchus
      {0.05, 0.08, 0.40, 0.07},  // Right clavicle
      {0.55, 0.08, 0.40, 0.07},  // Left clavicle
      {0.39, 0.14, 0.22, 0.52},  // Mediastinum
      {0.43, 0.24, 0.14, 0.10},  // Aortic arch structure
      {0.52, 0.24, 0.08, 0.16},  // Superior vena cava structure
  }};
  return layout;
}

}  // namespace cxr
