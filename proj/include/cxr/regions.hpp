#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace cxr {

// Axis-aligned box in normalized image coordinates, origin top-left.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
};

// The 26 anatomical structures used as graph nodes, in canonical order.
enum class Region : int {
  RightLung = 0,
  RightUpperLung,
  RightMidLung,
  RightLowerLung,
  HilarOfRightLung,
  ApicalOfRightLung,
  RightCostophrenicSulcus,
  RightHemidiaphragm,
  LeftLung,
  LeftUpperLung,
  LeftMidLung,
  LeftLowerLung,
  HilarOfLeftLung,
  ApicalOfLeftLung,
  LeftCostophrenicSulcus,
  LeftHemidiaphragm,
  Cardiac,
  Cavoatrial,
  DescendingAorta,
  StructureOfCarina,
  MainBronchus,
  RightClavicle,
  LeftClavicle,
  Mediastinum,
  AorticArchStructure,
  SuperiorVenaCavaStructure,
};

inline constexpr std::size_t kNumRegions = 26;

const std::array<std::string_view, kNumRegions>& region_names();

std::string_view region_name(Region r);

std::optional<Region> parse_region(std::string_view name);

// Default normalized layout for a frontal chest view (patient right on the
// image left). Used to initialize dependency parameters and by the synthetic
// corpus generator; per-study boxes normally come from a detector upstream.
const std::array<BBox, kNumRegions>& default_region_layout();

}  // namespace cxr
