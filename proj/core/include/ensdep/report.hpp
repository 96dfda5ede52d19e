#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ensdep/ensemble.hpp"

namespace ensdep {

struct MethodCurve {
  FusionMethod method = FusionMethod::average_probabilities;
  std::vector<CurvePoint> points;
};

/// CSV with header method,M,class,f1_mean,f1_std; one row per method, M
/// and class.
std::string curve_csv(std::span<const MethodCurve> curves);

/// Two panels (depressed, non-depressed), one line per method with a
/// shaded +-1 std band. Fixed 800x500 viewBox.
std::string curve_svg(std::span<const MethodCurve> curves);

}  // namespace ensdep
