#include "ensdep/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace ensdep {

namespace {

constexpr std::array<const char*, 2> kClassNames = {"non_depressed", "depressed"};
constexpr std::array<const char*, 3> kColors = {"#1f77b4", "#d62728", "#2ca02c"};

}  // namespace

std::string curve_csv(std::span<const MethodCurve> curves) {
  std::string out = "method,M,class,f1_mean,f1_std\n";
  char line[160];
  for (const auto& curve : curves) {
    for (const auto& p : curve.points) {
      for (const std::size_t cls : {std::size_t{1}, std::size_t{0}}) {
        std::snprintf(line, sizeof line, "%d,%d,%s,%.6f,%.6f\n", static_cast<int>(curve.method), p.machines,
                      kClassNames[cls], p.f1_mean[cls], p.f1_std[cls]);
        out += line;
      }
    }
  }
  return out;
}

std::string curve_svg(std::span<const MethodCurve> curves) {
  int max_m = 1;
  for (const auto& c : curves)
    for (const auto& p : c.points) max_m = std::max(max_m, p.machines);

  constexpr double kPanelW = 360.0;
  constexpr double kPanelH = 380.0;
  constexpr double kTop = 60.0;
  constexpr std::array<double, 2> kLeft = {50.0, 440.0};
  char buf[256];

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";

  // Panel 0 shows the depressed class, panel 1 the non-depressed class.
  const std::array<std::size_t, 2> panel_class = {1, 0};
  for (std::size_t panel = 0; panel < 2; ++panel) {
    const std::size_t cls = panel_class[panel];
    const double x0 = kLeft[panel];
    auto sx = [&](double m) {
      return max_m == 1 ? x0 + kPanelW / 2 : x0 + (m - 1.0) / (max_m - 1.0) * kPanelW;
    };
    auto sy = [&](double f1) { return kTop + (1.0 - std::clamp(f1, 0.0, 1.0)) * kPanelH; };

    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"#444\"/>\n", x0,
                  kTop, kPanelW, kPanelH);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"40\" text-anchor=\"middle\">F1 (%s)</text>\n",
                  x0 + kPanelW / 2, kClassNames[cls]);
    svg += buf;
    for (const double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n", x0 - 6,
                    sy(tick) + 4, tick);
      svg += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">M (1..%d)</text>\n",
                  x0 + kPanelW / 2, kTop + kPanelH + 25, max_m);
    svg += buf;

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      const auto& pts = curves[ci].points;
      if (pts.empty()) continue;
      const char* color = kColors[ci % kColors.size()];
      std::string band;
      for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(p.machines), sy(p.f1_mean[cls] + p.f1_std[cls]));
        band += buf;
      }
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(it->machines), sy(it->f1_mean[cls] - it->f1_std[cls]));
        band += buf;
      }
      svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
      std::string line;
      for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(p.machines), sy(p.f1_mean[cls]));
        line += buf;
      }
      svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      if (panel == 0) {
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">Method %d</text>\n", 60.0 + 110.0 * ci, 485.0, color,
                      static_cast<int>(curves[ci].method));
        svg += buf;
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ensdep
