#pragma once

#include <string>
#include <vector>

namespace lab {

/// Minimal scatter/line plot writer with a fixed-size canvas.
class SvgPlot {
 public:
  SvgPlot(double xmin, double xmax, double ymin, double ymax, std::string title = {});

  void polyline(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& colour, bool closed = false);
  /// Filled dots, or rings when `hollow`.
  void points(const std::vector<double>& x, const std::vector<double>& y,
              const std::string& colour, bool hollow = false);
  void legend(const std::string& label, const std::string& colour);

  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;

  double xmin_, xmax_, ymin_, ymax_;
  std::string title_;
  std::string body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

}  // namespace lab
