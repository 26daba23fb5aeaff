#include "svg.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace lab {

namespace {
constexpr double kSize = 480.0, kMargin = 40.0;
}

SvgPlot::SvgPlot(double xmin, double xmax, double ymin, double ymax, std::string title)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), title_(std::move(title)) {
  // Equal scaling on both axes.
  const double span = std::max(xmax_ - xmin_, ymax_ - ymin_);
  const double cx = 0.5 * (xmin_ + xmax_), cy = 0.5 * (ymin_ + ymax_);
  xmin_ = cx - 0.5 * span;
  xmax_ = cx + 0.5 * span;
  ymin_ = cy - 0.5 * span;
  ymax_ = cy + 0.5 * span;
}

double SvgPlot::px(double x) const {
  return kMargin + (x - xmin_) / (xmax_ - xmin_) * (kSize - 2 * kMargin);
}
double SvgPlot::py(double y) const {
  return kSize - kMargin - (y - ymin_) / (ymax_ - ymin_) * (kSize - 2 * kMargin);
}

void SvgPlot::polyline(const std::vector<double>& x, const std::vector<double>& y,
                       const std::string& colour, bool closed) {
  std::string pts;
  for (std::size_t i = 0; i < x.size(); ++i) pts += fmt::format("{:.2f},{:.2f} ", px(x[i]), py(y[i]));
  body_ += fmt::format("<{} points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>\n",
                       closed ? "polygon" : "polyline", pts, colour);
}

void SvgPlot::points(const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& colour, bool hollow) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    body_ += fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
        px(x[i]), py(y[i]), hollow ? "none" : colour, colour);
  }
}

void SvgPlot::legend(const std::string& label, const std::string& colour) {
  legend_.emplace_back(label, colour);
}

std::string SvgPlot::str() const {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kSize);
  s += fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"none\" stroke=\"#999\"/>\n",
                   kMargin, kSize - 2 * kMargin);
  if (!title_.empty()) {
    s += fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                     kMargin, title_);
  }
  s += body_;
  for (std::size_t i = 0; i < legend_.size(); ++i) {
    const double y = kSize - 12 - 16.0 * (legend_.size() - 1 - i);
    s += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n", kMargin + 4, y - 4,
                     legend_[i].second);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                     kMargin + 14, y, legend_[i].first);
  }
  s += "</svg>\n";
  return s;
}

}  // namespace lab
