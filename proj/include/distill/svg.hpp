#pragma once

#include <string>
#include <vector>

namespace distill {

/// Minimal deterministic SVG line plot, enough for trace and curve reports.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(std::string name, std::vector<double> x, std::vector<double> y);
    void save(const std::string& path) const;

  private:
    struct Series {
        std::string name;
        std::vector<double> x;
        std::vector<double> y;
    };

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<Series> series_;
};

}  // namespace distill
