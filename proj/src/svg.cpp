#include "distill/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "distill/text.hpp"

namespace distill {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string fmt2(double v) {
    double r = std::round(v * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;  // normalize -0
    return fmt_double(r);
}

}  // namespace

void SvgPlot::add_series(std::string name, std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("series needs matching non-empty x and y");
    series_.push_back({std::move(name), std::move(x), std::move(y)});
}

void SvgPlot::save(const std::string& path) const {
    if (series_.empty()) throw std::logic_error("nothing to plot");

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const Series& s : series_) {
        for (double v : s.x) {
            x_min = std::min(x_min, v);
            x_max = std::max(x_max, v);
        }
        for (double v : s.y) {
            y_min = std::min(y_min, v);
            y_max = std::max(y_max, v);
        }
    }
    if (x_max == x_min) {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if (y_max == y_min) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (v - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double v) { return kTop + plot_h - (v - y_min) / (y_max - y_min) * plot_h; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << title_ << "</text>\n";

    // axes
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double fx = x_min + (x_max - x_min) * i / 5.0;
        double fy = y_min + (y_max - y_min) * i / 5.0;
        double gx = px(fx), gy = py(fy);
        out << "<line x1=\"" << fmt2(gx) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << fmt2(gx)
            << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt2(gx) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt2(fx)
            << "</text>\n";
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt2(gy) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt2(gy) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(gy + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt2(fy)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label_
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2 << ")\">" << y_label_ << "</text>\n";

    for (std::size_t i = 0; i < series_.size(); ++i) {
        const Series& s = series_[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (s.x.size() == 1) {
            out << "<circle cx=\"" << fmt2(px(s.x[0])) << "\" cy=\"" << fmt2(py(s.y[0]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < s.x.size(); ++k) {
                if (k) out << ' ';
                out << fmt2(px(s.x[k])) << ',' << fmt2(py(s.y[k]));
            }
            out << "\"/>\n";
        }
        double ly = kTop + 14.0 + 16.0 * i;
        out << "<line x1=\"" << kLeft + plot_w - 130 << "\" y1=\"" << fmt2(ly - 4) << "\" x2=\""
            << kLeft + plot_w - 110 << "\" y2=\"" << fmt2(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << kLeft + plot_w - 104 << "\" y=\"" << fmt2(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace distill
