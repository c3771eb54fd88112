#include <array>
#include <cstdio>
#include <fstream>

#include "cgra/errors.hpp"
#include "cgra/report.hpp"

namespace cgra {

namespace {

constexpr int kCell = 72;
constexpr int kMargin = 16;
constexpr int kTitle = 28;
constexpr int kLegend = 44;

struct Rgb {
    double r, g, b;
};

// Light yellow -> orange -> dark red.
constexpr std::array<Rgb, 3> kStops = {Rgb{255, 247, 188}, Rgb{254, 153, 41}, Rgb{189, 0, 38}};

std::string color_at(double t) {
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const double x = t * static_cast<double>(kStops.size() - 1);
    const auto i = static_cast<std::size_t>(x >= static_cast<double>(kStops.size() - 1) ? kStops.size() - 2 : x);
    const double f = x - static_cast<double>(i);
    const Rgb& a = kStops[i];
    const Rgb& b = kStops[i + 1];
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(a.r + (b.r - a.r) * f + 0.5),
                  static_cast<int>(a.g + (b.g - a.g) * f + 0.5), static_cast<int>(a.b + (b.b - a.b) * f + 0.5));
    return buf;
}

std::string unit_label(HeatmapUnit u) { return u == HeatmapUnit::AvgPowerMw ? "average power [mW]" : "energy [pJ]"; }

std::string escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string heatmap_svg(const Heatmap& h) {
    const double lo = h.min();
    const double hi = h.max();
    const double span = hi - lo;
    const int width = 2 * kMargin + h.cols * kCell;
    const int grid_h = h.rows * kCell;
    const int height = kTitle + grid_h + kLegend + kMargin;

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\">\n";
    s += "<title>" + escape(unit_label(h.unit) + " - " + h.scope) + "</title>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"" + std::to_string(kMargin) + "\" y=\"20\" font-size=\"14\">" +
         escape(h.scope + ": " + unit_label(h.unit)) + "</text>\n";

    for (int r = 0; r < h.rows; ++r) {
        for (int c = 0; c < h.cols; ++c) {
            const double v = h.at(r, c);
            const double t = span > 0.0 ? (v - lo) / span : 0.0;
            const int x = kMargin + c * kCell;
            const int y = kTitle + r * kCell;
            s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
                 std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) + "\" fill=\"" + color_at(t) +
                 "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
            s += "<text x=\"" + std::to_string(x + kCell / 2) + "\" y=\"" + std::to_string(y + kCell / 2 + 4) +
                 "\" font-size=\"11\" text-anchor=\"middle\" fill=\"" + (t > 0.6 ? "#ffffff" : "#000000") + "\">" +
                 fmt6(v) + "</text>\n";
        }
    }

    // Color scale legend.
    const int ly = kTitle + grid_h + 10;
    const int lw = h.cols * kCell;
    s += "<defs><linearGradient id=\"scale\" x1=\"0\" x2=\"1\" y1=\"0\" y2=\"0\">";
    for (std::size_t i = 0; i < kStops.size(); ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(kStops.size() - 1);
        s += "<stop offset=\"" + fmt6(t) + "\" stop-color=\"" + color_at(t) + "\"/>";
    }
    s += "</linearGradient></defs>\n";
    s += "<rect x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(ly) + "\" width=\"" +
         std::to_string(lw) + "\" height=\"12\" fill=\"url(#scale)\" stroke=\"#444444\"/>\n";
    s += "<text x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(ly + 28) + "\" font-size=\"11\">" +
         fmt6(lo) + "</text>\n";
    s += "<text x=\"" + std::to_string(kMargin + lw) + "\" y=\"" + std::to_string(ly + 28) +
         "\" font-size=\"11\" text-anchor=\"end\">" + fmt6(hi) + "</text>\n";
    s += "</svg>\n";
    return s;
}

void emit_heatmap_svg(const Heatmap& h, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << heatmap_svg(h);
}

}  // namespace cgra
