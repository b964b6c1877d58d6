#include "chshforge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chshforge {

namespace {

constexpr double kTsirelson = 2.8284271247461903;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct SeriesStyle {
    const char* color;
    const char* marker;  // circle | square | triangle
};

SeriesStyle style_for(CnotStrategy strategy) {
    switch (strategy) {
        case CnotStrategy::Unitary: return {"#c62828", "circle"};
        case CnotStrategy::Dynamic: return {"#2e7d32", "square"};
        case CnotStrategy::Postprocessed: return {"#1565c0", "triangle"};
    }
    return {"#000000", "circle"};
}

void marker_svg(std::ostringstream& out, const char* marker, const char* color, double x,
                double y) {
    if (std::string(marker) == "circle") {
        out << "<circle cx='" << fmt(x) << "' cy='" << fmt(y) << "' r='4' fill='" << color
            << "'/>";
    } else if (std::string(marker) == "square") {
        out << "<rect x='" << fmt(x - 3.5) << "' y='" << fmt(y - 3.5)
            << "' width='7' height='7' fill='" << color << "'/>";
    } else {
        out << "<polygon points='" << fmt(x) << "," << fmt(y - 4.5) << " " << fmt(x - 4.0) << ","
            << fmt(y + 3.5) << " " << fmt(x + 4.0) << "," << fmt(y + 3.5) << "' fill='" << color
            << "'/>";
    }
}

struct Frame {
    double x0, y0, w, h;       // plot area in svg coordinates
    double xmin, xmax, ymin, ymax;

    double sx(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
    double sy(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void axes_svg(std::ostringstream& out, const Frame& f, const std::string& xlabel,
              const std::string& ylabel, const std::vector<double>& xticks,
              const std::vector<double>& yticks) {
    out << "<rect x='" << fmt(f.x0) << "' y='" << fmt(f.y0) << "' width='" << fmt(f.w)
        << "' height='" << fmt(f.h) << "' fill='none' stroke='#333' stroke-width='1'/>";
    for (double t : xticks) {
        double x = f.sx(t);
        out << "<line x1='" << fmt(x) << "' y1='" << fmt(f.y0 + f.h) << "' x2='" << fmt(x)
            << "' y2='" << fmt(f.y0 + f.h + 5) << "' stroke='#333'/>";
        out << "<text x='" << fmt(x) << "' y='" << fmt(f.y0 + f.h + 18)
            << "' font-size='11' text-anchor='middle' fill='#333'>" << fmt(t) << "</text>";
    }
    for (double t : yticks) {
        double y = f.sy(t);
        out << "<line x1='" << fmt(f.x0 - 5) << "' y1='" << fmt(y) << "' x2='" << fmt(f.x0)
            << "' y2='" << fmt(y) << "' stroke='#333'/>";
        out << "<text x='" << fmt(f.x0 - 8) << "' y='" << fmt(y + 4)
            << "' font-size='11' text-anchor='end' fill='#333'>" << fmt(t) << "</text>";
    }
    out << "<text x='" << fmt(f.x0 + f.w / 2) << "' y='" << fmt(f.y0 + f.h + 36)
        << "' font-size='13' text-anchor='middle' fill='#111'>" << xlabel << "</text>";
    out << "<text x='" << fmt(f.x0 - 38) << "' y='" << fmt(f.y0 + f.h / 2)
        << "' font-size='13' text-anchor='middle' fill='#111' transform='rotate(-90 "
        << fmt(f.x0 - 38) << " " << fmt(f.y0 + f.h / 2) << ")'>" << ylabel << "</text>";
}

void quantum_band_svg(std::ostringstream& out, const Frame& f) {
    // Shaded |S| > 2 region with the Tsirelson line on top.
    out << "<rect x='" << fmt(f.x0) << "' y='" << fmt(f.sy(std::min(f.ymax, 3.0))) << "' width='"
        << fmt(f.w) << "' height='" << fmt(f.sy(2.0) - f.sy(std::min(f.ymax, 3.0)))
        << "' fill='#fff3cd' opacity='0.6'/>";
    out << "<line x1='" << fmt(f.x0) << "' y1='" << fmt(f.sy(2.0)) << "' x2='" << fmt(f.x0 + f.w)
        << "' y2='" << fmt(f.sy(2.0)) << "' stroke='#555' stroke-dasharray='6,3'/>";
    out << "<line x1='" << fmt(f.x0) << "' y1='" << fmt(f.sy(kTsirelson)) << "' x2='"
        << fmt(f.x0 + f.w) << "' y2='" << fmt(f.sy(kTsirelson))
        << "' stroke='#999' stroke-dasharray='2,3'/>";
    out << "<text x='" << fmt(f.x0 + 10) << "' y='" << fmt(f.sy(2.0) - 8)
        << "' font-size='12' fill='#7a6000'>Quantum Domain (|S| &gt; 2)</text>";
}

}  // namespace

std::string distance_plot_svg(const DistanceSweepResult& result) {
    std::vector<int> lengths = result.config.lengths;
    std::sort(lengths.begin(), lengths.end());
    Frame f{60, 30, 660, 400, static_cast<double>(lengths.front()) - 0.5,
            static_cast<double>(lengths.back()) + 0.5, 0.0, 3.0};

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='780' height='500' "
           "viewBox='0 0 780 500'>";
    out << "<rect width='780' height='500' fill='white'/>";
    quantum_band_svg(out, f);
    std::vector<double> xticks(lengths.begin(), lengths.end());
    axes_svg(out, f, "qubit distance (chain length)", "max |S|", xticks,
             {0, 0.5, 1, 1.5, 2, 2.5, 3});

    double legend_y = 52;
    for (CnotStrategy strategy : result.config.strategies) {
        SeriesStyle style = style_for(strategy);
        std::ostringstream path;
        bool first = true;
        for (int length : lengths) {
            const CellStats& cell = result.cell(strategy, length);
            double x = f.sx(length), y = f.sy(std::clamp(cell.max_s_mean, 0.0, 3.0));
            path << (first ? "M" : "L") << fmt(x) << " " << fmt(y) << " ";
            first = false;
            double lo = f.sy(std::clamp(cell.max_s_mean - cell.max_s_std, 0.0, 3.0));
            double hi = f.sy(std::clamp(cell.max_s_mean + cell.max_s_std, 0.0, 3.0));
            out << "<line x1='" << fmt(x) << "' y1='" << fmt(lo) << "' x2='" << fmt(x) << "' y2='"
                << fmt(hi) << "' stroke='" << style.color << "' stroke-width='1.2'/>";
        }
        out << "<path d='" << path.str() << "' fill='none' stroke='" << style.color
            << "' stroke-width='1.8'/>";
        for (int length : lengths) {
            const CellStats& cell = result.cell(strategy, length);
            marker_svg(out, style.marker, style.color, f.sx(length),
                       f.sy(std::clamp(cell.max_s_mean, 0.0, 3.0)));
        }
        marker_svg(out, style.marker, style.color, 640, legend_y - 4);
        out << "<text x='652' y='" << fmt(legend_y) << "' font-size='12' fill='#111'>"
            << strategy_name(strategy) << "</text>";
        legend_y += 18;
    }
    out << "</svg>";
    return out.str();
}

namespace {

void scurve_panel(std::ostringstream& out, const DistanceSweepResult& result, int length,
                  const Frame& f) {
    axes_svg(out, f, "phase (rad)", "S", {-1.57, 0, 3.14, 6.28, 9.42}, {-2.83, -2, 0, 2, 2.83});
    out << "<line x1='" << fmt(f.x0) << "' y1='" << fmt(f.sy(2.0)) << "' x2='" << fmt(f.x0 + f.w)
        << "' y2='" << fmt(f.sy(2.0)) << "' stroke='#888' stroke-dasharray='5,3'/>";
    out << "<line x1='" << fmt(f.x0) << "' y1='" << fmt(f.sy(-2.0)) << "' x2='" << fmt(f.x0 + f.w)
        << "' y2='" << fmt(f.sy(-2.0)) << "' stroke='#888' stroke-dasharray='5,3'/>";
    out << "<text x='" << fmt(f.x0 + f.w / 2) << "' y='" << fmt(f.y0 - 8)
        << "' font-size='13' text-anchor='middle' fill='#111'>distance " << length << "</text>";
    for (CnotStrategy strategy : result.config.strategies) {
        const CellStats& cell = result.cell(strategy, length);
        if (cell.scurves.empty()) continue;
        SeriesStyle style = style_for(strategy);
        std::ostringstream path;
        bool first = true;
        for (const auto& p : cell.scurves.front().points) {
            path << (first ? "M" : "L") << fmt(f.sx(p.phi)) << " "
                 << fmt(f.sy(std::clamp(p.s, -3.2, 3.2))) << " ";
            first = false;
        }
        out << "<path d='" << path.str() << "' fill='none' stroke='" << style.color
            << "' stroke-width='1.6'/>";
    }
}

}  // namespace

std::string scurve_plot_svg(const DistanceSweepResult& result, int length_a, int length_b) {
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='980' height='430' "
           "viewBox='0 0 980 430'>";
    out << "<rect width='980' height='430' fill='white'/>";
    Frame fa{60, 40, 380, 320, -2.0, 9.9, -3.2, 3.2};
    Frame fb{550, 40, 380, 320, -2.0, 9.9, -3.2, 3.2};
    scurve_panel(out, result, length_a, fa);
    scurve_panel(out, result, length_b, fb);
    out << "</svg>";
    return out.str();
}

std::string single_scurve_svg(const SCurve& curve, const std::string& title) {
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='520' height='420' "
           "viewBox='0 0 520 420'>";
    out << "<rect width='520' height='420' fill='white'/>";
    Frame f{60, 40, 420, 320, -2.0, 9.9, -3.2, 3.2};
    axes_svg(out, f, "phase (rad)", "S", {-1.57, 0, 3.14, 6.28, 9.42}, {-2.83, -2, 0, 2, 2.83});
    out << "<text x='" << fmt(f.x0 + f.w / 2) << "' y='" << fmt(f.y0 - 8)
        << "' font-size='13' text-anchor='middle' fill='#111'>" << title << "</text>";
    std::ostringstream path;
    bool first = true;
    for (const auto& p : curve.points) {
        path << (first ? "M" : "L") << fmt(f.sx(p.phi)) << " "
             << fmt(f.sy(std::clamp(p.s, -3.2, 3.2))) << " ";
        first = false;
    }
    out << "<path d='" << path.str() << "' fill='none' stroke='#1565c0' stroke-width='1.6'/>";
    out << "</svg>";
    return out.str();
}

nlohmann::json make_manifest(const ExperimentConfig& config,
                             const std::vector<std::string>& outputs) {
    nlohmann::json doc;
    doc["tool"] = kToolVersion;
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc["timestamp"] = stamp;
    doc["seed"] = config.seed;
    doc["config"] = config_to_json(config);
    doc["outputs"] = outputs;
    return doc;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace chshforge
