#include "cssi/emit.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "cssi/dataset.hpp"
#include "cssi/error.hpp"

namespace cssi {

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr double kWidth = 800.0, kHeight = 600.0;
constexpr double kLeft = 70.0, kRight = 170.0, kTop = 40.0, kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string svg_open(const std::string& title) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
    s += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(title) +
         "</text>\n";
    return s;
}

}  // namespace

std::string roc_to_csv(const RocCurve& curve) {
    std::string s = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) s += format_double(p.threshold) + "," + format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
    return s;
}

RocCurve roc_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "threshold,fpr,tpr") throw IoError("not a ROC table");
    RocCurve c;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RocPoint p;
        char* end = nullptr;
        const char* s = line.c_str();
        p.threshold = std::strtod(s, &end);
        if (*end != ',') throw IoError("bad ROC row '" + line + "'");
        p.fpr = std::strtod(end + 1, &end);
        if (*end != ',') throw IoError("bad ROC row '" + line + "'");
        p.tpr = std::strtod(end + 1, &end);
        if (*end != '\0') throw IoError("bad ROC row '" + line + "'");
        c.points.push_back(p);
    }
    for (std::size_t i = 1; i < c.points.size(); ++i)
        c.auc += 0.5 * (c.points[i].fpr - c.points[i - 1].fpr) * (c.points[i].tpr + c.points[i - 1].tpr);
    return c;
}

std::string grid_to_csv(const BoundaryGrid& grid) {
    std::string s = "ix,iy,x,y,label\n";
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix) {
            const auto p = grid.point(ix, iy);
            s += std::to_string(ix) + "," + std::to_string(iy) + "," + format_double(p[static_cast<std::size_t>(grid.plane.dim_x)]) +
                 "," + format_double(p[static_cast<std::size_t>(grid.plane.dim_y)]) + "," +
                 std::to_string(grid.labels[static_cast<std::size_t>(iy * grid.resolution + ix)]) + "\n";
        }
    return s;
}

std::string history_to_csv(const TrainingHistory& history) {
    std::size_t d = history.epochs.empty() ? 0 : history.epochs.front().mean_pi.size();
    std::string s = "epoch,train_nll,val_nll,temperature";
    for (std::size_t j = 0; j < d; ++j) s += ",mean_pi_" + std::to_string(j + 1);
    s += "\n";
    for (const auto& e : history.epochs) {
        s += std::to_string(e.epoch) + "," + format_double(e.train_nll) + "," + format_double(e.val_nll) + "," +
             format_double(e.temperature);
        for (double v : e.mean_pi) s += "," + format_double(v);
        s += "\n";
    }
    return s;
}

std::string roc_to_svg(const std::vector<std::pair<std::string, RocCurve>>& curves, const std::string& title) {
    const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    auto px = [&](double fpr) { return fixed(kLeft + w * fpr); };
    auto py = [&](double tpr) { return fixed(kTop + h * (1.0 - tpr)); };
    std::string s = svg_open(title);
    s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(w) + "\" height=\"" + fixed(h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + px(0) + "\" y1=\"" + py(0) + "\" x2=\"" + px(1) + "\" y2=\"" + py(1) +
         "\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        s += "<text x=\"" + px(v) + "\" y=\"" + fixed(kTop + h + 18) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
             fixed(v).substr(0, 4) + "</text>\n";
        s += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + py(v) + "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
             fixed(v).substr(0, 4) + "</text>\n";
    }
    s += "<text x=\"" + px(0.5) + "\" y=\"" + fixed(kHeight - 15) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">false positive rate</text>\n";
    s += "<text x=\"20\" y=\"" + py(0.5) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 20 " +
         py(0.5) + ")\">true positive rate</text>\n";
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const char* colour = kPalette[k % kPaletteSize];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < curves[k].second.points.size(); ++i) {
            const auto& p = curves[k].second.points[i];
            s += (i ? " " : "") + px(p.fpr) + "," + py(p.tpr);
        }
        s += "\"/>\n";
        const std::string ly = fixed(kTop + 20 + 20.0 * static_cast<double>(k));
        s += "<text x=\"" + fixed(kWidth - kRight + 10) + "\" y=\"" + ly + "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
             colour + "\">" + escape_xml(curves[k].first) + " (AUC " + fixed(curves[k].second.auc) + ")</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string grid_to_svg(const BoundaryGrid& grid, const std::string& title) {
    const double side = std::min(kWidth - kLeft - kRight, kHeight - kTop - kBottom);
    const double cell = side / grid.resolution;
    std::string s = svg_open(title);
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix) {
            const int label = grid.labels[static_cast<std::size_t>(iy * grid.resolution + ix)];
            // Row 0 holds the smallest y value and is drawn at the bottom.
            s += "<rect class=\"cell\" x=\"" + fixed(kLeft + ix * cell) + "\" y=\"" + fixed(kTop + (grid.resolution - 1 - iy) * cell) +
                 "\" width=\"" + fixed(cell) + "\" height=\"" + fixed(cell) + "\" fill=\"" +
                 kPalette[static_cast<std::size_t>(label) % kPaletteSize] + "\"/>\n";
        }
    const int patterns = 1 << grid.num_vars;
    for (int p = 0; p < patterns && p < 16; ++p) {
        const std::string y = fixed(kTop + 20 + 22.0 * p);
        s += "<rect x=\"" + fixed(kLeft + side + 20) + "\" y=\"" + fixed(kTop + 8 + 22.0 * p) +
             "\" width=\"14\" height=\"14\" fill=\"" + kPalette[static_cast<std::size_t>(p) % kPaletteSize] + "\"/>\n";
        s += "<text x=\"" + fixed(kLeft + side + 40) + "\" y=\"" + y + "\" font-family=\"sans-serif\" font-size=\"12\">" +
             std::to_string(p) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit(const std::filesystem::path& path, const std::string& content) { write_text_file(path, content); }

}  // namespace cssi
