#include "stopflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "stopflow/errors.hpp"

namespace stopflow {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
    : CsvWriter(path, std::vector<std::string>(header)) {}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ << ',';
        out_ << header[i];
    }
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
    row(std::vector<double>(values));
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw IoError("CSV row width mismatch in " + path_.string());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << fmt17(values[i]);
    }
    out_ << '\n';
    if (!out_) throw IoError("write failed: " + path_.string());
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("close failed: " + path_.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                              cell + "'");
            }
            row.push_back(v);
        }
        if (row.size() != t.header.size()) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " columns");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string esc(const std::string& s) {
    std::string r;
    for (char c : s) {
        switch (c) {
            case '<': r += "&lt;"; break;
            case '>': r += "&gt;"; break;
            case '&': r += "&amp;"; break;
            default: r += c;
        }
    }
    return r;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y) {
    constexpr double W = 720, H = 480, L = 70, R = 170, T = 40, B = 55;
    auto ty = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (log_y && s.y[i] <= 0.0) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!(xmin < xmax)) { xmin = 0.0; xmax = 1.0; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - ymin) / (ymax - ymin) * (H - T - B); };
    auto py_raw = [&](double t) { return H - B - (t - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << esc(title) << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double tv = ymin + (ymax - ymin) * i / 5.0;
        o << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << H - B << "\" x2=\"" << num(px(xv))
          << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        o << "<line x1=\"" << L - 5 << "\" y1=\"" << num(py_raw(tv)) << "\" x2=\"" << L
          << "\" y2=\"" << num(py_raw(tv)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << L - 8 << "\" y=\"" << num(py_raw(tv) + 4)
          << "\" text-anchor=\"end\">" << tick_label(log_y ? std::pow(10.0, tv) : tv)
          << "</text>\n";
    }
    o << "<text x=\"" << num((L + W - R) / 2) << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << num((T + H - B) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << esc(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (s.dashed) o << " stroke-dasharray=\"6,4\"";
        o << " points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (log_y && s.y[i] <= 0.0) continue;
            o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        }
        o << "\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << W - R + 36
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
        if (s.dashed) o << " stroke-dasharray=\"6,4\"";
        o << "/>";
        o << "<text x=\"" << W - R + 42 << "\" y=\"" << num(ly + 4) << "\">" << esc(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << o.str();
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace stopflow
