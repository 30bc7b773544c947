#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace stopflow {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal text with 17 significant digits ("%.17g"); round-trips
/// every finite double exactly.
std::string fmt17(double v);

/// Row-oriented CSV writer. Numbers go through fmt17.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header);
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with one header line. Throws IoError on malformed
/// input.
CsvTable read_csv(const std::filesystem::path& path);

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

/// Line chart with axes, ticks and a legend.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace stopflow
