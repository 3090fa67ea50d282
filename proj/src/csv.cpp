#include "rlmix/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rlmix/errors.hpp"

namespace rlmix::csv {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

Table& Table::row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
        throw ParameterError("csv row width does not match header");
    }
    rows_.push_back(std::move(cells));
    return *this;
}

std::string Table::str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out << ',';
        out << header_[i];
    }
    out << '\n';
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out << ',';
            out << r[i];
        }
        out << '\n';
    }
    return out.str();
}

void Table::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + path + "'");
    out << str();
}

namespace {

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#2e933c", "#8338ec", "#ee8434", "#118ab2"};

} // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    const double width = 800, height = 500;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    // axes
    svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    svg << "<text x=\"18\" y=\"" << height / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << height / 2
        << ")\">" << y_label << "</text>\n";
    svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 16 << "\" font-size=\"11\">"
        << format_double(xmin) << "</text>\n";
    svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(xmax) << "</text>\n";
    svg << "<text x=\"" << ml - 4 << "\" y=\"" << height - mb
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(ymin) << "</text>\n";
    svg << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(ymax) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) svg << ' ';
            svg << px(series[s].x[i]) << ',' << py(series[s].y[i]);
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << width - mr - 8 << "\" y=\"" << mt + 16 + 16 * s
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
            << series[s].name << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + path + "'");
    out << svg.str();
}

std::vector<std::pair<std::size_t, Complex>> read_recipe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open recipe file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("recipe file '" + path + "' is empty");
    if (line != "node_index,re_amp,im_amp") {
        throw ConfigError("recipe file '" + path + "' has unexpected header '" + line + "'");
    }
    std::vector<std::pair<std::size_t, Complex>> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t node = 0;
        double re = 0.0, im = 0.0;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &node, &re, &im) != 3 || node == 0) {
            throw ConfigError("recipe file '" + path + "' line " + std::to_string(lineno) +
                              ": expected node_index,re_amp,im_amp");
        }
        entries.emplace_back(node, Complex(re, im));
    }
    if (entries.empty()) throw ConfigError("recipe file '" + path + "' has no amplitude rows");
    return entries;
}

} // namespace rlmix::csv
