#pragma once

#include <string>
#include <vector>

#include "rlmix/types.hpp"

namespace rlmix::csv {

// Shortest round-trippable decimal representation ("%.17g" trimmed).
std::string format_double(double x);

// Minimal CSV emitter: fixed header, rows of preformatted cells. All
// numeric cells go through format_double so identical inputs produce
// byte-identical files.
class Table {
public:
    explicit Table(std::vector<std::string> header);

    Table& row(std::vector<std::string> cells);

    std::string str() const;
    void write(const std::string& path) const;

    static std::string cell(double x) { return format_double(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Series {
    std::string name;
    RVector x;
    RVector y;
};

// Simple static SVG line chart (800x500, linear axes, small palette)
// for the optional --plot output.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

// Reads back a recipe CSV (node_index,re_amp,im_amp).
std::vector<std::pair<std::size_t, Complex>> read_recipe(const std::string& path);

} // namespace rlmix::csv
