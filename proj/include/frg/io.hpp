#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace frg {

// Shortest round-trip formatting ("%.17g") so repeated runs with the same
// seed produce byte-identical files.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Flat key/value configuration parsed from TOML (subset: comments, [section]
// headers flattened to "section.key", strings, booleans, numbers) or from a
// JSON object (nested objects flattened the same way).  Format chosen by file
// extension.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_toml_text(const std::string& text);
    static Config from_json_text(const std::string& text);

    bool has(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    void set(const std::string& key, const std::string& value);

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Minimal static SVG line chart; series share the x column.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool log_x, bool log_y);

}  // namespace frg
