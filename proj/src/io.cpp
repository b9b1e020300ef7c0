#include "frg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "frg/errors.hpp"

namespace frg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw ValidationError("CSV row width does not match the header: " + path);
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw ValidationError("write failed: " + path);
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, Config& config) {
    for (const auto& [key, value] : j.items()) {
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            flatten_json(value, full, config);
        } else if (value.is_string()) {
            config.set(full, value.get<std::string>());
        } else {
            config.set(full, value.dump());
        }
    }
}

}  // namespace

Config Config::from_toml_text(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments outside of quoted strings.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": empty key or value");
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (!section.empty()) key = section + "." + key;
        config.values_[key] = value;
    }
    return config;
}

Config Config::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("JSON config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("JSON config must be an object");
    Config config;
    flatten_json(j, "", config);
    return config;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        return from_json_text(buf.str());
    }
    return from_toml_text(buf.str());
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config field '" + key + "': expected a number, got '" +
                              it->second + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw ValidationError("config field '" + key + "': expected an integer, got '" +
                              it->second + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ValidationError("config field '" + key + "': expected true or false, got '" +
                          it->second + "'");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

namespace {

double axis_transform(double v, bool log_scale) {
    if (!log_scale) return v;
    if (!(v > 0.0)) throw ValidationError("log-axis plot requires positive values");
    return std::log10(v);
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool log_x, bool log_y) {
    constexpr int width = 720, height = 480, margin = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw ValidationError("plot series length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double x = axis_transform(s.x[i], log_x);
            const double y = axis_transform(s.y[i], log_y);
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmax >= xmin) || !(ymax >= ymin)) throw ValidationError("plot has no finite points");
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;

    const auto px = [&](double x) {
        return margin + (width - 2 * margin) * (axis_transform(x, log_x) - xmin) / (xmax - xmin);
    };
    const auto py = [&](double y) {
        return height - margin -
               (height - 2 * margin) * (axis_transform(y, log_y) - ymin) / (ymax - ymin);
    };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#8c564b"};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
        << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    int color_idx = 0;
    int legend_y = margin + 16;
    for (const auto& s : series) {
        const char* color = colors[color_idx % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin - 150 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"" << color << "\">" << s.label << "</text>\n";
        legend_y += 16;
        ++color_idx;
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"12\">" << (log_x ? "log10 x" : "x")
        << "</text>\n";
    out << "</svg>\n";
}

}  // namespace frg
