#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webcorpus/matrix.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

// Ordered, disjoint groups of class ids used to colour scatter plots.
struct SuperClassMap {
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;

  static SuperClassMap parse(std::string_view text) {
    SuperClassMap map;
    auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
      std::string line{trim(lines[i])};
      if (line.empty() || line[0] == '#') continue;
      auto fields = split(lines[i], '\t');
      if (fields.size() != 2)
        throw ParseError("expected group_name<TAB>comma-separated ids", i + 1);
      std::string name{trim(fields[0])};
      if (name.empty()) throw ParseError("empty group name", i + 1);
      std::vector<std::string> ids;
      for (const auto& raw : split(fields[1], ',')) {
        std::string id{trim(raw)};
        if (!id.empty()) ids.push_back(id);
      }
      map.groups.emplace_back(name, std::move(ids));
    }
    map.validate();
    return map;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [name, ids] : groups) out += name + "\t" + join(ids, ",") + "\n";
    return out;
  }

  void validate() const {
    std::set<std::string> names, seen;
    for (const auto& [name, ids] : groups) {
      if (!names.insert(name).second) throw Error("duplicate super-class group: " + name);
      for (const auto& id : ids)
        if (!seen.insert(id).second)
          throw Error("class " + id + " appears in more than one super-class");
    }
  }

  std::optional<std::string> group_of(const std::string& class_id) const {
    for (const auto& [name, ids] : groups)
      if (std::find(ids.begin(), ids.end(), class_id) != ids.end()) return name;
    return std::nullopt;
  }
};

struct ScatterFiles {
  std::string csv;
  std::string svg;
  size_t unmapped_points = 0;
};

namespace detail {

inline const std::vector<std::string>& scatter_palette() {
  static const std::vector<std::string> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette;
}

}  // namespace detail

// CSV rows are x,y,class_id,superclass; the SVG colours by super-class with a
// legend. Classes not covered by the map fall into the reserved group
// "other" with a warning.
inline ScatterFiles emit_scatter(const Matrix& y, const std::vector<std::string>& labels,
                                 const SuperClassMap& map) {
  if (y.cols() < 2) throw Error("scatter: need 2-D coordinates");
  if (y.rows() != labels.size()) throw Error("scatter: one label per point required");
  map.validate();

  ScatterFiles out;
  std::vector<std::string> groups(y.rows());
  for (size_t i = 0; i < y.rows(); ++i) {
    auto g = map.group_of(labels[i]);
    if (!g) ++out.unmapped_points;
    groups[i] = g.value_or("other");
  }
  if (out.unmapped_points)
    log(LogLevel::warn, "scatter: " + std::to_string(out.unmapped_points) +
                            " points fell into the reserved group \"other\"");

  out.csv = "x,y,class_id,superclass\n";
  for (size_t i = 0; i < y.rows(); ++i)
    out.csv += format_double(y(i, 0)) + "," + format_double(y(i, 1)) + "," + labels[i] + "," +
               groups[i] + "\n";

  std::map<std::string, std::string> colour;
  std::vector<std::string> legend_order;
  const auto& palette = detail::scatter_palette();
  for (size_t g = 0; g < map.groups.size(); ++g) {
    colour[map.groups[g].first] = palette[g % palette.size()];
    legend_order.push_back(map.groups[g].first);
  }
  colour["other"] = "#999999";
  if (out.unmapped_points || map.groups.empty()) legend_order.push_back("other");

  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  if (y.rows() > 0) {
    min_x = max_x = y(0, 0);
    min_y = max_y = y(0, 1);
    for (size_t i = 1; i < y.rows(); ++i) {
      min_x = std::min(min_x, y(i, 0));
      max_x = std::max(max_x, y(i, 0));
      min_y = std::min(min_y, y(i, 1));
      max_y = std::max(max_y, y(i, 1));
    }
  }
  double span_x = std::max(max_x - min_x, 1e-9), span_y = std::max(max_y - min_y, 1e-9);
  const double size = 600, margin = 40, legend_width = 160;
  auto sx = [&](double v) { return margin + (v - min_x) / span_x * (size - 2 * margin); };
  auto sy = [&](double v) { return size - margin - (v - min_y) / span_y * (size - 2 * margin); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    format_double(size + legend_width) + "\" height=\"" + format_double(size) +
                    "\" viewBox=\"0 0 " + format_double(size + legend_width) + " " +
                    format_double(size) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (size_t i = 0; i < y.rows(); ++i)
    svg += "<circle cx=\"" + format_double(sx(y(i, 0))) + "\" cy=\"" + format_double(sy(y(i, 1))) +
           "\" r=\"2.5\" fill=\"" + colour[groups[i]] + "\" fill-opacity=\"0.75\"/>\n";
  double legend_y = margin;
  for (const auto& name : legend_order) {
    svg += "<rect x=\"" + format_double(size + 10) + "\" y=\"" + format_double(legend_y) +
           "\" width=\"12\" height=\"12\" fill=\"" + colour[name] + "\"/>\n";
    svg += "<text x=\"" + format_double(size + 28) + "\" y=\"" + format_double(legend_y + 11) +
           "\" font-family=\"sans-serif\" font-size=\"13\">" + name + "</text>\n";
    legend_y += 20;
  }
  svg += "</svg>\n";
  out.svg = std::move(svg);
  return out;
}

inline ScatterFiles write_scatter(const Matrix& y, const std::vector<std::string>& labels,
                                  const SuperClassMap& map, const std::filesystem::path& dir) {
  ScatterFiles files = emit_scatter(y, labels, map);
  std::filesystem::create_directories(dir);
  write_file(dir / "scatter.csv", files.csv);
  write_file(dir / "scatter.svg", files.svg);
  return files;
}

}  // namespace webcorpus
