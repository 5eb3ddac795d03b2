#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "webcorpus/matrix.hpp"
#include "webcorpus/util.hpp"

namespace webcorpus {

// One row of a feature CSV: an identifier, a class label, an optional domain
// tag, and a fixed-width numeric vector.
struct FeatureRow {
  std::string id;
  std::string label;
  std::string domain;  // empty when the table has no domain column
  std::vector<double> values;
};

class FeatureTable {
 public:
  bool has_domain = false;
  std::vector<FeatureRow> rows;

  size_t dim() const { return rows.empty() ? 0 : rows[0].values.size(); }

  // Header is `id,label[,domain],f0,f1,...`. Every row must match the header
  // width; feature cells must parse as finite doubles.
  static FeatureTable parse(std::string_view text) {
    FeatureTable table;
    auto lines = split_lines(text);
    size_t header_line = 0;
    while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
    if (header_line == lines.size()) throw ParseError("empty feature table", 1);
    auto header = split(lines[header_line], ',');
    for (auto& h : header) h = trim(h);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label")
      throw ParseError("feature header must start with id,label", header_line + 1);
    size_t feature_start = 2;
    if (header[2] == "domain") {
      table.has_domain = true;
      feature_start = 3;
    }
    if (header.size() <= feature_start)
      throw ParseError("feature table has no feature columns", header_line + 1);
    for (size_t f = feature_start; f < header.size(); ++f)
      if (header[f] != "f" + std::to_string(f - feature_start))
        throw ParseError("unexpected feature column name '" + header[f] + "'", header_line + 1);

    for (size_t i = header_line + 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      auto cells = split(lines[i], ',');
      if (cells.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()),
                         i + 1);
      FeatureRow row;
      row.id = trim(cells[0]);
      row.label = trim(cells[1]);
      if (table.has_domain) row.domain = trim(cells[2]);
      if (row.id.empty()) throw ParseError("empty id", i + 1);
      if (row.label.empty()) throw ParseError("empty label", i + 1);
      for (size_t f = feature_start; f < cells.size(); ++f) {
        double v;
        try {
          size_t used = 0;
          v = std::stod(std::string(trim(cells[f])), &used);
          if (used != trim(cells[f]).size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
          throw ParseError("bad feature value '" + std::string(cells[f]) + "'", i + 1);
        }
        if (!std::isfinite(v)) throw ParseError("non-finite feature value", i + 1);
        row.values.push_back(v);
      }
      table.rows.push_back(std::move(row));
    }
    return table;
  }

  std::string serialize() const {
    std::string out = "id,label";
    if (has_domain) out += ",domain";
    for (size_t f = 0; f < dim(); ++f) out += ",f" + std::to_string(f);
    out += '\n';
    for (const auto& row : rows) {
      out += row.id + "," + row.label;
      if (has_domain) out += "," + row.domain;
      for (double v : row.values) out += "," + format_double(v);
      out += '\n';
    }
    return out;
  }

  std::vector<std::string> labels_sorted() const {
    std::set<std::string> seen;
    for (const auto& row : rows) seen.insert(row.label);
    return {seen.begin(), seen.end()};
  }

  std::vector<std::string> domains_sorted() const {
    std::set<std::string> seen;
    for (const auto& row : rows) seen.insert(row.domain);
    return {seen.begin(), seen.end()};
  }

  FeatureTable subset(const std::vector<size_t>& indices) const {
    FeatureTable out;
    out.has_domain = has_domain;
    out.rows.reserve(indices.size());
    for (size_t i : indices) out.rows.push_back(rows.at(i));
    return out;
  }

  Matrix matrix() const {
    Matrix m(rows.size(), dim());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < dim(); ++j) m(i, j) = rows[i].values[j];
    return m;
  }
};

// Dense label encoding in sorted-label order; the decoder is the inverse.
struct LabelCodec {
  std::vector<std::string> classes;  // index -> label
  std::map<std::string, size_t> index;

  static LabelCodec fit(const FeatureTable& table) {
    LabelCodec codec;
    codec.classes = table.labels_sorted();
    for (size_t i = 0; i < codec.classes.size(); ++i) codec.index[codec.classes[i]] = i;
    return codec;
  }

  size_t encode(const std::string& label) const {
    auto it = index.find(label);
    if (it == index.end()) throw LookupError("unknown label: " + label);
    return it->second;
  }

  std::vector<size_t> encode_all(const FeatureTable& table) const {
    std::vector<size_t> y;
    y.reserve(table.rows.size());
    for (const auto& row : table.rows) y.push_back(encode(row.label));
    return y;
  }
};

}  // namespace webcorpus
