#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "webcorpus/util.hpp"

namespace webcorpus {

// One lexical concept: an id, an optional IS-A parent and its synonym set.
struct SynsetNode {
  std::string id;
  std::optional<std::string> parent_id;
  std::vector<std::string> lemmas;
  std::optional<std::string> gloss;

  bool operator==(const SynsetNode&) const = default;
};

// A parent-linked forest of synsets, preserving file order for deterministic
// iteration.
class Taxonomy {
public:
  static Taxonomy parse(std::string_view text);

  std::string serialize() const;

  const std::vector<SynsetNode>& nodes() const { return nodes_; }
  const std::vector<std::string>& roots() const { return roots_; }

  const SynsetNode* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
  }

  const SynsetNode& at(const std::string& id) const {
    const SynsetNode* n = find(id);
    if (!n) throw LookupError("unknown class id: " + id);
    return *n;
  }

  void add(SynsetNode node);    // throws on duplicate id or empty lemma list
  void validate_links() const;  // parent resolution + acyclicity

  bool operator==(const Taxonomy& o) const { return nodes_ == o.nodes_; }

private:
  std::vector<SynsetNode> nodes_;
  std::vector<std::string> roots_;
  std::unordered_map<std::string, size_t> index_;
};

inline void validate_lemma(const std::string& lemma, size_t line) {
  if (trim(lemma).empty()) throw ParseError("empty lemma", line);
  if (lemma.find('\t') != std::string::npos || lemma.find('\n') != std::string::npos)
    throw ParseError("lemma contains tab or newline", line);
}

inline void Taxonomy::add(SynsetNode node) {
  if (node.lemmas.empty()) throw Error("node " + node.id + " has no lemmas");
  for (const auto& l : node.lemmas) {
    if (l.empty() || l.find('\t') != std::string::npos || l.find('\n') != std::string::npos)
      throw Error("node " + node.id + " has an invalid lemma");
  }
  if (index_.count(node.id)) throw Error("duplicate node id: " + node.id);
  index_[node.id] = nodes_.size();
  if (!node.parent_id) roots_.push_back(node.id);
  nodes_.push_back(std::move(node));
}

inline void Taxonomy::validate_links() const {
  for (const auto& n : nodes_) {
    if (n.parent_id && !index_.count(*n.parent_id))
      throw ReferenceError("node " + n.id + " references unknown parent " + *n.parent_id);
  }
  // Walk parent chains; every chain must terminate at a root.
  enum class Mark { unvisited, on_path, done };
  std::unordered_map<std::string, Mark> marks;
  for (const auto& n : nodes_) {
    std::vector<const SynsetNode*> path;
    const SynsetNode* cur = &n;
    while (cur && marks[cur->id] == Mark::unvisited) {
      marks[cur->id] = Mark::on_path;
      path.push_back(cur);
      cur = cur->parent_id ? find(*cur->parent_id) : nullptr;
    }
    if (cur && marks[cur->id] == Mark::on_path)
      throw CycleError("cycle through node " + cur->id);
    for (const SynsetNode* p : path) marks[p->id] = Mark::done;
  }
}

// Format: id<TAB>parent-or-"-"<TAB>lemma1,lemma2,...[<TAB>gloss]
// '#'-prefixed comment lines and blank lines are ignored.
inline Taxonomy Taxonomy::parse(std::string_view text) {
  Taxonomy t;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    size_t lineno = i + 1;
    std::string_view line = lines[i];
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError("expected 3 or 4 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    SynsetNode node;
    node.id = std::string(trim(fields[0]));
    if (node.id.empty()) throw ParseError("empty node id", lineno);
    std::string parent = std::string(trim(fields[1]));
    if (parent.empty()) throw ParseError("empty parent field (use '-' for roots)", lineno);
    if (parent != "-") node.parent_id = parent;
    for (const auto& lemma : split(fields[2], ',')) {
      std::string l = std::string(trim(lemma));
      if (l.empty()) throw ParseError("empty lemma", lineno);
      node.lemmas.push_back(std::move(l));
    }
    if (node.lemmas.empty()) throw ParseError("node has no lemmas", lineno);
    if (fields.size() == 4) node.gloss = fields[3];
    try {
      t.add(std::move(node));
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  t.validate_links();
  return t;
}

inline std::string Taxonomy::serialize() const {
  std::string out;
  for (const auto& n : nodes_) {
    out += n.id;
    out += '\t';
    out += n.parent_id ? *n.parent_id : "-";
    out += '\t';
    out += join(n.lemmas, ",");
    if (n.gloss) {
      out += '\t';
      out += *n.gloss;
    }
    out += '\n';
  }
  return out;
}

enum class QueryStage { base, parent_expanded, translated };

inline const char* to_string(QueryStage s) {
  switch (s) {
    case QueryStage::base: return "base";
    case QueryStage::parent_expanded: return "parent_expanded";
    default: return "translated";
  }
}

inline QueryStage query_stage_from_string(std::string_view s) {
  if (s == "base") return QueryStage::base;
  if (s == "parent_expanded") return QueryStage::parent_expanded;
  if (s == "translated") return QueryStage::translated;
  throw ParseError("unknown query stage: " + std::string(s));
}

struct Query {
  std::string text;
  QueryStage stage = QueryStage::base;
  std::string language = "en";

  bool operator==(const Query&) const = default;
};

// The expanded query program for one class.
struct QuerySpec {
  std::string class_id;
  std::vector<Query> queries;

  bool contains_text(std::string_view text) const {
    for (const auto& q : queries)
      if (q.text == text) return true;
    return false;
  }

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(q.text);
    return out;
  }

  bool operator==(const QuerySpec&) const = default;
};

using OverrideMap = std::map<std::string, std::string>;

// Per lemma: the base query plus "<lemma> <parent-term>". The parent term is
// the override when present, else the first lemma of the parent node. Root
// classes emit base queries only. Duplicate texts are dropped keeping the
// first occurrence.
inline QuerySpec expand_queries(const Taxonomy& taxonomy, const std::string& class_id,
                                const OverrideMap& overrides = {}) {
  const SynsetNode& node = taxonomy.at(class_id);
  std::optional<std::string> parent_term;
  if (auto it = overrides.find(class_id); it != overrides.end()) {
    parent_term = it->second;
  } else if (node.parent_id) {
    parent_term = taxonomy.at(*node.parent_id).lemmas.front();
  }

  QuerySpec spec;
  spec.class_id = class_id;
  auto push_unique = [&spec](Query q) {
    if (!spec.contains_text(q.text)) spec.queries.push_back(std::move(q));
  };
  for (const auto& lemma : node.lemmas)
    push_unique({lemma, QueryStage::base, "en"});
  if (parent_term) {
    for (const auto& lemma : node.lemmas)
      push_unique({lemma + " " + *parent_term, QueryStage::parent_expanded, "en"});
  }
  return spec;
}

// Offline translation lexicon: (language, term) -> translation.
class Lexicon {
public:
  static Lexicon parse(std::string_view text) {
    Lexicon lx;
    auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
      std::string_view line = lines[i];
      if (trim(line).empty() || trim(line).front() == '#') continue;
      auto fields = split(line, '\t');
      if (fields.size() != 3)
        throw ParseError("expected language<TAB>term<TAB>translation", i + 1);
      lx.entries_[{std::string(trim(fields[0])), std::string(trim(fields[1]))}] =
          std::string(trim(fields[2]));
    }
    return lx;
  }

  void add(const std::string& language, const std::string& term, const std::string& translation) {
    entries_[{language, term}] = translation;
  }

  const std::string* lookup(const std::string& language, const std::string& term) const {
    auto it = entries_.find({language, term});
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool empty() const { return entries_.empty(); }

private:
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

struct TranslateResult {
  QuerySpec spec;
  std::vector<std::string> warnings;
};

// Adds a translated variant of every parent_expanded query for each requested
// language. By default only the appended parent term is substituted; with
// full_lemma the lemma words are substituted too when the lexicon covers
// them. Queries whose parent term has no lexicon entry are skipped with a
// warning. Lexicon gaps never fail the call.
inline TranslateResult translate_queries(const QuerySpec& spec, const Lexicon& lexicon,
                                         const std::vector<std::string>& languages,
                                         bool full_lemma = false) {
  TranslateResult result;
  result.spec = spec;

  bool any_expanded = false;
  for (const auto& q : spec.queries)
    if (q.stage == QueryStage::parent_expanded) any_expanded = true;
  if (!any_expanded) {
    result.warnings.push_back("class " + spec.class_id +
                              " has no parent-expanded queries; nothing to translate");
    return result;
  }

  // An expanded query is "<base lemma> <parent term>" and the parent term may
  // itself contain spaces, so split on the longest matching base query.
  auto split_expanded = [&spec](const std::string& text) -> std::pair<std::string, std::string> {
    size_t best = std::string::npos;
    for (const auto& q : spec.queries) {
      if (q.stage != QueryStage::base) continue;
      if (text.size() > q.text.size() + 1 && text.compare(0, q.text.size(), q.text) == 0 &&
          text[q.text.size()] == ' ') {
        if (best == std::string::npos || q.text.size() > best) best = q.text.size();
      }
    }
    size_t cut = best != std::string::npos ? best : text.rfind(' ');
    return {text.substr(0, cut), text.substr(cut + 1)};
  };

  for (const auto& lang : languages) {
    for (const auto& q : spec.queries) {
      if (q.stage != QueryStage::parent_expanded) continue;
      auto [head, parent_term] = split_expanded(q.text);
      const std::string* parent_tr = lexicon.lookup(lang, parent_term);
      if (!parent_tr) {
        result.warnings.push_back("no " + lang + " entry for term '" + parent_term +
                                  "'; skipping query '" + q.text + "'");
        continue;
      }
      std::string text;
      if (full_lemma) {
        if (const std::string* tr = lexicon.lookup(lang, head)) {
          text = *tr;
        } else {
          std::vector<std::string> words = split(head, ' ');
          for (auto& w : words)
            if (const std::string* tr2 = lexicon.lookup(lang, w)) w = *tr2;
          text = join(words, " ");
        }
      } else {
        text = head;
      }
      text += " " + *parent_tr;
      if (!result.spec.contains_text(text))
        result.spec.queries.push_back({text, QueryStage::translated, lang});
    }
  }
  return result;
}

// Partitions class query programs into files of list_size classes each.
// Every class serializes as one comma-separated line of its query texts.
inline std::vector<std::vector<std::string>> build_query_lists(
    const std::vector<QuerySpec>& specs, size_t list_size = 100) {
  if (list_size < 1) throw Error("list_size must be >= 1");
  std::vector<std::vector<std::string>> lists;
  for (size_t i = 0; i < specs.size(); ++i) {
    if (i % list_size == 0) lists.emplace_back();
    lists.back().push_back(join(specs[i].texts(), ", "));
  }
  return lists;
}

inline std::vector<std::filesystem::path> write_query_lists(
    const std::vector<std::vector<std::string>>& lists, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (size_t i = 0; i < lists.size(); ++i) {
    char name[32];
    snprintf(name, sizeof(name), "list_%03zu.txt", i);
    std::string body;
    for (const auto& line : lists[i]) {
      body += line;
      body += '\n';
    }
    paths.push_back(dir / name);
    write_file(paths.back(), body);
  }
  return paths;
}

// Query-spec table: class_id<TAB>stage<TAB>language<TAB>text. This is the
// machine-readable companion of the plain query lists and the input the
// harvester consumes.
inline std::string serialize_query_specs(const std::vector<QuerySpec>& specs) {
  std::string out = "# class_id\tstage\tlanguage\ttext\n";
  for (const auto& spec : specs)
    for (const auto& q : spec.queries) {
      out += spec.class_id;
      out += '\t';
      out += to_string(q.stage);
      out += '\t';
      out += q.language;
      out += '\t';
      out += q.text;
      out += '\n';
    }
  return out;
}

inline std::vector<QuerySpec> parse_query_specs(std::string_view text) {
  std::vector<QuerySpec> specs;
  std::unordered_map<std::string, size_t> index;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4)
      throw ParseError("expected class_id<TAB>stage<TAB>language<TAB>text", i + 1);
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      index[fields[0]] = specs.size();
      specs.push_back({fields[0], {}});
      it = index.find(fields[0]);
    }
    specs[it->second].queries.push_back(
        {fields[3], query_stage_from_string(fields[1]), fields[2]});
  }
  return specs;
}

inline OverrideMap parse_overrides(std::string_view text) {
  OverrideMap out;
  auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected id<TAB>parent-term", i + 1);
    out[std::string(trim(fields[0]))] = std::string(trim(fields[1]));
  }
  return out;
}

}  // namespace webcorpus
