#include "tempamb/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tempamb/errors.hpp"
#include "tempamb/util.hpp"

namespace tempamb {

FileFormat parse_format(std::string_view s) {
  const std::string t = to_lower(trim(s));
  if (t == "jsonl") return FileFormat::Jsonl;
  if (t == "csv") return FileFormat::Csv;
  if (t == "tsv") return FileFormat::Tsv;
  throw ConfigError("unknown dataset format \"" + std::string(s) + "\"");
}

std::string to_string(FileFormat f) {
  switch (f) {
    case FileFormat::Jsonl: return "jsonl";
    case FileFormat::Csv: return "csv";
    case FileFormat::Tsv: return "tsv";
  }
  return "jsonl";
}

Dataset::Dataset(std::vector<Question> items, std::string source_path)
    : items_(std::move(items)), source_path_(std::move(source_path)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto [it, inserted] = index_.emplace(items_[i].id, i);
    (void)it;
    if (!inserted) {
      throw DuplicateId("duplicate question id \"" + items_[i].id + "\"");
    }
  }
}

const Question* Dataset::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

void Dataset::require_gold_labels() const {
  for (const auto& q : items_) {
    if (!q.gold_label) {
      throw MissingGoldLabel("question \"" + q.id + "\" has no gold label");
    }
  }
}

namespace {

// RFC 4180-ish: quoted fields may hold the separator, doubled quotes escape.
std::vector<std::string> split_delimited(const std::string& line, char sep, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == sep) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(row, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

Question row_to_question(const std::string& id, const std::string& text,
                         const std::string& label, const std::string& source,
                         std::size_t row) {
  Question q;
  q.id = trim(id);
  if (q.id.empty()) throw ParseError(row, "missing id");
  q.text = trim(text);
  if (q.text.empty()) throw ParseError(row, "missing question text");
  const std::string label_trimmed = trim(label);
  if (!label_trimmed.empty()) {
    const auto parsed = try_parse_label(label_trimmed);
    if (!parsed) throw UnknownLabel("row " + std::to_string(row) + ": unknown label \"" + label_trimmed + "\"");
    q.gold_label = *parsed;
  }
  q.source = parse_source(source);
  return q;
}

Dataset load_jsonl(std::istream& in, const std::string& path, const ColumnMap& cols) {
  std::vector<Question> items;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(row, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(row, "expected a JSON object");
    auto field = [&](const std::string& name) -> std::string {
      if (!j.contains(name) || j[name].is_null()) return "";
      const auto& v = j[name];
      if (v.is_string()) return v.get<std::string>();
      return v.dump();
    };
    items.push_back(row_to_question(field(cols.id), field(cols.question),
                                    field(cols.label), field(cols.source), row));
  }
  return Dataset(std::move(items), path);
}

Dataset load_delimited(std::istream& in, const std::string& path, const ColumnMap& cols,
                       char sep) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  const auto header = split_delimited(strip_cr(line), sep, 1);
  auto col_index = [&](const std::string& name, bool required) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return static_cast<int>(i);
    }
    if (required) throw ParseError(1, "header has no column \"" + name + "\"");
    return -1;
  };
  const int id_col = col_index(cols.id, true);
  const int question_col = col_index(cols.question, true);
  const int label_col = col_index(cols.label, false);
  const int source_col = col_index(cols.source, false);

  std::vector<Question> items;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_delimited(line, sep, row);
    auto field = [&](int idx) -> std::string {
      if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size()) return "";
      return fields[static_cast<std::size_t>(idx)];
    };
    items.push_back(row_to_question(field(id_col), field(question_col), field(label_col),
                                    field(source_col), row));
  }
  return Dataset(std::move(items), path);
}

}  // namespace

Dataset load(const std::string& path, FileFormat format, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file \"" + path + "\"");
  switch (format) {
    case FileFormat::Jsonl: return load_jsonl(in, path, columns);
    case FileFormat::Csv: return load_delimited(in, path, columns, ',');
    case FileFormat::Tsv: return load_delimited(in, path, columns, '\t');
  }
  throw ConfigError("unhandled dataset format");
}

void save_jsonl(const Dataset& ds, std::ostream& out) {
  for (const auto& q : ds.items()) {
    nlohmann::ordered_json j;
    j["id"] = q.id;
    j["question"] = q.text;
    if (q.gold_label) {
      j["label"] = to_string(*q.gold_label);
    } else {
      j["label"] = nullptr;
    }
    j["source"] = to_string(q.source);
    out << j.dump() << '\n';
  }
}

void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file \"" + path + "\"");
  save_jsonl(ds, out);
}

DatasetStats stats(const Dataset& ds) {
  if (ds.empty()) throw EmptyDataset("dataset has no rows");
  DatasetStats s;
  s.total = ds.size();
  std::size_t words = 0;
  for (const auto& q : ds.items()) {
    if (q.gold_label == Label::Ambiguous) ++s.ambiguous;
    else if (q.gold_label == Label::Unambiguous) ++s.unambiguous;
    else ++s.unlabeled;
    words += count_words(q.text);
  }
  s.avg_question_length_words = static_cast<double>(words) / static_cast<double>(s.total);
  return s;
}

std::string stats_table(const DatasetStats& s) {
  char avg[32];
  std::snprintf(avg, sizeof(avg), "%.2f", s.avg_question_length_words);
  std::ostringstream out;
  out << "#Questions                       " << s.total << '\n'
      << "Ambiguous Questions              " << s.ambiguous << '\n'
      << "Unambiguous Questions            " << s.unambiguous << '\n';
  if (s.unlabeled > 0) {
    out << "Unlabeled Questions              " << s.unlabeled << '\n';
  }
  out << "Average question length (words)  " << avg << '\n';
  return out.str();
}

}  // namespace tempamb
