#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "tempamb/domain.hpp"

namespace tempamb {

enum class FileFormat { Jsonl, Csv, Tsv };

FileFormat parse_format(std::string_view s);  // "jsonl" | "csv" | "tsv"
std::string to_string(FileFormat f);

/// Field names in the input file; override when the file's headers differ.
struct ColumnMap {
  std::string id = "id";
  std::string question = "question";
  std::string label = "label";
  std::string source = "source";
};

class Dataset {
public:
  Dataset() = default;
  Dataset(std::vector<Question> items, std::string source_path);

  const std::vector<Question>& items() const { return items_; }
  const std::string& source_path() const { return source_path_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  const Question* find(const std::string& id) const;

  /// Throws MissingGoldLabel naming the first unlabeled question.
  void require_gold_labels() const;

private:
  std::vector<Question> items_;
  std::string source_path_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Rows missing text are rejected with the row number; label strings parse
/// case-insensitively; rows without a label stay unlabeled.
Dataset load(const std::string& path, FileFormat format, const ColumnMap& columns = {});

void save_jsonl(const Dataset& ds, std::ostream& out);
void save_jsonl(const Dataset& ds, const std::string& path);

struct DatasetStats {
  std::size_t total = 0;
  std::size_t ambiguous = 0;
  std::size_t unambiguous = 0;
  std::size_t unlabeled = 0;
  double avg_question_length_words = 0.0;
};

DatasetStats stats(const Dataset& ds);  // throws EmptyDataset

/// Aligned text block listing the counts above.
std::string stats_table(const DatasetStats& s);

}  // namespace tempamb
