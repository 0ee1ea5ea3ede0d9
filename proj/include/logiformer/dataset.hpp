#pragma once

// Multiple-choice dataset loading and validation.
//
// Field mapping (source -> ExampleRecord):
//   reclor-json  : id_string -> id, context, question, answers -> options, label
//   native-json  : id (or id_string), context, question, answers, label (optional)
//   logiqa-json  : id, text -> context, question, options, answer (index or "a".."d")
//                  one object per line or a top-level array
//   logiqa-text  : the original 8-line blocks (blank, answer letter, context,
//                  question, four "A." .. "D." option lines)

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "logiformer/example.hpp"

namespace logiformer {

enum class DatasetFormat { kReclorJson, kLogiqaJson, kLogiqaText, kNativeJson };

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

DatasetFormat parse_dataset_format(std::string_view name);
std::string to_string(DatasetFormat format);

/// Throws DatasetError naming the record id and field.
void validate_record(const ExampleRecord& record, bool require_label = false);

std::vector<ExampleRecord> parse_dataset(std::string_view text, DatasetFormat format);
std::vector<ExampleRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format);

nlohmann::json to_native_json(const std::vector<ExampleRecord>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<ExampleRecord>& records);

}  // namespace logiformer
