#include "logiformer/dataset.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace logiformer {

namespace {

std::string record_name(const ExampleRecord& r, std::size_t index) {
  return r.id.empty() ? "#" + std::to_string(index) : r.id;
}

const nlohmann::json& field(const nlohmann::json& obj, const char* name, const std::string& record) {
  if (!obj.is_object()) throw DatasetError("record " + record + ": expected an object");
  const auto it = obj.find(name);
  if (it == obj.end()) throw DatasetError("record " + record + ": missing field '" + name + "'");
  return *it;
}

std::string string_field(const nlohmann::json& obj, const char* name, const std::string& record) {
  const auto& v = field(obj, name, record);
  if (!v.is_string()) throw DatasetError("record " + record + ": field '" + name + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& obj, const char* name, const std::string& record) {
  const auto& v = field(obj, name, record);
  if (!v.is_array()) throw DatasetError("record " + record + ": field '" + name + "' must be an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw DatasetError("record " + record + ": field '" + name + "' must hold strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::size_t label_value(const nlohmann::json& v, const std::string& record, const char* name) {
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i < 0) throw DatasetError("record " + record + ": field '" + name + "' is negative");
    return static_cast<std::size_t>(i);
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0])))
      return static_cast<std::size_t>(std::tolower(static_cast<unsigned char>(s[0])) - 'a');
  }
  throw DatasetError("record " + record + ": field '" + name + "' must be an index or a letter");
}

std::string id_of(const nlohmann::json& obj, std::size_t index) {
  for (const char* key : {"id", "id_string"}) {
    if (obj.is_object() && obj.contains(key)) {
      const auto& v = obj.at(key);
      return v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return "#" + std::to_string(index);
}

std::vector<nlohmann::json> json_items(std::string_view text, bool allow_lines) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  try {
    if (text[first] == '[') {
      const auto arr = nlohmann::json::parse(text);
      return {arr.begin(), arr.end()};
    }
    if (!allow_lines) throw DatasetError("expected a top-level JSON array");
    std::vector<nlohmann::json> items;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos) items.push_back(nlohmann::json::parse(line));
    return items;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed JSON: ") + e.what());
  }
}

ExampleRecord from_reclor_like(const nlohmann::json& obj, std::size_t index, bool label_required) {
  ExampleRecord r;
  r.id = id_of(obj, index);
  r.context = string_field(obj, "context", r.id);
  r.question = string_field(obj, "question", r.id);
  r.options = string_list(obj, "answers", r.id);
  if (obj.contains("label") && !obj.at("label").is_null()) {
    r.label = label_value(obj.at("label"), r.id, "label");
  } else if (label_required) {
    throw DatasetError("record " + r.id + ": missing field 'label'");
  }
  return r;
}

ExampleRecord from_logiqa_json(const nlohmann::json& obj, std::size_t index) {
  ExampleRecord r;
  r.id = id_of(obj, index);
  r.context = string_field(obj, "text", r.id);
  r.question = string_field(obj, "question", r.id);
  r.options = string_list(obj, "options", r.id);
  if (obj.contains("answer") && !obj.at("answer").is_null()) r.label = label_value(obj.at("answer"), r.id, "answer");
  return r;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<ExampleRecord> parse_logiqa_text(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) lines.push_back(trim(line));
  std::vector<ExampleRecord> records;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    const std::string id = "logiqa-" + std::to_string(records.size());
    if (i + 6 > lines.size()) throw DatasetError("record " + id + ": truncated block at line " + std::to_string(i + 1));
    ExampleRecord r;
    r.id = id;
    r.label = label_value(nlohmann::json(lines[i]), id, "answer");
    r.context = lines[i + 1];
    r.question = lines[i + 2];
    for (std::size_t k = 0; k < 4; ++k) {
      const std::string& opt = lines[i + 3 + k];
      const char expected = static_cast<char>('A' + k);
      if (opt.size() < 2 || std::toupper(static_cast<unsigned char>(opt[0])) != expected || opt[1] != '.')
        throw DatasetError("record " + id + ": option " + std::string(1, expected) + " malformed at line " +
                           std::to_string(i + 4 + k));
      r.options.push_back(trim(opt.substr(2)));
    }
    records.push_back(std::move(r));
    i += 7;
  }
  return records;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "reclor-json") return DatasetFormat::kReclorJson;
  if (name == "logiqa-json") return DatasetFormat::kLogiqaJson;
  if (name == "logiqa-text") return DatasetFormat::kLogiqaText;
  if (name == "native-json") return DatasetFormat::kNativeJson;
  throw DatasetError("unknown dataset format '" + std::string(name) + "'");
}

std::string to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kReclorJson:
      return "reclor-json";
    case DatasetFormat::kLogiqaJson:
      return "logiqa-json";
    case DatasetFormat::kLogiqaText:
      return "logiqa-text";
    case DatasetFormat::kNativeJson:
      return "native-json";
  }
  return "native-json";
}

void validate_record(const ExampleRecord& r, bool require_label) {
  if (r.options.size() < 2)
    throw DatasetError("record " + r.id + ": field 'options' needs at least 2 entries, has " +
                       std::to_string(r.options.size()));
  for (std::size_t i = 0; i < r.options.size(); ++i)
    if (r.options[i].find_first_not_of(" \t\r\n") == std::string::npos)
      throw DatasetError("record " + r.id + ": option " + std::to_string(i) + " is empty");
  if (r.label && *r.label >= r.options.size())
    throw DatasetError("record " + r.id + ": field 'label' is " + std::to_string(*r.label) + " but there are " +
                       std::to_string(r.options.size()) + " options");
  if (require_label && !r.label) throw DatasetError("record " + r.id + ": missing field 'label'");
}

std::vector<ExampleRecord> parse_dataset(std::string_view text, DatasetFormat format) {
  std::vector<ExampleRecord> records;
  if (format == DatasetFormat::kLogiqaText) {
    records = parse_logiqa_text(text);
  } else {
    const auto items = json_items(text, format == DatasetFormat::kLogiqaJson);
    for (std::size_t i = 0; i < items.size(); ++i) {
      records.push_back(format == DatasetFormat::kLogiqaJson
                            ? from_logiqa_json(items[i], i)
                            : from_reclor_like(items[i], i, format == DatasetFormat::kReclorJson));
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id.empty()) records[i].id = record_name(records[i], i);
    validate_record(records[i]);
  }
  return records;
}

std::vector<ExampleRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_dataset(s.str(), format);
}

nlohmann::json to_native_json(const std::vector<ExampleRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json obj = {{"id", r.id}, {"context", r.context}, {"question", r.question}, {"answers", r.options}};
    obj["label"] = r.label ? nlohmann::json(*r.label) : nlohmann::json(nullptr);
    arr.push_back(std::move(obj));
  }
  return arr;
}

void save_dataset(const std::filesystem::path& path, const std::vector<ExampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << to_native_json(records).dump(1) << '\n';
}

}  // namespace logiformer
