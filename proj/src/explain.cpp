#include "logiformer/explain.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace logiformer {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json units_json(const SegmentationResult& seg) {
  auto out = nlohmann::json::array();
  for (const auto& u : seg.units) out.push_back({{"id", u.id}, {"text", u.text}, {"negated", u.negated}});
  return out;
}

template <typename T>
nlohmann::json option_json(const Logiformer<T>& model, const std::string& text, const PreparedOption& option,
                           OptionTrace<T>& trace) {
  NoGradGuard guard;
  const double score = model.score_option(option, &trace).item();
  const auto stats = gate_stats(trace.lambda);
  return {{"option", text},
          {"score", score},
          {"units", units_json(option.sequence.units)},
          {"expression", render(derive_logical_expression(option.logic))},
          {"logic_graph", to_json(option.logic)},
          {"logic_dot", to_dot(option.logic)},
          {"syntax_graph", to_json(option.syntax)},
          {"syntax_dot", to_dot(option.syntax)},
          {"attention", {{"logic", trace.logic.to_json(true)}, {"syntax", trace.syntax.to_json(true)}}},
          {"lambda", {{"min", stats.min}, {"mean", stats.mean}, {"max", stats.max}}}};
}

}  // namespace

GateStats gate_stats(const std::vector<double>& lambda) {
  if (lambda.empty()) return {};
  const auto [lo, hi] = std::minmax_element(lambda.begin(), lambda.end());
  return {*lo, std::accumulate(lambda.begin(), lambda.end(), 0.0) / static_cast<double>(lambda.size()), *hi};
}

template <typename T>
nlohmann::json explain_example(const Logiformer<T>& model, const ExampleRecord& record,
                               const PreparedExample& prepared) {
  if (record.options.size() != prepared.options.size())
    throw std::invalid_argument("explain_example: option count mismatch for " + record.id);
  nlohmann::json doc = {{"id", record.id}, {"context", record.context}, {"question", record.question}};
  std::vector<double> scores;
  auto options = nlohmann::json::array();
  for (std::size_t i = 0; i < prepared.options.size(); ++i) {
    OptionTrace<T> trace;
    options.push_back(option_json(model, record.options[i], prepared.options[i], trace));
    scores.push_back(options.back().at("score").template get<double>());
  }
  doc["options"] = std::move(options);
  doc["prediction"] = predict(scores);
  doc["label"] = record.label ? nlohmann::json(*record.label) : nlohmann::json(nullptr);
  return doc;
}

template <typename T>
nlohmann::json write_explanation(const std::filesystem::path& dir, const Logiformer<T>& model,
                                 const ExampleRecord& record, const PreparedExample& prepared) {
  std::filesystem::create_directories(dir);
  const auto doc = explain_example(model, record, prepared);
  for (std::size_t i = 0; i < prepared.options.size(); ++i) {
    const std::string stem = "option" + std::to_string(i + 1);
    const auto& entry = doc.at("options").at(i);
    write_text(dir / (stem + "_logic.dot"), entry.at("logic_dot").template get<std::string>());
    write_text(dir / (stem + "_syntax.dot"), entry.at("syntax_dot").template get<std::string>());
    OptionTrace<T> trace;
    {
      NoGradGuard guard;
      model.score_option(prepared.options[i], &trace);
    }
    for (const auto& [branch, t] : {std::pair{"logic", &trace.logic}, std::pair{"syntax", &trace.syntax}}) {
      const auto sub = dir / stem / branch;
      std::filesystem::create_directories(sub);
      t->write_csv(sub, false);
    }
  }
  write_text(dir / "explanation.json", doc.dump(2) + "\n");
  return doc;
}

template nlohmann::json explain_example<float>(const Logiformer<float>&, const ExampleRecord&,
                                               const PreparedExample&);
template nlohmann::json explain_example<double>(const Logiformer<double>&, const ExampleRecord&,
                                                const PreparedExample&);
template nlohmann::json write_explanation<float>(const std::filesystem::path&, const Logiformer<float>&,
                                                 const ExampleRecord&, const PreparedExample&);
template nlohmann::json write_explanation<double>(const std::filesystem::path&, const Logiformer<double>&,
                                                  const ExampleRecord&, const PreparedExample&);

}  // namespace logiformer
