// Command-line front end: parse, synth, train, eval, explain.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "logiformer/dataset.hpp"
#include "logiformer/explain.hpp"
#include "logiformer/lexicon.hpp"
#include "logiformer/logic_graph.hpp"
#include "logiformer/synthetic.hpp"
#include "logiformer/syntax_graph.hpp"
#include "logiformer/training.hpp"

namespace lf = logiformer;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Invalid user input; mapped to exit code 1.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

lf::LexiconSet lexicon_from(const std::string& path, const std::string& mode) {
  if (path.empty()) return lf::load_lexicon();
  return lf::load_lexicon(path, mode == "replace" ? lf::LexiconMode::kReplace : lf::LexiconMode::kMerge);
}

std::vector<lf::PreparedExample> prepare_all(const std::vector<lf::ExampleRecord>& records, const lf::Vocabulary& vocab,
                                             const lf::LexiconSet& lexicon, const lf::ModelConfig& config) {
  std::vector<lf::PreparedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(lf::prepare_example(r, vocab, lexicon, config.max_len, config.delta));
  return out;
}

// ---- parse ----------------------------------------------------------------

struct ParseArgs {
  std::string text, file, lexicon, lexicon_mode = "merge";
  double delta = lf::kDefaultDelta;
};

int run_parse(const ParseArgs& a) {
  if (a.text.empty() == a.file.empty()) throw UsageError("parse: give exactly one of --text or --file");
  const std::string text = a.file.empty() ? a.text : read_file(a.file);
  const auto lexicon = lexicon_from(a.lexicon, a.lexicon_mode);
  const auto logic = lf::build_logic_graph(lf::split_logical_units(text, lexicon));
  const auto syntax = lf::build_syntax_graph(lf::split_sentence_nodes(text, lexicon), lexicon.stop_words(), a.delta);
  const nlohmann::json doc = {{"expression", lf::render(lf::derive_logical_expression(logic))},
                              {"logic_graph", lf::to_json(logic)},
                              {"syntax_graph", lf::to_json(syntax)},
                              {"delta", a.delta}};
  std::cout << doc.dump(2) << '\n';
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t size = 100;
  std::string mode = "mixed", out;
};

int run_synth(const SynthArgs& a) {
  const auto records = lf::generate_synthetic(a.seed, a.size, lf::parse_synth_mode(a.mode));
  lf::save_dataset(a.out, records);
  std::cerr << "wrote " << records.size() << " records to " << a.out << '\n';
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string config, train, valid, out, format = "native-json", lexicon, lexicon_mode = "merge";
  bool paper_config = false;
};

template <typename T>
int train_with(const lf::TrainConfig& config, const std::vector<lf::ExampleRecord>& train_records,
               const std::vector<lf::ExampleRecord>& valid_records, const lf::LexiconSet& lexicon,
               const std::string& out) {
  std::vector<std::string> texts;
  for (const auto& r : train_records) {
    texts.push_back(r.context);
    texts.push_back(r.question);
    texts.insert(texts.end(), r.options.begin(), r.options.end());
  }
  const auto vocab = lf::Vocabulary::build(texts);
  const auto train_data = prepare_all(train_records, vocab, lexicon, config.model);
  const auto valid_data = prepare_all(valid_records, vocab, lexicon, config.model);
  lf::Logiformer<T> model(config.model, vocab.size(), config.seed);
  std::cerr << "vocabulary " << vocab.size() << ", parameters " << model.parameters().scalar_count() << ", train "
            << train_data.size() << ", valid " << valid_data.size() << '\n';
  const auto result = lf::train(model, config, train_data, valid_data, [](const lf::EpochMetrics& e) {
    std::fprintf(stderr, "epoch %zu loss %.6f train %.4f valid %.4f (%.1fs)\n", e.epoch, e.mean_loss,
                 e.train_accuracy, e.valid_accuracy, e.seconds);
  });
  lf::save_model(out, model, config, vocab);
  auto metrics = lf::to_json(result.history);
  metrics["best_epoch"] = result.best_epoch;
  metrics["best_valid_accuracy"] = result.best_valid_accuracy;
  write_file(out + ".metrics.json", metrics.dump(2) + "\n");
  std::cout << metrics.dump(2) << '\n';
  return 0;
}

int run_train(const TrainArgs& a) {
  lf::TrainConfig config = a.paper_config ? lf::paper_config() : lf::TrainConfig{};
  if (!a.config.empty()) config = lf::parse_train_config(read_file(a.config), config);
  lf::validate(config);
  const auto format = lf::parse_dataset_format(a.format);
  const auto train_records = lf::load_dataset(a.train, format);
  const auto valid_records = a.valid.empty() ? std::vector<lf::ExampleRecord>{} : lf::load_dataset(a.valid, format);
  for (const auto& r : train_records) lf::validate_record(r, true);
  for (const auto& r : valid_records) lf::validate_record(r, true);
  const auto lexicon = lexicon_from(a.lexicon, a.lexicon_mode);
  return config.precision == lf::Precision::kF64
             ? train_with<double>(config, train_records, valid_records, lexicon, a.out)
             : train_with<float>(config, train_records, valid_records, lexicon, a.out);
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string params, data, format = "native-json", lexicon, lexicon_mode = "merge";
  std::size_t threads = 1;
};

template <typename T>
int eval_with(const lf::LoadedModelInfo& info, const std::vector<lf::ExampleRecord>& records,
              const lf::LexiconSet& lexicon, std::size_t threads) {
  const auto model = lf::instantiate<T>(info);
  const auto data = prepare_all(records, info.vocab, lexicon, info.config.model);
  std::cout << lf::to_json(lf::evaluate(model, data, threads)).dump(2) << '\n';
  return 0;
}

int run_eval(const EvalArgs& a) {
  const auto info = lf::read_model_file(a.params);
  const auto records = lf::load_dataset(a.data, lf::parse_dataset_format(a.format));
  for (const auto& r : records) lf::validate_record(r, true);
  const auto lexicon = lexicon_from(a.lexicon, a.lexicon_mode);
  return info.config.precision == lf::Precision::kF64 ? eval_with<double>(info, records, lexicon, a.threads)
                                                      : eval_with<float>(info, records, lexicon, a.threads);
}

// ---- explain --------------------------------------------------------------

struct ExplainArgs {
  std::string params, example, out_dir, format = "native-json", lexicon, lexicon_mode = "merge";
  std::size_t index = 0;
};

template <typename T>
int explain_with(const lf::LoadedModelInfo& info, const lf::ExampleRecord& record, const lf::LexiconSet& lexicon,
                 const std::string& out_dir) {
  const auto model = lf::instantiate<T>(info);
  const auto prepared =
      lf::prepare_example(record, info.vocab, lexicon, info.config.model.max_len, info.config.model.delta);
  const auto doc = lf::write_explanation(out_dir, model, record, prepared);
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int run_explain(const ExplainArgs& a) {
  const auto info = lf::read_model_file(a.params);
  const auto records = lf::load_dataset(a.example, lf::parse_dataset_format(a.format));
  if (a.index >= records.size())
    throw UsageError("explain: --index " + std::to_string(a.index) + " but the file has " +
                     std::to_string(records.size()) + " records");
  const auto lexicon = lexicon_from(a.lexicon, a.lexicon_mode);
  const auto& record = records[a.index];
  return info.config.precision == lf::Precision::kF64 ? explain_with<double>(info, record, lexicon, a.out_dir)
                                                      : explain_with<float>(info, record, lexicon, a.out_dir);
}

void add_lexicon_options(CLI::App* app, std::string& path, std::string& mode) {
  app->add_option("--lexicon", path, "Lexicon TSV file layered over the defaults");
  app->add_option("--lexicon-mode", mode, "merge or replace")->check(CLI::IsMember({"merge", "replace"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-branch graph transformer for multiple-choice logical reasoning"};
  app.require_subcommand(1);

  ParseArgs parse_args;
  auto* parse = app.add_subcommand("parse", "Segment text and print both graphs as JSON");
  parse->add_option("--text", parse_args.text, "Input text");
  parse->add_option("--file", parse_args.file, "Input file");
  parse->add_option("--delta", parse_args.delta, "Overlap threshold for syntax edges")->check(CLI::Range(0.0, 1.0));
  add_lexicon_options(parse, parse_args.lexicon, parse_args.lexicon_mode);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (native JSON)");
  synth->add_option("--seed", synth_args.seed, "Random seed");
  synth->add_option("--size", synth_args.size, "Number of records")->check(CLI::PositiveNumber);
  synth->add_option("--mode", synth_args.mode, "causal-chain, cooccurrence or mixed")
      ->check(CLI::IsMember({"causal-chain", "cooccurrence", "mixed"}));
  synth->add_option("--out", synth_args.out, "Output file")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train and write a model checkpoint");
  train->add_option("--config", train_args.config, "key = value configuration file");
  train->add_flag("--paper-config", train_args.paper_config, "Start from the published hyper-parameters");
  train->add_option("--train", train_args.train, "Training data")->required();
  train->add_option("--valid", train_args.valid, "Validation data used for checkpoint selection");
  train->add_option("--out", train_args.out, "Checkpoint path")->required();
  train->add_option("--format", train_args.format, "reclor-json, logiqa-json, logiqa-text or native-json");
  add_lexicon_options(train, train_args.lexicon, train_args.lexicon_mode);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a labelled dataset");
  eval->add_option("--params", eval_args.params, "Checkpoint")->required();
  eval->add_option("--data", eval_args.data, "Dataset")->required();
  eval->add_option("--format", eval_args.format, "Dataset format");
  eval->add_option("--threads", eval_args.threads, "Worker threads")->check(CLI::PositiveNumber);
  add_lexicon_options(eval, eval_args.lexicon, eval_args.lexicon_mode);

  ExplainArgs explain_args;
  auto* explain = app.add_subcommand("explain", "Write graphs, attention maps and gate statistics for one example");
  explain->add_option("--params", explain_args.params, "Checkpoint")->required();
  explain->add_option("--example", explain_args.example, "Dataset file holding the example")->required();
  explain->add_option("--index", explain_args.index, "Record index within the file");
  explain->add_option("--out-dir", explain_args.out_dir, "Output directory")->required();
  explain->add_option("--format", explain_args.format, "Dataset format");
  add_lexicon_options(explain, explain_args.lexicon, explain_args.lexicon_mode);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*parse) return run_parse(parse_args);
    if (*synth) return run_synth(synth_args);
    if (*train) return run_train(train_args);
    if (*eval) return run_eval(eval_args);
    if (*explain) return run_explain(explain_args);
  } catch (const lf::DatasetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const lf::LexiconParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const lf::LexiconValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
