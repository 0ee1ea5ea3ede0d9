#include "logiformer/training.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "logiformer/explain.hpp"
#include "logiformer/synthetic.hpp"

namespace logiformer {
namespace {

const LexiconSet& lexicon() {
  static const LexiconSet lex = load_lexicon();
  return lex;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.d = 8;
  c.model.encoder_blocks = 1;
  c.model.max_len = 96;
  c.epochs = 2;
  c.batch_size = 4;
  c.learning_rate = 3e-3;
  c.seed = 5;
  return c;
}

struct TinyData {
  Vocabulary vocab;
  std::vector<ExampleRecord> train_records, valid_records;
  std::vector<PreparedExample> train, valid;
};

TinyData tiny_data(const ModelConfig& model) {
  TinyData t;
  t.train_records = generate_synthetic(1, 16, SynthMode::kMixed);
  t.valid_records = generate_synthetic(2, 8, SynthMode::kMixed);
  std::vector<std::string> texts;
  for (const auto& r : t.train_records) {
    texts.push_back(r.context);
    texts.push_back(r.question);
    texts.insert(texts.end(), r.options.begin(), r.options.end());
  }
  t.vocab = Vocabulary::build(texts);
  for (const auto& r : t.train_records)
    t.train.push_back(prepare_example(r, t.vocab, lexicon(), model.max_len, model.delta));
  for (const auto& r : t.valid_records)
    t.valid.push_back(prepare_example(r, t.vocab, lexicon(), model.max_len, model.delta));
  return t;
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Schedule, EndpointsAndPeak) {
  const std::size_t total = 100;
  EXPECT_EQ(learning_rate_at(0, total, 0.1, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(10, total, 0.1, 1e-3), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at(5, total, 0.1, 1e-3), 5e-4);
  EXPECT_NEAR(learning_rate_at(99, total, 0.1, 1e-3), 1e-3 / 90.0, 1e-18);
  EXPECT_EQ(learning_rate_at(100, total, 0.1, 1e-3), 0.0);
}

TEST(Schedule, ContinuousPiecewiseLinearWithMaximumAtWarmupBoundary) {
  const std::size_t total = 250;
  const double peak = 2.0;
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t s = 0; s <= total; ++s) {
    const double lr = learning_rate_at(s, total, 0.2, peak);
    if (lr > best) {
      best = lr;
      arg = s;
    }
    if (s > 0) {
      EXPECT_LE(std::abs(lr - learning_rate_at(s - 1, total, 0.2, peak)), peak / 50.0 + 1e-12);
    }
    if (s >= 2) {
      // Second difference vanishes away from the kink.
      const double d2 = lr - 2 * learning_rate_at(s - 1, total, 0.2, peak) + learning_rate_at(s - 2, total, 0.2, peak);
      if (s != 51) {
        EXPECT_NEAR(d2, 0.0, 1e-12) << s;
      }
    }
  }
  EXPECT_EQ(arg, 50u);
  EXPECT_EQ(best, peak);
}

TEST(Schedule, NoWarmupStartsAtPeak) { EXPECT_EQ(learning_rate_at(0, 10, 0.0, 1.0), 1.0); }

TEST(Adam, FirstStepMovesEachWeightByLearningRate) {
  Tensor<double> w(Shape{1, 3}, std::vector<double>{1.0, -2.0, 0.5});
  w.set_requires_grad(true);
  Adam<double> adam({w});
  sum(mul(w, Tensor<double>(Shape{1, 3}, std::vector<double>{3.0, -0.5, 0.0}))).backward();
  adam.step(0.1);
  // Bias-corrected first step: m_hat / sqrt(v_hat) = sign(g).
  EXPECT_NEAR(w(0, 0), 1.0 - 0.1 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(w(0, 1), -2.0 + 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(w(0, 2), 0.5);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, SecondStepMatchesRecurrence) {
  Tensor<double> w(Shape{1, 1}, 0.0);
  w.set_requires_grad(true);
  Adam<double> adam({w});
  const double g1 = 2.0, g2 = -1.0, lr = 0.01;
  w.mutable_grad()[0] = g1;
  adam.step(lr);
  const double after1 = w(0, 0);
  w.mutable_grad()[0] = g2;
  adam.step(lr);
  const double m = 0.9 * (0.1 * g1) + 0.1 * g2;
  const double v = 0.999 * (0.001 * g1 * g1) + 0.001 * g2 * g2;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(w(0, 0), after1 - lr * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
}

TEST(Clip, ScalesToMaxNorm) {
  Tensor<double> a(Shape{1, 2}, 0.0), b(Shape{1, 1}, 0.0);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  a.mutable_grad()[0] = 3.0;
  a.mutable_grad()[1] = 0.0;
  b.mutable_grad()[0] = 4.0;
  std::vector<Tensor<double>> params{a, b};
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
  EXPECT_DOUBLE_EQ(b.grad()[0], 0.8);
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
}

TEST(TrainConfig, ParsesFlatKeyValueText) {
  const auto c = parse_train_config(
      "# toy run\nlearning_rate = 0.002\nbatch_size=4\n gate = softmax2 \nuse_logic_bias = false\nprecision = f64\n");
  EXPECT_EQ(c.learning_rate, 0.002);
  EXPECT_EQ(c.batch_size, 4u);
  EXPECT_EQ(c.model.gate, GateMode::kTwoLogitSoftmax);
  EXPECT_FALSE(c.model.use_logic_bias);
  EXPECT_EQ(c.precision, Precision::kF64);
  EXPECT_EQ(c.epochs, TrainConfig{}.epochs);
}

TEST(TrainConfig, FormatParsesBack) {
  auto c = paper_config();
  c.model.pooling = Pooling::kMean;
  c.seed = 99;
  EXPECT_EQ(parse_train_config(format_train_config(c)), c);
}

TEST(TrainConfig, RejectsBadInput) {
  EXPECT_THROW(parse_train_config("nonsense = 1"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("epochs"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("epochs = two"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("epochs = -3"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("epochs = 0"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("warmup_fraction = 1.0"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("learning_rate = 0"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("gate = sigmoid"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("layers = 1"), std::invalid_argument);
  EXPECT_THROW(parse_train_config("use_logic_bias = maybe"), std::invalid_argument);
}

TEST(TrainConfig, PublishedPreset) {
  const auto c = paper_config();
  EXPECT_EQ(c.batch_size, 2u);
  EXPECT_EQ(c.epochs, 12u);
  EXPECT_EQ(c.learning_rate, 5e-6);
  EXPECT_EQ(c.model.heads, 5u);
  EXPECT_EQ(c.model.layers, 5u);
  EXPECT_EQ(c.model.max_len, 256u);
}

TEST(Evaluate, AccuracyIsARecountOfPredictions) {
  const auto config = tiny_config();
  auto data = tiny_data(config.model);
  const Logiformer<float> model(config.model, data.vocab.size(), 1);
  const auto m = evaluate(model, data.valid);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.valid.size(); ++i) correct += m.predictions[i] == *data.valid[i].label;
  EXPECT_EQ(m.correct, correct);
  EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(correct) / static_cast<double>(data.valid.size()));

  // Relabel with the model's own predictions: every answer is then correct.
  for (std::size_t i = 0; i < data.valid.size(); ++i) data.valid[i].label = m.predictions[i];
  EXPECT_EQ(evaluate(model, data.valid).accuracy, 1.0);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
  const auto config = tiny_config();
  const auto data = tiny_data(config.model);
  const Logiformer<float> model(config.model, data.vocab.size(), 1);
  const auto one = evaluate(model, data.train, 1);
  const auto three = evaluate(model, data.train, 3);
  EXPECT_EQ(one.predictions, three.predictions);
  EXPECT_EQ(one.accuracy, three.accuracy);
}

TEST(Evaluate, EmptyOrUnlabeledDataIsAnError) {
  const auto config = tiny_config();
  auto data = tiny_data(config.model);
  const Logiformer<float> model(config.model, data.vocab.size(), 1);
  EXPECT_THROW(evaluate(model, {}), std::invalid_argument);
  data.valid[0].label.reset();
  EXPECT_THROW(evaluate(model, data.valid), std::invalid_argument);
}

TEST(Train, IdenticalRunsGiveIdenticalCheckpointsAndMetrics) {
  const auto config = tiny_config();
  const auto data = tiny_data(config.model);
  std::vector<std::string> dumps, curves;
  for (int run = 0; run < 2; ++run) {
    Logiformer<float> model(config.model, data.vocab.size(), config.seed);
    const auto result = train(model, config, data.train, data.valid);
    dumps.push_back(model.parameters().to_json().dump());
    auto j = to_json(result.history);
    curves.push_back(j.dump());
  }
  EXPECT_EQ(dumps[0], dumps[1]);
  EXPECT_EQ(curves[0], curves[1]);
}

TEST(Train, RestoresBestValidationEpoch) {
  auto config = tiny_config();
  config.epochs = 3;
  const auto data = tiny_data(config.model);
  Logiformer<double> model(config.model, data.vocab.size(), config.seed);
  std::vector<double> seen;
  const auto result = train(model, config, data.train, data.valid, [&](const EpochMetrics& e) {
    seen.push_back(e.valid_accuracy);
  });
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(result.best_valid_accuracy, *std::max_element(seen.begin(), seen.end()));
  EXPECT_EQ(seen[result.best_epoch - 1], result.best_valid_accuracy);
  EXPECT_EQ(evaluate(model, data.valid).accuracy, result.best_valid_accuracy);
}

TEST(Train, LossDecreasesOnTinyData) {
  auto config = tiny_config();
  config.epochs = 8;
  const auto data = tiny_data(config.model);
  Logiformer<float> model(config.model, data.vocab.size(), config.seed);
  const auto result = train(model, config, data.train, {});
  const auto& h = result.history.history;
  EXPECT_LT(h.back().mean_loss, h.front().mean_loss);
}

TEST(Train, NonFiniteLossAborts) {
  const auto config = tiny_config();
  const auto data = tiny_data(config.model);
  Logiformer<float> model(config.model, data.vocab.size(), config.seed);
  model.parameters().at("decoder.head.out.bias").mutable_values()[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(train(model, config, data.train, data.valid), TrainingError);
}

TEST(Train, RejectsEmptyOrUnlabeledTrainingData) {
  const auto config = tiny_config();
  auto data = tiny_data(config.model);
  Logiformer<float> model(config.model, data.vocab.size(), config.seed);
  EXPECT_THROW(train(model, config, {}, data.valid), std::invalid_argument);
  data.train[3].label.reset();
  EXPECT_THROW(train(model, config, data.train, data.valid), std::invalid_argument);
}

TEST(Checkpoint, ModelFileRoundTrip) {
  auto config = tiny_config();
  config.epochs = 1;
  const auto data = tiny_data(config.model);
  Logiformer<float> model(config.model, data.vocab.size(), config.seed);
  train(model, config, data.train, {});
  const auto path = temp_path("logiformer_model_roundtrip.json");
  save_model(path, model, config, data.vocab);
  const auto info = read_model_file(path);
  EXPECT_EQ(info.config, config);
  EXPECT_EQ(info.vocab, data.vocab);
  EXPECT_EQ(Vocabulary::load(path.string() + ".vocab"), data.vocab);
  const auto loaded = instantiate<float>(info);
  for (const auto& ex : data.valid) {
    const auto a = model.scores(ex);
    const auto b = loaded.scores(ex);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".vocab");
}

TEST(Checkpoint, RejectsForeignFiles) {
  const auto path = temp_path("logiformer_not_a_model.json");
  std::ofstream(path) << R"({"format": "something-else", "version": 1})";
  EXPECT_THROW(read_model_file(path), CheckpointError);
  std::ofstream(path) << "not json";
  EXPECT_THROW(read_model_file(path), CheckpointError);
  std::filesystem::remove(path);
}

TEST(Explain, RunningExampleBundle) {
  const auto config = tiny_config();
  ExampleRecord record;
  record.id = "figure-1";
  record.context = slurp(std::filesystem::path(LOGIFORMER_TEST_DATA) / "running_example.txt");
  record.question = "Which one of the following must be true?";
  record.options = {"Paula will not visit the dentist tomorrow morning.", "Bill goes golfing in the morning."};
  record.label = 0;
  std::vector<std::string> texts{record.context, record.question, record.options[0], record.options[1]};
  const auto vocab = Vocabulary::build(texts);
  const auto prepared = prepare_example(record, vocab, lexicon(), 128, 0.5);
  const Logiformer<double> model(config.model, vocab.size(), 3);
  const auto dir = temp_path("logiformer_explain_test");
  std::filesystem::remove_all(dir);
  const auto doc = write_explanation(dir, model, record, prepared);

  const auto dot = slurp(dir / "option1_logic.dot");
  EXPECT_NE(dot.find("U2 -> U1"), std::string::npos) << dot;
  EXPECT_NE(dot.find("U4 -> U3"), std::string::npos) << dot;
  const auto& units = doc.at("options").at(0).at("units");
  ASSERT_GE(units.size(), 5u);
  EXPECT_TRUE(units.at(2).at("negated").get<bool>());
  EXPECT_TRUE(units.at(4).at("negated").get<bool>());
  EXPECT_FALSE(units.at(0).at("negated").get<bool>());
  EXPECT_EQ(doc.at("options").at(0).at("expression").get<std::string>().rfind("(U2→U1) ∧ (U4→¬U3) ∧ ¬U5", 0), 0u);

  for (const auto& option : doc.at("options")) {
    const auto& lambda = option.at("lambda");
    EXPECT_GT(lambda.at("min").get<double>(), 0.0);
    EXPECT_LT(lambda.at("max").get<double>(), 1.0);
    EXPECT_LE(lambda.at("min").get<double>(), lambda.at("mean").get<double>());
    for (const auto& map : option.at("attention").at("logic").at("maps")) {
      double lo = 1.0, hi = 0.0;
      for (const auto& row : map.at("matrix"))
        for (double v : row) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      EXPECT_EQ(lo, 0.0);
      EXPECT_EQ(hi, 1.0);
    }
  }

  // Raw CSV rows are attention distributions.
  std::ifstream csv(dir / "option1" / "logic" / "layer1_head1.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string cell;
    double s = 0.0;
    while (std::getline(cells, cell, ',')) s += std::stod(cell);
    EXPECT_NEAR(s, 1.0, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, prepared.options[0].logic.size());
  EXPECT_TRUE(std::filesystem::exists(dir / "explanation.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "option2_syntax.dot"));
  std::filesystem::remove_all(dir);
}

TEST(Explain, GateStatistics) {
  const auto s = gate_stats({0.2, 0.4, 0.9});
  EXPECT_DOUBLE_EQ(s.min, 0.2);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_DOUBLE_EQ(s.max, 0.9);
}

}  // namespace
}  // namespace logiformer
