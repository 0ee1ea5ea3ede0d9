// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// fails. Optional arguments restrict the run to the named criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "logiformer/decoder.hpp"
#include "logiformer/grad_check.hpp"
#include "logiformer/graph_transformer.hpp"
#include "logiformer/logic_graph.hpp"
#include "logiformer/model.hpp"
#include "logiformer/syntax_graph.hpp"
#include "logiformer/synthetic.hpp"
#include "logiformer/training.hpp"
#include "support/reference.hpp"
#include "support/syntax_oracle.hpp"

namespace {

using namespace logiformer;
namespace ref = logiformer::reference;

// Tolerances and budgets.
constexpr double kRunningExampleSeconds = 1.0;
constexpr double kSyntaxOracleSeconds = 5.0;
constexpr double kZeroBiasTolerance = 1e-10;
constexpr double kGradStep = 1e-5;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradFloor = 1e-6;
constexpr double kGradSeconds = 120.0;
constexpr double kSoftmaxTolerance = 1e-12;
constexpr double kLayerNormMeanTolerance = 1e-9;
constexpr double kFuseTolerance = 1e-12;
constexpr double kUntrainedLow = 0.20;
constexpr double kUntrainedHigh = 0.30;
constexpr double kDeskTrainAccuracy = 0.95;
constexpr double kDeskHeldOutAccuracy = 0.80;
constexpr double kDeskSeconds = 600.0;
constexpr double kAblationDrop = 0.10;

// Desk-scale experiment setup.
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::uint64_t kHeldOutSeed = 2;
constexpr std::uint64_t kSelectionSeed = 3;
constexpr std::size_t kTrainSize = 500;
constexpr std::size_t kHeldOutSize = 200;
constexpr std::size_t kSelectionSize = 100;
constexpr std::size_t kDeskEpochs = 15;
constexpr std::size_t kAblationEpochs = 12;
constexpr std::size_t kDeskMaxLen = 128;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const LexiconSet& lexicon() {
  static const LexiconSet lex = load_lexicon();
  return lex;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::filesystem::path kData = LOGIFORMER_TEST_DATA;

// ---------------------------------------------------------------------------

// Renders the parse in the golden file layout.
std::string golden_text(const LogicGraph& g) {
  std::string out;
  for (const auto& u : g.nodes) out += "U" + std::to_string(u.id) + "\t" + u.text + "\n";
  for (const auto& p : g.pairs)
    out += "pair\tU" + std::to_string(p.condition_id) + "→U" + std::to_string(p.result_id) + "\n";
  for (const auto& u : g.nodes)
    if (u.negated) out += "negated\tU" + std::to_string(u.id) + "\n";
  out += "expression\t" + render(derive_logical_expression(g)) + "\n";
  return out;
}

Outcome running_example() {
  const auto t0 = Clock::now();
  const auto g = build_logic_graph(split_logical_units(slurp(kData / "running_example.txt"), lexicon()));
  const auto text = golden_text(g);
  const double secs = seconds_since(t0);
  const bool match = text == slurp(kData / "running_example.golden");
  return {match && secs < kRunningExampleSeconds,
          fmt("golden %s, %zu units, %.3f s", match ? "byte-exact" : "MISMATCH", g.size(), secs)};
}

Outcome syntax_oracle() {
  const auto t0 = Clock::now();
  std::mt19937 rng(7001);
  std::size_t entries = 0, mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto nodes = ref::random_nodes(rng, 3 + rng() % 10, 30);
    for (double delta : {0.3, 0.5, 0.7}) {
      const auto got = build_syntax_graph(nodes, lexicon().stop_words(), delta).adjacency;
      const auto want = ref::brute_force_syntax(nodes, lexicon().stop_words(), delta);
      for (std::size_t i = 0; i < want.data().size(); ++i) mismatches += got.data()[i] != want.data()[i];
      entries += want.data().size();
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kSyntaxOracleSeconds,
          fmt("%zu mismatched of %zu entries, %.2f s", mismatches, entries, secs)};
}

std::string random_text(std::mt19937& rng) {
  static const std::vector<std::string> words{
      "bill", "goes", "golfing", "not", "never", "if", "unless", "because", "therefore", "so", "only", "however",
      "then", "the", "morning", "paula", "visits", "dentist", "damien", "agrees", "no", "since", "thus", "when",
      "rain", "wet", "ground", "match", "cancelled", "of", "a", ".", ".", ",", ";"};
  std::string text;
  const int n = 1 + static_cast<int>(rng() % 40);
  for (int i = 0; i < n; ++i) text += words[rng() % words.size()] + " ";
  return text;
}

Outcome adjacency_fuzz() {
  std::mt19937 rng(7002);
  std::size_t violations = 0;
  const auto bad = [&](bool cond) { violations += cond ? 1 : 0; };
  for (int trial = 0; trial < 1000; ++trial) {
    const auto text = random_text(rng);
    const auto cas = build_logic_graph(split_logical_units(text, lexicon())).adjacency;
    for (std::size_t r = 0; r < cas.size(); ++r)
      for (std::size_t c = 0; c < cas.size(); ++c) {
        const int v = cas.at(r, c);
        bad(v < -1 || v > 1);
        if (r == c) bad(v == 1);
        if (r != c) bad(v == -1);
      }
    const auto nodes = split_sentence_nodes(text, lexicon());
    std::vector<AdjacencyMatrix> occ;
    for (double delta : {0.3, 0.5, 0.7}) occ.push_back(build_syntax_graph(nodes, lexicon().stop_words(), delta).adjacency);
    for (const auto& m : occ) {
      bad(!m.symmetric());
      for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < m.size(); ++c) {
          const int v = m.at(r, c);
          bad(v != 0 && v != 1);
          if (r == c) bad(v != 0);
        }
    }
    // Raising delta only removes edges.
    for (std::size_t k = 1; k < occ.size(); ++k)
      for (std::size_t i = 0; i < occ[k].data().size(); ++i) bad(occ[k].data()[i] > occ[k - 1].data()[i]);
  }
  return {violations == 0, fmt("%zu violations over 1000 texts", violations)};
}

template <typename T>
void randomize(ParameterStore<T>& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto [name, t] : store.tensors()) {
    const bool gain = name.ends_with(".gamma");
    for (T& v : t.mutable_values()) v = static_cast<T>(gain ? 1.0 + u(rng) : u(rng));
  }
}

Tensor<double> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0,
                             double offset = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(offset, scale);
  std::vector<double> v(r * c);
  for (double& x : v) x = n(rng);
  return Tensor<double>(Shape{r, c}, v);
}

Outcome zero_bias() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ParameterStore<double> store;
    std::mt19937_64 rng(seed);
    const GraphTransformer<double> gt(store, "branch", {8, 2, 2, BranchFusion::kSum}, rng);
    randomize(store, seed + 100);
    const auto x = random_matrix(6, 8, seed + 200);
    const auto out = gt.run(x, Tensor<double>::zeros(6, 6));
    worst = std::max(worst, ref::max_abs_diff(ref::to_mat(out.features),
                                              ref::unbiased_graph_stack(ref::to_mat(x), store, "branch", 2, 2)));
  }
  return {worst < kZeroBiasTolerance, fmt("max abs diff %.3e over 5 seeds (K=6, d=8, H=2, L=2)", worst)};
}

ExampleRecord toy_record() {
  ExampleRecord r;
  r.id = "toy";
  r.context = "If it rains, the ground is wet. The ground is not wet.";
  r.question = "What follows ?";
  r.options = {"it does not rain", "it rains", "the ground is wet"};
  r.label = 0;
  return r;
}

Vocabulary vocabulary_of(const std::vector<ExampleRecord>& records) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    texts.push_back(r.context);
    texts.push_back(r.question);
    texts.insert(texts.end(), r.options.begin(), r.options.end());
  }
  return Vocabulary::build(texts);
}

ModelConfig toy_model() {
  ModelConfig c;
  c.d = 8;
  c.heads = 2;
  c.layers = 2;
  c.encoder_blocks = 1;
  c.encoder_heads = 2;
  c.max_len = 32;
  return c;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto record = toy_record();
  const auto vocab = vocabulary_of({record});
  const auto config = toy_model();
  const auto example = prepare_example(record, vocab, lexicon(), config.max_len, config.delta);
  std::size_t n = 0;
  for (const auto& o : example.options) n = std::max(n, o.sequence.size());
  Logiformer<double> model(config, vocab.size(), 7);
  randomize(model.parameters(), 8);
  auto params = model.parameters().list();
  const auto r = grad_check<double>([&] { return model.loss(example); }, params, kGradStep, 0, kGradFloor);
  const double secs = seconds_since(t0);
  return {r.max_relative_error < kGradTolerance && n <= 32 && secs < kGradSeconds,
          fmt("max rel err %.2e over all %zu entries (N=%zu, floor %.0e, worst parameter %zu), %.1f s", r.max_relative_error,
              r.entries_checked, n, kGradFloor, r.worst_parameter, secs)};
}

Outcome numeric_invariants() {
  double softmax_err = 0.0, ln_mean = 0.0, fuse_diff = 0.0;
  double lambda_lo = 1.0, lambda_hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double scale = seed % 2 ? 1.0 : 30.0;
    const auto s = softmax_rows(random_matrix(7, 11, seed, scale));
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < s.cols(); ++c) sum += s(r, c);
      softmax_err = std::max(softmax_err, std::abs(sum - 1.0));
    }
    const auto ln = layer_norm_rows(random_matrix(5, 64, seed + 50, scale, 100.0), 1e-5);
    for (std::size_t r = 0; r < ln.rows(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < ln.cols(); ++c) sum += ln(r, c);
      ln_mean = std::max(ln_mean, std::abs(sum / static_cast<double>(ln.cols())));
    }
    ParameterStore<double> store;
    auto affine = LayerNorm<double>::create(store, "ln", 6);
    randomize(store, seed + 70);
    const auto vt = random_matrix(4, 6, seed + 80);
    const auto branch = random_matrix(4, 6, seed + 90);
    const auto a = fuse(vt, branch, branch, Tensor<double>::full(4, 1, 0.03), affine);
    const auto b = fuse(vt, branch, branch, Tensor<double>::full(4, 1, 0.97), affine);
    fuse_diff = std::max(fuse_diff, ref::max_abs_diff(ref::to_mat(a), ref::to_mat(b)));
  }
  // Gate values and attention rows of a full model on synthetic data.
  const auto records = generate_synthetic(11, 20, SynthMode::kMixed);
  const auto vocab = vocabulary_of(records);
  ModelConfig config;
  config.d = 16;
  config.max_len = kDeskMaxLen;
  const Logiformer<double> model(config, vocab.size(), 4);
  for (const auto& record : records) {
    const auto ex = prepare_example(record, vocab, lexicon(), config.max_len, config.delta);
    for (const auto& option : ex.options) {
      OptionTrace<double> trace;
      model.score_option(option, &trace);
      for (double l : trace.lambda) {
        lambda_lo = std::min(lambda_lo, l);
        lambda_hi = std::max(lambda_hi, l);
      }
      for (const auto* t : {&trace.logic, &trace.syntax})
        for (const auto& m : t->matrices)
          for (std::size_t r = 0; r < t->nodes; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < t->nodes; ++c) sum += m[r * t->nodes + c];
            softmax_err = std::max(softmax_err, std::abs(sum - 1.0));
          }
    }
  }
  const bool pass = softmax_err <= kSoftmaxTolerance && ln_mean <= kLayerNormMeanTolerance && lambda_lo > 0.0 &&
                    lambda_hi < 1.0 && fuse_diff <= kFuseTolerance;
  return {pass, fmt("softmax %.1e, LN mean %.1e, lambda in [%.4f, %.4f], fuse diff %.1e", softmax_err, ln_mean,
                    lambda_lo, lambda_hi, fuse_diff)};
}

std::vector<PreparedExample> prepare_all(const std::vector<ExampleRecord>& records, const Vocabulary& vocab,
                                         const ModelConfig& config) {
  std::vector<PreparedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(prepare_example(r, vocab, lexicon(), config.max_len, config.delta));
  return out;
}

Outcome untrained_accuracy() {
  const auto records = generate_synthetic(9, 1000, SynthMode::kMixed);
  const auto vocab = vocabulary_of(records);
  TrainConfig config;
  config.model.max_len = kDeskMaxLen;
  const Logiformer<float> model(config.model, vocab.size(), config.seed);
  const auto m = evaluate(model, prepare_all(records, vocab, config.model));
  return {m.accuracy >= kUntrainedLow && m.accuracy <= kUntrainedHigh,
          fmt("accuracy %.3f (%zu/%zu)", m.accuracy, m.correct, m.total)};
}

struct RunResult {
  double train_accuracy = 0.0;
  double held_out_accuracy = 0.0;
  std::size_t best_epoch = 0;
  double seconds = 0.0;
};

// Trains on seed-1 data, selects the epoch on a separate seed-3 split and
// reports seed-2 held-out accuracy.
RunResult desk_run(SynthMode mode, TrainConfig config, const char* tag) {
  const auto t0 = Clock::now();
  const auto train_records = generate_synthetic(kTrainSeed, kTrainSize, mode);
  const auto vocab = vocabulary_of(train_records);
  const auto train_set = prepare_all(train_records, vocab, config.model);
  const auto held_out = prepare_all(generate_synthetic(kHeldOutSeed, kHeldOutSize, mode), vocab, config.model);
  const auto selection = prepare_all(generate_synthetic(kSelectionSeed, kSelectionSize, mode), vocab, config.model);
  Logiformer<float> model(config.model, vocab.size(), config.seed);
  const auto result = train(model, config, train_set, selection, [&](const EpochMetrics& e) {
    std::fprintf(stderr, "  [%s] epoch %zu loss %.4f train %.3f select %.3f (%.1f s)\n", tag, e.epoch, e.mean_loss,
                 e.train_accuracy, e.valid_accuracy, e.seconds);
  });
  RunResult r;
  r.train_accuracy = evaluate(model, train_set).accuracy;
  r.held_out_accuracy = evaluate(model, held_out).accuracy;
  r.best_epoch = result.best_epoch;
  r.seconds = seconds_since(t0);
  return r;
}

TrainConfig desk_config(std::size_t epochs) {
  TrainConfig c;
  c.model.d = 64;
  c.model.heads = 2;
  c.model.layers = 2;
  c.model.max_len = kDeskMaxLen;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.epochs = epochs;
  return c;
}

Outcome desk_learning() {
  const auto r = desk_run(SynthMode::kMixed, desk_config(kDeskEpochs), "mixed");
  return {r.train_accuracy >= kDeskTrainAccuracy && r.held_out_accuracy >= kDeskHeldOutAccuracy &&
              r.seconds < kDeskSeconds,
          fmt("train %.3f, held-out %.3f, best epoch %zu of %zu, %.0f s", r.train_accuracy, r.held_out_accuracy,
              r.best_epoch, kDeskEpochs, r.seconds)};
}

Outcome bias_ablation() {
  const auto full = desk_run(SynthMode::kCausalChain, desk_config(kAblationEpochs), "causal full");
  auto off = desk_config(kAblationEpochs);
  off.model.use_logic_bias = false;
  off.model.use_syntax_bias = false;
  const auto ablated = desk_run(SynthMode::kCausalChain, off, "causal no-bias");
  const double drop = full.held_out_accuracy - ablated.held_out_accuracy;
  return {drop >= kAblationDrop, fmt("held-out full %.3f, without biases %.3f, drop %.1f pp", full.held_out_accuracy,
                                     ablated.held_out_accuracy, 100.0 * drop)};
}

Outcome determinism() {
  TrainConfig config;
  config.model.d = 16;
  config.model.max_len = kDeskMaxLen;
  config.epochs = 2;
  config.eval_threads = 1;
  const auto train_records = generate_synthetic(kTrainSeed, 64, SynthMode::kMixed);
  const auto vocab = vocabulary_of(train_records);
  const auto train_set = prepare_all(train_records, vocab, config.model);
  const auto valid = prepare_all(generate_synthetic(kSelectionSeed, 32, SynthMode::kMixed), vocab, config.model);
  std::vector<std::string> checkpoints, metrics;
  for (int run = 0; run < 2; ++run) {
    Logiformer<float> model(config.model, vocab.size(), config.seed);
    const auto result = train(model, config, train_set, valid);
    const auto path = std::filesystem::temp_directory_path() / ("logiformer_acceptance_run" + std::to_string(run));
    save_model(path, model, config, vocab);
    checkpoints.push_back(slurp(path) + slurp(path.string() + ".vocab"));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".vocab");
    metrics.push_back(to_json(result.history).dump() + to_json(evaluate(model, valid)).dump());
  }
  const bool same_ckpt = checkpoints[0] == checkpoints[1];
  const bool same_metrics = metrics[0] == metrics[1];
  return {same_ckpt && same_metrics, fmt("checkpoints %s (%zu bytes), metrics %s", same_ckpt ? "identical" : "DIFFER",
                                         checkpoints[0].size(), same_metrics ? "identical" : "DIFFER")};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"running-example", running_example},    {"syntax-oracle", syntax_oracle},
      {"adjacency-fuzz", adjacency_fuzz},      {"zero-bias", zero_bias},
      {"gradient-check", gradient_check},      {"numeric-invariants", numeric_invariants},
      {"untrained-accuracy", untrained_accuracy}, {"desk-learning", desk_learning},
      {"bias-ablation", bias_ablation},        {"determinism", determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
