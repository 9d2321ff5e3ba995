#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mnemoseq/checkpoint.hpp"
#include "mnemoseq/gradcheck.hpp"
#include "mnemoseq/loss.hpp"
#include "mnemoseq/model.hpp"
#include "mnemoseq/optimizer.hpp"
#include "mnemoseq/trainer.hpp"

using namespace mnemoseq;
using Catch::Matchers::WithinAbs;

namespace {

ModelDims tiny_dims(int char_vocab = 4, int word_vocab = 5, int width = 3) {
  ModelDims d;
  d.char_vocab = char_vocab;
  d.word_vocab = word_vocab;
  d.embed = width;
  d.hidden = width;
  d.align = width;
  d.maxout = width;
  return d;
}

PairExample make_example(std::vector<int> chars, std::vector<int> words) {
  PairExample ex;
  ex.password_chars = std::move(chars);
  ex.target_tokens.push_back(kBosId);
  for (int w : words) ex.target_tokens.push_back(w);
  ex.target_tokens.push_back(kEosId);
  return ex;
}

Batch single_batch(const std::vector<PairExample>& examples, int word_vocab) {
  auto batches = make_batches(examples, static_cast<int>(examples.size()),
                              PadPolicy{0, word_vocab});
  REQUIRE(batches.size() == 1);
  return batches[0];
}

// Minimal corpus whose passwords are first letters of two-word sentences,
// embedded through the real vocabulary pipeline.
struct ToyData {
  VocabPair vocabs;
  DatasetSplit split;
};

ToyData toy_corpus() {
  std::vector<RawPair> pairs = {
      {"tc", {"the", "cat"}},   {"td", {"the", "dog"}},
      {"ac", {"a", "cat"}},     {"ad", {"a", "dog"}},
      {"tf", {"the", "fox"}},   {"af", {"a", "fox"}},
      {"tb", {"the", "bird"}},  {"ab", {"a", "bird"}},
  };
  ToyData data;
  data.vocabs = build_vocabularies(pairs);
  RawSplit raw;
  raw.train = {pairs.begin(), pairs.begin() + 6};
  raw.validation = {pairs.begin() + 6, pairs.end()};
  raw.seed = 7;
  data.split = encode_split(raw, data.vocabs);
  return data;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

// ---------------------------------------------------------------------------
// parameter registry

TEST_CASE("parameter registry exposes every tensor exactly once") {
  ModelParams<double> p = ModelParams<double>::zeros(tiny_dims());
  auto refs = entries(p);
  REQUIRE(refs.size() == kParamCount);
  REQUIRE(kParamCount == 31);

  SECTION("names are unique and stable at the boundaries") {
    std::vector<std::string> names;
    for (const auto& r : refs) names.push_back(r.name);
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    REQUIRE(names.front() == "encoder.char_embed");
    REQUIRE(names.back() == "readout.w_vocab");
  }

  SECTION("mutating through the registry reaches the named tensor") {
    for (auto& r : entries(p))
      if (r.name == "decoder.w_init") (*r.mat)(0, 0) = 42.0;
    REQUIRE(p.decoder.w_init(0, 0) == 42.0);
  }
}

TEST_CASE("precision cast round-trips float-representable values") {
  ModelParams<float> a = init_params<float>(tiny_dims(), 11);
  ModelParams<double> wide = a.cast<double>();
  ModelParams<float> back = wide.cast<float>();
  auto ea = entries(a);
  auto eb = entries(back);
  for (std::size_t k = 0; k < ea.size(); ++k)
    REQUIRE(*ea[k].mat == *eb[k].mat);
}

// ---------------------------------------------------------------------------
// loss forward

TEST_CASE("zero model scores every word equally") {
  // With all weights zero the readout emits uniform log-probabilities, so the
  // mean loss must be exactly ln(word_vocab) regardless of the targets.
  ModelDims dims = tiny_dims(4, 5, 3);
  ModelParams<double> params = ModelParams<double>::zeros(dims);
  std::vector<PairExample> examples = {make_example({0, 1, 2}, {3, 4}),
                                       make_example({2, 3}, {4})};
  Batch batch = single_batch(examples, dims.word_vocab);
  double loss = forward_loss(batch, params, false, 0.0, 0);
  REQUIRE_THAT(loss, WithinAbs(std::log(5.0), 1e-12));
}

TEST_CASE("duplicating an example leaves the mean loss unchanged") {
  ModelDims dims = tiny_dims();
  ModelParams<double> params = init_params<double>(dims, 3);
  std::vector<PairExample> one = {make_example({0, 1, 2}, {3, 4})};
  std::vector<PairExample> three(3, one[0]);
  double a = forward_loss(single_batch(one, dims.word_vocab), params, false,
                          0.0, 0);
  double b = forward_loss(single_batch(three, dims.word_vocab), params, false,
                          0.0, 0);
  REQUIRE_THAT(b, WithinAbs(a, 1e-12));
}

TEST_CASE("single-symbol vocabulary makes prediction certain") {
  // A softmax over one symbol assigns probability one, so loss and every
  // gradient vanish identically.
  ModelDims dims = tiny_dims(3, 1, 2);
  ModelParams<double> params = init_params<double>(dims, 5);
  std::vector<PairExample> examples(1);
  examples[0].password_chars = {0, 1};
  examples[0].target_tokens = {0, 0, 0};
  Batch batch = single_batch(examples, dims.word_vocab);
  LossCache<double> cache;
  double loss = forward_loss(batch, params, false, 0.0, 0, &cache);
  REQUIRE_THAT(loss, WithinAbs(0.0, 1e-12));
  ModelParams<double> grads = backward_gradients(cache, params);
  for (const auto& r : entries(grads))
    REQUIRE(r.mat->cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("padding contributes nothing to loss or gradients") {
  ModelDims dims = tiny_dims();
  ModelParams<double> params = init_params<double>(dims, 9);
  std::vector<PairExample> uneven = {make_example({0, 1, 2, 3}, {3, 4, 3}),
                                     make_example({2, 1}, {4})};

  // Padded together versus processed as two singleton batches.
  Batch joint = single_batch(uneven, dims.word_vocab);
  LossCache<double> joint_cache;
  forward_loss(joint, params, false, 0.0, 0, &joint_cache);
  ModelParams<double> joint_grads = backward_gradients(joint_cache, params);

  double total = 0.0;
  std::size_t tokens = 0;
  ModelParams<double> sep_grads = ModelParams<double>::zeros(dims);
  for (const auto& ex : uneven) {
    Batch solo = single_batch({ex}, dims.word_vocab);
    LossCache<double> cache;
    forward_loss(solo, params, false, 0.0, 0, &cache);
    ModelParams<double> g = backward_gradients(cache, params);
    auto acc = entries(sep_grads);
    auto add = entries(g);
    for (std::size_t k = 0; k < acc.size(); ++k)
      *acc[k].mat += *add[k].mat * static_cast<double>(cache.tokens);
    total += cache.loss * static_cast<double>(cache.tokens);
    tokens += cache.tokens;
  }
  REQUIRE_THAT(joint_cache.loss, WithinAbs(total / tokens, 1e-12));
  auto ja = entries(joint_grads);
  auto sa = entries(sep_grads);
  for (std::size_t k = 0; k < ja.size(); ++k) {
    Mat<double> rescaled = *sa[k].mat / static_cast<double>(tokens);
    REQUIRE(max_rel_error(*ja[k].mat, rescaled) < 1e-10);
  }
}

TEST_CASE("dropout draws are reproducible and scale preserves expectation") {
  Rng rng(21);
  Mat<double> mask = dropout_mask<double>(rng, 40, 50, 0.2);
  Rng rng2(21);
  Mat<double> again = dropout_mask<double>(rng2, 40, 50, 0.2);
  REQUIRE(mask == again);
  double keep_value = 1.0 / 0.8;
  int kept = 0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) {
      bool zero = mask(r, c) == 0.0;
      bool scaled = std::abs(mask(r, c) - keep_value) < 1e-12;
      REQUIRE((zero || scaled));
      kept += scaled ? 1 : 0;
    }
  // 2000 draws at keep-rate 0.8: expect about 1600 kept.
  REQUIRE(kept > 1400);
  REQUIRE(kept < 1800);

  ModelDims dims = tiny_dims();
  ModelParams<double> params = init_params<double>(dims, 13);
  std::vector<PairExample> ex = {make_example({0, 1, 2}, {3, 4})};
  Batch batch = single_batch(ex, dims.word_vocab);
  double a = forward_loss(batch, params, true, 0.2, 77);
  double b = forward_loss(batch, params, true, 0.2, 77);
  double c = forward_loss(batch, params, true, 0.2, 78);
  REQUIRE(a == b);
  REQUIRE(a != c);  // different seed, different masks
}

// ---------------------------------------------------------------------------
// gradients

TEST_CASE("analytic gradients match finite differences for all 31 tensors") {
  auto reports = gradient_check_model(tiny_dims(4, 5, 3), 17);
  REQUIRE(reports.size() == kParamCount);
  for (const auto& r : reports) {
    INFO(r.name << " max relative error " << r.max_rel_error);
    CHECK(r.passed);
  }
}

TEST_CASE("gradient comparison flags a corrupted tensor") {
  ModelDims dims = tiny_dims(4, 5, 3);
  ModelParams<double> params = init_params<double>(dims, 23);
  std::vector<PairExample> ex = {make_example({0, 1, 2, 3}, {3, 4, 3})};
  Batch batch = single_batch(ex, dims.word_vocab);
  LossCache<double> cache;
  forward_loss(batch, params, false, 0.0, 0, &cache);
  ModelParams<double> analytic = backward_gradients(cache, params);
  ModelParams<double> numeric = numeric_model_gradients(batch, params, 1e-5);

  analytic.decoder.u_cand = -analytic.decoder.u_cand;  // simulate a sign bug
  auto reports = compare_gradient_sets(analytic, numeric, 1e-4);
  bool flagged = false;
  bool others_pass = true;
  for (const auto& r : reports) {
    if (r.name == "decoder.u_cand")
      flagged = !r.passed;
    else
      others_pass = others_pass && r.passed;
  }
  REQUIRE(flagged);
  REQUIRE(others_pass);
}

// ---------------------------------------------------------------------------
// optimizer

TEST_CASE("gradient clipping rescales to the requested norm") {
  ModelDims dims = tiny_dims();
  ModelParams<double> grads = ModelParams<double>::zeros(dims);
  grads.decoder.w_init(0, 0) = 6.0;
  grads.readout.w_vocab(0, 0) = 8.0;  // global norm sqrt(36+64) = 10
  double before = clip_global_norm(grads, 5.0);
  REQUIRE_THAT(before, WithinAbs(10.0, 1e-12));
  REQUIRE_THAT(grads.decoder.w_init(0, 0), WithinAbs(3.0, 1e-12));
  REQUIRE_THAT(grads.readout.w_vocab(0, 0), WithinAbs(4.0, 1e-12));
  REQUIRE_THAT(global_norm(grads), WithinAbs(5.0, 1e-12));

  SECTION("norms under the limit are left alone") {
    double norm = clip_global_norm(grads, 5.0 + 1e-9);
    REQUIRE_THAT(norm, WithinAbs(5.0, 1e-12));
    REQUIRE_THAT(grads.decoder.w_init(0, 0), WithinAbs(3.0, 1e-12));
  }
}

TEST_CASE("zero gradients leave parameters untouched") {
  ModelDims dims = tiny_dims();
  ModelParams<double> params = init_params<double>(dims, 31);
  ModelParams<double> before = params;
  ModelParams<double> grads = ModelParams<double>::zeros(dims);
  AdamState<double> state = AdamState<double>::zeros(dims);
  REQUIRE(apply_update(params, grads, state, OptimizerConfig{}));
  auto a = entries(params);
  auto b = entries(before);
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(*a[k].mat == *b[k].mat);
}

TEST_CASE("non-finite gradients are rejected without touching state") {
  ModelDims dims = tiny_dims();
  ModelParams<double> params = init_params<double>(dims, 37);
  ModelParams<double> before = params;
  ModelParams<double> grads = ModelParams<double>::zeros(dims);
  grads.encoder.char_embed(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState<double> state = AdamState<double>::zeros(dims);
  REQUIRE_FALSE(apply_update(params, grads, state, OptimizerConfig{}));
  REQUIRE(state.step == 0);
  REQUIRE(params.encoder.char_embed == before.encoder.char_embed);
}

TEST_CASE("adaptive updates drive a quadratic to its minimum") {
  // One 1x1 tensor, objective (x - 3)^2, gradient 2(x - 3).
  Mat<double> x(1, 1), g(1, 1), m1(1, 1), m2(1, 1);
  x(0, 0) = -4.0;
  m1.setZero();
  m2.setZero();
  OptimizerConfig cfg;
  cfg.learning_rate = 0.05;
  for (int step = 1; step <= 500; ++step) {
    g(0, 0) = 2.0 * (x(0, 0) - 3.0);
    adam_update(x, g, m1, m2, step, cfg);
  }
  REQUIRE_THAT(x(0, 0), WithinAbs(3.0, 1e-3));
}

// ---------------------------------------------------------------------------
// training loop

TEST_CASE("training memorizes a four-pair corpus") {
  ToyData data = toy_corpus();
  DatasetSplit overfit;
  overfit.train = {data.split.train.begin(), data.split.train.begin() + 4};

  TrainConfig cfg;
  cfg.embed = cfg.hidden = cfg.align = cfg.maxout = 24;
  cfg.dropout = 0.0;
  cfg.batch_size = 4;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.seed = 5;
  cfg.stop_train_loss = 0.05;
  TrainResult<double> result = train<double>(overfit, data.vocabs, cfg);
  REQUIRE(result.history.back().train_loss < 0.1);
  // Empty validation set falls back to train loss for selection.
  REQUIRE(result.best_valid == result.history.back().valid_loss);
}

TEST_CASE("training improves validation loss on a toy corpus") {
  ToyData data = toy_corpus();
  TrainConfig cfg;
  cfg.embed = cfg.hidden = cfg.align = cfg.maxout = 16;
  cfg.dropout = 0.1;
  cfg.batch_size = 3;
  cfg.max_epochs = 40;
  cfg.patience = 40;
  cfg.seed = 2;
  std::ostringstream log;
  TrainResult<double> result = train<double>(data.split, data.vocabs, cfg, &log);
  REQUIRE_FALSE(result.history.empty());
  REQUIRE(result.best_valid < result.history.front().valid_loss);
  REQUIRE(log.str().find("epoch 1 ") != std::string::npos);

  SECTION("the reported best epoch matches the history minimum") {
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& s : result.history)
      if (s.valid_loss < best) {
        best = s.valid_loss;
        best_epoch = s.epoch;
      }
    REQUIRE(result.best_epoch == best_epoch);
    REQUIRE_THAT(result.best_valid, WithinAbs(best, 0.0));
  }
}

TEST_CASE("identical seeds give identical training trajectories") {
  ToyData data = toy_corpus();
  TrainConfig cfg;
  cfg.embed = cfg.hidden = cfg.align = cfg.maxout = 8;
  cfg.dropout = 0.2;
  cfg.batch_size = 2;
  cfg.max_epochs = 5;
  cfg.seed = 99;
  TrainResult<float> a = train<float>(data.split, data.vocabs, cfg);
  TrainResult<float> b = train<float>(data.split, data.vocabs, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    REQUIRE(a.history[k].train_loss == b.history[k].train_loss);
    REQUIRE(a.history[k].valid_loss == b.history[k].valid_loss);
  }
  auto ea = entries(a.best);
  auto eb = entries(b.best);
  for (std::size_t k = 0; k < ea.size(); ++k) REQUIRE(*ea[k].mat == *eb[k].mat);

  SECTION("a different seed diverges") {
    cfg.seed = 100;
    TrainResult<float> c = train<float>(data.split, data.vocabs, cfg);
    REQUIRE(a.history.front().train_loss != c.history.front().train_loss);
  }
}

TEST_CASE("training rejects degenerate configurations") {
  ToyData data = toy_corpus();
  TrainConfig cfg;
  SECTION("empty training set") {
    DatasetSplit empty;
    REQUIRE_THROWS_AS(train<float>(empty, data.vocabs, cfg),
                      std::invalid_argument);
  }
  SECTION("batch size below one") {
    cfg.batch_size = 0;
    REQUIRE_THROWS_AS(train<float>(data.split, data.vocabs, cfg),
                      std::invalid_argument);
  }
}

TEST_CASE("examples with unknown characters are dropped before training") {
  ToyData data = toy_corpus();
  PairExample bad;
  bad.cased_password = "zq";
  bad.password_chars = {kUnknownChar, kUnknownChar};
  bad.target_tokens = {kBosId, kUnkId, kEosId};
  std::size_t dropped = 0;
  auto kept = drop_unknown_chars({data.split.train[0], bad}, &dropped);
  REQUIRE(dropped == 1);
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].cased_password == data.split.train[0].cased_password);
}

// ---------------------------------------------------------------------------
// checkpoints

TEST_CASE("checkpoints restore parameters bit for bit") {
  ModelDims dims = tiny_dims(6, 9, 4);
  auto path = temp_file("mnemoseq_ckpt_roundtrip.bin");

  SECTION("64-bit model") {
    ModelParams<double> params = init_params<double>(dims, 41);
    save_checkpoint(params, 7, 1.25, path.string());
    LoadedCheckpoint loaded = load_checkpoint(path.string());
    REQUIRE(loaded.meta.version == kCheckpointVersion);
    REQUIRE(loaded.meta.precision_bits == 64);
    REQUIRE(loaded.meta.epoch == 7);
    REQUIRE(loaded.meta.valid_loss == 1.25);
    REQUIRE(loaded.meta.dims == dims);
    ModelParams<double> back = loaded.as<double>();
    auto a = entries(params);
    auto b = entries(back);
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(*a[k].mat == *b[k].mat);
    REQUIRE_THROWS_AS(loaded.as<float>(), std::runtime_error);
  }

  SECTION("32-bit model") {
    ModelParams<float> params = init_params<float>(dims, 43);
    save_checkpoint(params, 2, 0.5, path.string());
    LoadedCheckpoint loaded = load_checkpoint(path.string());
    REQUIRE(loaded.meta.precision_bits == 32);
    ModelParams<float> back = loaded.as<float>();
    auto a = entries(params);
    auto b = entries(back);
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(*a[k].mat == *b[k].mat);
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints fail with specific diagnostics") {
  ModelDims dims = tiny_dims();
  ModelParams<float> params = init_params<float>(dims, 47);
  auto path = temp_file("mnemoseq_ckpt_corrupt.bin");
  save_checkpoint(params, 1, 2.0, path.string());

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();

  auto write_bytes = [&](const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  };

  SECTION("wrong magic") {
    std::string mutated = bytes;
    mutated[0] = 'X';
    write_bytes(mutated);
    REQUIRE_THROWS_WITH(load_checkpoint(path.string()),
                        Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("unsupported version") {
    std::string mutated = bytes;
    mutated[4] = 9;  // version field follows the 4-byte magic
    write_bytes(mutated);
    REQUIRE_THROWS_WITH(load_checkpoint(path.string()),
                        Catch::Matchers::ContainsSubstring("version"));
  }
  SECTION("truncated payload") {
    write_bytes(bytes.substr(0, bytes.size() / 2));
    REQUIRE_THROWS_WITH(load_checkpoint(path.string()),
                        Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("trailing garbage") {
    write_bytes(bytes + "junk");
    REQUIRE_THROWS(load_checkpoint(path.string()));
  }
  SECTION("missing file") {
    std::filesystem::remove(path);
    REQUIRE_THROWS(load_checkpoint(path.string()));
  }
  std::filesystem::remove(path);
}

TEST_CASE("a trained model survives a save/load cycle with equal loss") {
  ToyData data = toy_corpus();
  TrainConfig cfg;
  cfg.embed = cfg.hidden = cfg.align = cfg.maxout = 8;
  cfg.dropout = 0.0;
  cfg.batch_size = 3;
  cfg.max_epochs = 3;
  cfg.seed = 55;
  TrainResult<float> result = train<float>(data.split, data.vocabs, cfg);
  auto path = temp_file("mnemoseq_ckpt_trained.bin");
  save_checkpoint(result.best, result.best_epoch, result.best_valid,
                  path.string());
  ModelParams<float> back = load_checkpoint(path.string()).as<float>();
  double before = mean_loss(data.split.validation, result.best, 4);
  double after = mean_loss(data.split.validation, back, 4);
  REQUIRE(before == after);
  std::filesystem::remove(path);
}
