#pragma once

// End-to-end pipeline stages behind the command-line tool: corpus preparation,
// baseline fitting, model training, generation, evaluation, report comparison,
// and attention export. Every stage that produces a file artifact writes a
// JSON run manifest next to it; re-running from that manifest alone reproduces
// the stage's outputs byte for byte.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <streambuf>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mnemoseq/attention_export.hpp"
#include "mnemoseq/beam.hpp"
#include "mnemoseq/bigram.hpp"
#include "mnemoseq/checkpoint.hpp"
#include "mnemoseq/corpus.hpp"
#include "mnemoseq/corpus_io.hpp"
#include "mnemoseq/gradcheck.hpp"
#include "mnemoseq/metrics.hpp"
#include "mnemoseq/restore.hpp"
#include "mnemoseq/trainer.hpp"

namespace mnemoseq {

inline constexpr const char* kToolName = "mnemoseq";
inline constexpr const char* kToolVersion = "0.1.0";

// File names inside a prepared data directory.
inline constexpr const char* kTrainPairsFile = "train.pairs";
inline constexpr const char* kValidationPairsFile = "validation.pairs";
inline constexpr const char* kTestPairsFile = "test.pairs";
inline constexpr const char* kCharsVocabFile = "chars.vocab";
inline constexpr const char* kWordsVocabFile = "words.vocab";
inline constexpr const char* kPrepareManifestFile = "manifest.json";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// small file helpers

inline std::string path_join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// evaluation reports: a flat, ordered key-value text document. Metric values
// carry two decimals; corpus sizes stay integral. The same parser reads both
// evaluate reports and compare output.

struct ReportEntry {
  std::string key;
  double value = 0.0;
  bool integral = false;
};

struct Report {
  std::vector<ReportEntry> entries;

  void add(const std::string& key, double value) {
    entries.push_back({key, value, false});
  }
  void add_count(const std::string& key, std::size_t value) {
    entries.push_back({key, static_cast<double>(value), true});
  }
  const ReportEntry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

inline std::string format_report(const Report& report) {
  std::ostringstream out;
  for (const auto& e : report.entries) {
    out << e.key << '\t';
    if (e.integral)
      out << static_cast<long long>(std::llround(e.value));
    else
      out << std::fixed << std::setprecision(2) << e.value;
    out << '\n';
  }
  return out.str();
}

inline Report parse_report_text(const std::string& text, const std::string& origin) {
  Report report;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": malformed report line");
    ReportEntry e;
    e.key = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    std::size_t used = 0;
    try {
      e.value = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size())
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": bad report value " + value);
    e.integral = value.find('.') == std::string::npos;
    report.entries.push_back(std::move(e));
  }
  return report;
}

inline Report read_report(const std::string& path) {
  return parse_report_text(read_text_file(path), path);
}

// ---------------------------------------------------------------------------
// run manifests

inline Json make_manifest(const std::string& subcommand, Json config, Json stats) {
  Json m;
  m["tool"] = kToolName;
  m["version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["config"] = std::move(config);
  m["stats"] = std::move(stats);
  return m;
}

inline void write_manifest(const std::string& path, const Json& manifest) {
  write_text_file(path, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// prepare: raw sentences -> filtered pairs, split, vocabularies

struct PrepareConfig {
  std::string corpus;      // input text, one sentence per line
  std::string out;         // output directory
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  std::uint64_t seed = 1;
  double train_frac = 0.8;
  double valid_frac = 0.1;
  std::string dict;        // optional word-list filter; empty disables it
};

struct PrepareStats {
  std::size_t lines_read = 0;
  std::size_t blank_lines = 0;
  std::size_t dropped_length = 0;
  std::size_t dropped_dictionary = 0;
  std::size_t pairs_kept = 0;
  SplitCounts split;
};

inline Json to_json(const PrepareConfig& c) {
  Json j;
  j["corpus"] = c.corpus;
  j["out"] = c.out;
  j["min_len"] = c.min_len;
  j["max_len"] = c.max_len;
  j["seed"] = c.seed;
  j["train_frac"] = c.train_frac;
  j["valid_frac"] = c.valid_frac;
  j["dict"] = c.dict;
  return j;
}

inline PrepareConfig prepare_from_json(const Json& j) {
  PrepareConfig c;
  c.corpus = j.at("corpus").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.min_len = j.at("min_len").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train_frac = j.at("train_frac").get<double>();
  c.valid_frac = j.at("valid_frac").get<double>();
  c.dict = j.at("dict").get<std::string>();
  return c;
}

inline Json to_json(const PrepareStats& s) {
  Json j;
  j["lines_read"] = s.lines_read;
  j["blank_lines"] = s.blank_lines;
  j["dropped_length"] = s.dropped_length;
  j["dropped_dictionary"] = s.dropped_dictionary;
  j["pairs_kept"] = s.pairs_kept;
  j["train"] = s.split.train;
  j["validation"] = s.split.validation;
  j["test"] = s.split.test;
  return j;
}

inline PrepareStats run_prepare(const PrepareConfig& cfg) {
  if (cfg.out.empty())
    throw std::invalid_argument("prepare: output directory not set");
  const std::vector<std::string> lines = read_lines(cfg.corpus);
  std::set<std::string> dict;
  if (!cfg.dict.empty()) dict = read_dictionary(cfg.dict);

  PrepareStats st;
  st.lines_read = lines.size();
  std::vector<RawPair> kept;
  for (const auto& line : lines) {
    bool blank = true;
    for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (blank) {
      ++st.blank_lines;
      continue;
    }
    RawPair p = make_raw_pair(tokenize(line));
    if (!filter_pair(p.password, cfg.min_len, cfg.max_len)) {
      ++st.dropped_length;
      continue;
    }
    if (!cfg.dict.empty() && !sentence_in_dictionary(p.tokens, dict)) {
      ++st.dropped_dictionary;
      continue;
    }
    kept.push_back(std::move(p));
  }
  if (kept.empty())
    throw std::runtime_error("prepare: no pairs survived filtering in " + cfg.corpus);
  st.pairs_kept = kept.size();

  const RawSplit split = make_split(kept, cfg.seed, cfg.train_frac, cfg.valid_frac);
  st.split = split_counts(kept.size(), cfg.train_frac, cfg.valid_frac);
  const VocabPair vocabs = build_vocabularies(split.train);

  std::filesystem::create_directories(cfg.out);
  write_pairs(path_join(cfg.out, kTrainPairsFile), split.train);
  write_pairs(path_join(cfg.out, kValidationPairsFile), split.validation);
  write_pairs(path_join(cfg.out, kTestPairsFile), split.test);
  write_vocab(path_join(cfg.out, kCharsVocabFile), vocabs.chars);
  write_vocab(path_join(cfg.out, kWordsVocabFile), vocabs.words);
  write_manifest(path_join(cfg.out, kPrepareManifestFile),
                 make_manifest("prepare", to_json(cfg), to_json(st)));
  return st;
}

// ---------------------------------------------------------------------------
// baseline: fit the first-order word model on a pairs file

struct BaselineConfig {
  std::string pairs;  // training pairs file
  std::string out;    // model file
};

struct BaselineStats {
  std::size_t sentences = 0;
  std::size_t distinct_bigrams = 0;
};

inline Json to_json(const BaselineConfig& c) {
  Json j;
  j["pairs"] = c.pairs;
  j["out"] = c.out;
  return j;
}

inline BaselineConfig baseline_from_json(const Json& j) {
  BaselineConfig c;
  c.pairs = j.at("pairs").get<std::string>();
  c.out = j.at("out").get<std::string>();
  return c;
}

inline BaselineStats run_baseline(const BaselineConfig& cfg) {
  if (cfg.out.empty()) throw std::invalid_argument("baseline: output path not set");
  const std::vector<RawPair> pairs = read_pairs(cfg.pairs);
  if (pairs.empty())
    throw std::runtime_error("baseline: no pairs in " + cfg.pairs);
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::vector<std::string> s;
    s.reserve(p.tokens.size() + 2);
    s.emplace_back(kBos);
    s.insert(s.end(), p.tokens.begin(), p.tokens.end());
    s.emplace_back(kEos);
    sentences.push_back(std::move(s));
  }
  const BigramModel model = fit_bigram(sentences);
  write_bigram(model, cfg.out);

  BaselineStats st;
  st.sentences = pairs.size();
  for (const auto& [prev, successors] : model.bigram_counts())
    st.distinct_bigrams += successors.size();
  Json stats;
  stats["sentences"] = st.sentences;
  stats["distinct_bigrams"] = st.distinct_bigrams;
  write_manifest(cfg.out + ".manifest.json",
                 make_manifest("baseline", to_json(cfg), std::move(stats)));
  return st;
}

// ---------------------------------------------------------------------------
// train: prepared pairs -> checkpoint + log (or a standalone gradient check)

struct TrainCliConfig {
  std::string data;  // prepared data directory
  std::string out;   // checkpoint path; the log lands at out + ".log"
  TrainConfig train;
  int precision = 32;       // checkpoint scalar width: 32 or 64
  bool grad_check = false;  // run the finite-difference self-test instead
  bool resume = false;      // continue training the checkpoint at `out`
};

struct TrainCliStats {
  int start_epoch = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_valid = 0.0;
  bool grad_ok = true;
};

inline Json to_json(const TrainCliConfig& c) {
  Json j;
  j["data"] = c.data;
  j["out"] = c.out;
  j["embed"] = c.train.embed;
  j["hidden"] = c.train.hidden;
  j["align"] = c.train.align;
  j["maxout"] = c.train.maxout;
  j["dropout"] = c.train.dropout;
  j["batch"] = c.train.batch_size;
  j["lr"] = c.train.learning_rate;
  j["clip"] = c.train.clip_norm;
  j["epochs"] = c.train.max_epochs;
  j["patience"] = c.train.patience;
  j["seed"] = c.train.seed;
  j["stop_loss"] = c.train.stop_train_loss;
  j["precision"] = c.precision;
  j["resume"] = c.resume;
  return j;
}

inline TrainCliConfig train_from_json(const Json& j) {
  TrainCliConfig c;
  c.data = j.at("data").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.train.embed = j.at("embed").get<int>();
  c.train.hidden = j.at("hidden").get<int>();
  c.train.align = j.at("align").get<int>();
  c.train.maxout = j.at("maxout").get<int>();
  c.train.dropout = j.at("dropout").get<double>();
  c.train.batch_size = j.at("batch").get<int>();
  c.train.learning_rate = j.at("lr").get<double>();
  c.train.clip_norm = j.at("clip").get<double>();
  c.train.max_epochs = j.at("epochs").get<int>();
  c.train.patience = j.at("patience").get<int>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.train.stop_train_loss = j.at("stop_loss").get<double>();
  c.precision = j.at("precision").get<int>();
  c.resume = j.at("resume").get<bool>();
  return c;
}

namespace detail {

// Streams every character to two underlying buffers (live console echo plus
// the persisted training log).
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == traits_type::eof()) return 0;
    const char ch = traits_type::to_char_type(c);
    const bool ok_a = a_ == nullptr || a_->sputc(ch) != traits_type::eof();
    const bool ok_b = b_ == nullptr || b_->sputc(ch) != traits_type::eof();
    return ok_a && ok_b ? c : traits_type::eof();
  }
  int sync() override {
    const bool ok_a = a_ == nullptr || a_->pubsync() == 0;
    const bool ok_b = b_ == nullptr || b_->pubsync() == 0;
    return ok_a && ok_b ? 0 : -1;
  }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

template <typename S>
TrainCliStats train_with_precision(const TrainCliConfig& cfg,
                                   const DatasetSplit& split,
                                   const VocabPair& vocabs, std::ostream& echo) {
  const ModelParams<S>* resume_ptr = nullptr;
  ModelParams<S> resumed;
  int start_epoch = 0;
  if (cfg.resume) {
    const LoadedCheckpoint ck = load_checkpoint(cfg.out);
    if (ck.meta.precision_bits != cfg.precision)
      throw std::runtime_error(
          "train: checkpoint is " + std::to_string(ck.meta.precision_bits) +
          "-bit but --precision asks for " + std::to_string(cfg.precision));
    const ModelDims& d = ck.meta.dims;
    if (d.embed != cfg.train.embed || d.hidden != cfg.train.hidden ||
        d.align != cfg.train.align || d.maxout != cfg.train.maxout ||
        d.char_vocab != vocabs.chars.size() ||
        d.word_vocab != vocabs.words.size())
      throw std::runtime_error("train: checkpoint at " + cfg.out +
                               " has different dimensions than requested");
    resumed = ck.as<S>();
    start_epoch = static_cast<int>(ck.meta.epoch);
    resume_ptr = &resumed;
  }

  std::ostringstream log;
  TeeBuf tee(log.rdbuf(), echo.rdbuf());
  std::ostream tee_stream(&tee);
  const TrainResult<S> result =
      train<S>(split, vocabs, cfg.train, &tee_stream, resume_ptr, start_epoch);
  tee_stream << "best epoch " << result.best_epoch << " valid "
             << result.best_valid << "\n";
  tee_stream.flush();

  save_checkpoint(result.best, static_cast<std::uint32_t>(result.best_epoch),
                  result.best_valid, cfg.out);
  write_text_file(cfg.out + ".log", log.str());

  TrainCliStats st;
  st.start_epoch = start_epoch;
  st.epochs_run = static_cast<int>(result.history.size());
  st.best_epoch = result.best_epoch;
  st.best_valid = result.best_valid;
  return st;
}

}  // namespace detail

inline TrainCliStats run_train(const TrainCliConfig& cfg, std::ostream& echo) {
  if (cfg.precision != 32 && cfg.precision != 64)
    throw std::invalid_argument("train: --precision must be 32 or 64");

  if (cfg.grad_check) {
    // Self-test on synthetic vocabularies (4 characters, 5 words): every
    // parameter tensor's analytic gradient is compared against central finite
    // differences at the configured layer sizes.
    ModelDims dims;
    dims.char_vocab = 4;
    dims.word_vocab = 5;
    dims.embed = cfg.train.embed;
    dims.hidden = cfg.train.hidden;
    dims.align = cfg.train.align;
    dims.maxout = cfg.train.maxout;
    TrainCliStats st;
    for (const auto& r : gradient_check_model(dims, cfg.train.seed)) {
      echo << (r.passed ? "ok   " : "FAIL ") << r.name
           << "  max relative error " << r.max_rel_error << "\n";
      st.grad_ok = st.grad_ok && r.passed;
    }
    echo << "gradient check " << (st.grad_ok ? "passed" : "FAILED") << "\n";
    return st;
  }

  if (cfg.data.empty()) throw std::invalid_argument("train: --data is required");
  if (cfg.out.empty()) throw std::invalid_argument("train: --out is required");
  for (const char* name : {kCharsVocabFile, kWordsVocabFile}) {
    const std::string p = path_join(cfg.data, name);
    if (!std::filesystem::exists(p))
      throw std::runtime_error("train: missing vocabulary file " + p +
                               " (run prepare first)");
  }
  VocabPair vocabs;
  vocabs.chars = read_vocab(path_join(cfg.data, kCharsVocabFile));
  vocabs.words = read_vocab(path_join(cfg.data, kWordsVocabFile));

  RawSplit raw;
  raw.seed = cfg.train.seed;
  raw.train = read_pairs(path_join(cfg.data, kTrainPairsFile));
  const std::string valid_path = path_join(cfg.data, kValidationPairsFile);
  if (std::filesystem::exists(valid_path)) raw.validation = read_pairs(valid_path);
  const DatasetSplit split = encode_split(raw, vocabs);

  const TrainCliStats st =
      cfg.precision == 32
          ? detail::train_with_precision<float>(cfg, split, vocabs, echo)
          : detail::train_with_precision<double>(cfg, split, vocabs, echo);

  Json stats;
  stats["start_epoch"] = st.start_epoch;
  stats["epochs_run"] = st.epochs_run;
  stats["best_epoch"] = st.best_epoch;
  stats["best_valid"] = st.best_valid;
  write_manifest(cfg.out + ".manifest.json",
                 make_manifest("train", to_json(cfg), std::move(stats)));
  return st;
}

// ---------------------------------------------------------------------------
// model loading shared by generate / evaluate / attention

enum class ModelKind { kNeuralCheckpoint, kBigramText };

inline ModelKind sniff_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::equal(magic, magic + 4, kCheckpointMagic))
    return ModelKind::kNeuralCheckpoint;
  return ModelKind::kBigramText;
}

struct NeuralBundle {
  LoadedCheckpoint checkpoint;
  VocabPair vocabs;
};

inline NeuralBundle load_neural(const std::string& model_path,
                                const std::string& data_dir) {
  if (data_dir.empty())
    throw std::runtime_error(
        "a neural checkpoint needs --data pointing at the prepared "
        "vocabulary files");
  NeuralBundle b;
  b.vocabs.chars = read_vocab(path_join(data_dir, kCharsVocabFile));
  b.vocabs.words = read_vocab(path_join(data_dir, kWordsVocabFile));
  b.checkpoint = load_checkpoint(model_path);
  const ModelDims& d = b.checkpoint.meta.dims;
  if (d.char_vocab != b.vocabs.chars.size() ||
      d.word_vocab != b.vocabs.words.size())
    throw std::runtime_error("checkpoint vocabulary sizes do not match " +
                             data_dir);
  return b;
}

// Maps password characters to vocabulary ids; unknown characters become the
// sentinel and are reported (with their position) by the decoder.
inline std::vector<int> encode_password(const std::string& password,
                                        const Vocab& chars) {
  std::vector<int> ids;
  for (const auto& c : utf8_chars(password))
    ids.push_back(chars.lookup(lower_ascii(c)));
  return ids;
}

template <typename Fn>
auto with_checkpoint_params(const LoadedCheckpoint& ck, Fn&& fn) {
  return ck.meta.precision_bits == 32 ? fn(ck.template as<float>())
                                      : fn(ck.template as<double>());
}

// Highest-scoring decode for one password; throws on unknown characters.
inline DecodeResult decode_password(const std::string& password,
                                    const NeuralBundle& nb, int width) {
  const std::vector<int> ids = encode_password(password, nb.vocabs.chars);
  BeamConfig bc;
  bc.width = width;
  return with_checkpoint_params(nb.checkpoint, [&](const auto& params) {
    return beam_search(ids, params, bc).front();
  });
}

// ---------------------------------------------------------------------------
// generate: passwords -> mnemonic sentences

struct GenerateConfig {
  std::string model;                    // checkpoint or baseline model file
  std::string data;                     // vocab dir (neural checkpoints only)
  std::vector<std::string> passwords;   // inline inputs
  std::string file;                     // optional: one password per line
  std::string out;                      // optional output file
  std::string attention;                // optional grid file (neural only)
  int beam = 1;
  bool restore = false;                 // display form with restored case
};

struct GenerateStats {
  std::size_t generated = 0;
  std::size_t skipped = 0;
};

inline Json to_json(const GenerateConfig& c) {
  Json j;
  j["model"] = c.model;
  j["data"] = c.data;
  j["passwords"] = c.passwords;
  j["file"] = c.file;
  j["out"] = c.out;
  j["attention"] = c.attention;
  j["beam"] = c.beam;
  j["restore_case"] = c.restore;
  return j;
}

inline GenerateConfig generate_from_json(const Json& j) {
  GenerateConfig c;
  c.model = j.at("model").get<std::string>();
  c.data = j.at("data").get<std::string>();
  c.passwords = j.at("passwords").get<std::vector<std::string>>();
  c.file = j.at("file").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.attention = j.at("attention").get<std::string>();
  c.beam = j.at("beam").get<int>();
  c.restore = j.at("restore_case").get<bool>();
  return c;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline GenerateStats run_generate(const GenerateConfig& cfg,
                                  std::ostream& fallback_out, std::ostream& err) {
  if (cfg.beam < 1) throw std::invalid_argument("generate: --beam must be >= 1");

  struct Job {
    std::string label;
    std::string password;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cfg.passwords.size(); ++i) {
    if (cfg.passwords[i].empty())
      throw std::invalid_argument("generate: empty password argument");
    jobs.push_back({"password " + std::to_string(i + 1), cfg.passwords[i]});
  }
  if (!cfg.file.empty()) {
    const std::vector<std::string> lines = read_lines(cfg.file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      jobs.push_back({cfg.file + ":" + std::to_string(i + 1), lines[i]});
    }
  }
  if (jobs.empty())
    throw std::invalid_argument("generate: no passwords given (arguments or --file)");

  const ModelKind kind = sniff_model(cfg.model);
  std::optional<NeuralBundle> neural;
  std::optional<BigramModel> bigram;
  if (kind == ModelKind::kNeuralCheckpoint) {
    neural = load_neural(cfg.model, cfg.data);
  } else {
    if (!cfg.attention.empty())
      throw std::invalid_argument("generate: --attention needs a neural checkpoint");
    bigram = read_bigram(cfg.model);
  }

  std::ostringstream body, grids;
  GenerateStats st;
  bool first_grid = true;
  for (const auto& job : jobs) {
    try {
      std::vector<std::string> tokens;
      if (neural) {
        const DecodeResult best = decode_password(job.password, *neural, cfg.beam);
        tokens = decode_tokens(best.tokens, neural->vocabs.words);
        if (!cfg.attention.empty()) {
          if (tokens.empty())
            throw std::invalid_argument("decode produced an empty sentence");
          const std::vector<int> ids =
              encode_password(job.password, neural->vocabs.chars);
          const std::string block =
              with_checkpoint_params(neural->checkpoint, [&](const auto& params) {
                return format_attention(utf8_chars(job.password), tokens,
                                        attention_matrix(ids, best.tokens, params));
              });
          if (!first_grid) grids << '\n';
          grids << block;
          first_grid = false;
        }
      } else {
        tokens = generate_constrained(job.password, *bigram, cfg.beam);
      }
      body << (cfg.restore ? restore_case(job.password, tokens)
                           : join_tokens(tokens))
           << '\n';
      ++st.generated;
    } catch (const std::invalid_argument& e) {
      err << "skipped " << job.label << ": " << e.what() << '\n';
      ++st.skipped;
    }
  }

  if (!cfg.out.empty())
    write_text_file(cfg.out, body.str());
  else
    fallback_out << body.str();
  if (!cfg.attention.empty()) write_text_file(cfg.attention, grids.str());

  const std::string manifest_path = !cfg.out.empty()
                                        ? cfg.out + ".manifest.json"
                                        : (!cfg.attention.empty()
                                               ? cfg.attention + ".manifest.json"
                                               : std::string());
  if (!manifest_path.empty()) {
    Json stats;
    stats["generated"] = st.generated;
    stats["skipped"] = st.skipped;
    write_manifest(manifest_path,
                   make_manifest("generate", to_json(cfg), std::move(stats)));
  }
  return st;
}

// ---------------------------------------------------------------------------
// evaluate: model + test pairs -> metric report

struct EvaluateConfig {
  std::string model;
  std::string data;   // vocab dir (neural checkpoints only)
  std::string pairs;  // test pairs file
  std::string out;    // report path; empty streams it
  std::vector<int> beams = {1};
};

struct EvaluateStats {
  std::size_t examples = 0;
  std::size_t unencodable = 0;  // passwords with characters outside the vocab
};

inline Json to_json(const EvaluateConfig& c) {
  Json j;
  j["model"] = c.model;
  j["data"] = c.data;
  j["pairs"] = c.pairs;
  j["out"] = c.out;
  j["beams"] = c.beams;
  return j;
}

inline EvaluateConfig evaluate_from_json(const Json& j) {
  EvaluateConfig c;
  c.model = j.at("model").get<std::string>();
  c.data = j.at("data").get<std::string>();
  c.pairs = j.at("pairs").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.beams = j.at("beams").get<std::vector<int>>();
  return c;
}

inline EvaluateStats run_evaluate(const EvaluateConfig& cfg,
                                  std::ostream& fallback_out) {
  if (cfg.beams.empty())
    throw std::invalid_argument("evaluate: at least one beam width is required");
  for (int b : cfg.beams)
    if (b < 1) throw std::invalid_argument("evaluate: beam width must be >= 1");
  if (std::set<int>(cfg.beams.begin(), cfg.beams.end()).size() != cfg.beams.size())
    throw std::invalid_argument("evaluate: duplicate beam width");

  const std::vector<RawPair> pairs = read_pairs(cfg.pairs);
  if (pairs.empty())
    throw std::runtime_error("evaluate: no pairs in " + cfg.pairs);

  const ModelKind kind = sniff_model(cfg.model);
  std::optional<NeuralBundle> neural;
  std::optional<BigramModel> bigram;
  if (kind == ModelKind::kNeuralCheckpoint)
    neural = load_neural(cfg.model, cfg.data);
  else
    bigram = read_bigram(cfg.model);

  EvaluateStats st;
  st.examples = pairs.size();

  // A password with characters outside the vocabulary cannot be embedded; it
  // scores an empty candidate (so it still counts against every metric).
  std::vector<char> encodable(pairs.size(), 1);
  if (neural) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      for (int id : encode_password(pairs[i].password, neural->vocabs.chars))
        if (id < 0) encodable[i] = 0;
      if (!encodable[i]) ++st.unencodable;
    }
  }

  std::vector<std::vector<std::string>> references;
  references.reserve(pairs.size());
  for (const auto& p : pairs) references.push_back(p.tokens);

  Report report;
  report.add_count("examples", pairs.size());
  for (int width : cfg.beams) {
    std::vector<std::vector<std::string>> candidates(pairs.size());
    std::vector<std::pair<std::string, std::vector<std::string>>> mp_pairs;
    mp_pairs.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (neural) {
        if (encodable[i])
          candidates[i] = decode_tokens(
              decode_password(pairs[i].password, *neural, width).tokens,
              neural->vocabs.words);
      } else {
        candidates[i] = generate_constrained(pairs[i].password, *bigram, width);
      }
      mp_pairs.emplace_back(pairs[i].password, candidates[i]);
    }
    const MnemonicProportion mp = mnemonic_proportion(mp_pairs);
    const std::vector<double> scores = bleu(candidates, references, 4);
    const std::string prefix = "b" + std::to_string(width) + ".";
    report.add(prefix + "mp", mp.mp);
    for (std::size_t k = 0; k < scores.size(); ++k)
      report.add(prefix + "bleu" + std::to_string(k + 1), scores[k]);
  }

  const std::string text = format_report(report);
  if (!cfg.out.empty()) {
    write_text_file(cfg.out, text);
    Json stats;
    stats["examples"] = st.examples;
    stats["unencodable"] = st.unencodable;
    write_manifest(cfg.out + ".manifest.json",
                   make_manifest("evaluate", to_json(cfg), std::move(stats)));
  } else {
    fallback_out << text;
  }
  return st;
}

// ---------------------------------------------------------------------------
// compare: two reports -> aligned table (itself a parseable report)

struct CompareConfig {
  std::string report_a;
  std::string report_b;
  std::string out;  // empty streams it
};

struct CompareStats {
  std::size_t metrics = 0;
};

inline Json to_json(const CompareConfig& c) {
  Json j;
  j["report_a"] = c.report_a;
  j["report_b"] = c.report_b;
  j["out"] = c.out;
  return j;
}

inline CompareConfig compare_from_json(const Json& j) {
  CompareConfig c;
  c.report_a = j.at("report_a").get<std::string>();
  c.report_b = j.at("report_b").get<std::string>();
  c.out = j.at("out").get<std::string>();
  return c;
}

inline CompareStats run_compare(const CompareConfig& cfg,
                                std::ostream& fallback_out) {
  const Report a = read_report(cfg.report_a);
  const Report b = read_report(cfg.report_b);
  if (a.entries.size() != b.entries.size())
    throw std::runtime_error("compare: reports have different metric sets");
  Report out;
  for (const auto& ea : a.entries) {
    const ReportEntry* eb = b.find(ea.key);
    if (!eb)
      throw std::runtime_error("compare: metric " + ea.key + " missing from " +
                               cfg.report_b);
    out.entries.push_back({ea.key + ".a", ea.value, ea.integral});
    out.entries.push_back({ea.key + ".b", eb->value, eb->integral});
    out.entries.push_back(
        {ea.key + ".delta", ea.value - eb->value, ea.integral && eb->integral});
  }

  const std::string text = format_report(out);
  if (!cfg.out.empty()) {
    write_text_file(cfg.out, text);
    Json stats;
    stats["metrics"] = a.entries.size();
    write_manifest(cfg.out + ".manifest.json",
                   make_manifest("compare", to_json(cfg), std::move(stats)));
  } else {
    fallback_out << text;
  }
  return CompareStats{a.entries.size()};
}

// ---------------------------------------------------------------------------
// attention: one password -> alignment grid

struct AttentionConfig {
  std::string model;
  std::string data;
  std::string password;
  std::string sentence;  // optional: force this tokenized sentence
  std::string out;       // empty streams it
  int beam = 1;
};

struct AttentionStats {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline Json to_json(const AttentionConfig& c) {
  Json j;
  j["model"] = c.model;
  j["data"] = c.data;
  j["password"] = c.password;
  j["sentence"] = c.sentence;
  j["out"] = c.out;
  j["beam"] = c.beam;
  return j;
}

inline AttentionConfig attention_from_json(const Json& j) {
  AttentionConfig c;
  c.model = j.at("model").get<std::string>();
  c.data = j.at("data").get<std::string>();
  c.password = j.at("password").get<std::string>();
  c.sentence = j.at("sentence").get<std::string>();
  c.out = j.at("out").get<std::string>();
  c.beam = j.at("beam").get<int>();
  return c;
}

inline AttentionStats run_attention(const AttentionConfig& cfg,
                                    std::ostream& fallback_out) {
  if (cfg.password.empty())
    throw std::invalid_argument("attention: password required");
  if (cfg.beam < 1) throw std::invalid_argument("attention: --beam must be >= 1");
  if (sniff_model(cfg.model) != ModelKind::kNeuralCheckpoint)
    throw std::invalid_argument("attention: requires a neural checkpoint");
  const NeuralBundle nb = load_neural(cfg.model, cfg.data);

  std::vector<int> token_ids;
  std::vector<std::string> tokens;
  if (!cfg.sentence.empty()) {
    std::istringstream words(cfg.sentence);
    std::string w;
    while (words >> w) {
      const int id = nb.vocabs.words.lookup(w);
      if (id < 0)
        throw std::invalid_argument("attention: token not in vocabulary: " + w);
      token_ids.push_back(id);
      tokens.push_back(w);
    }
    if (token_ids.empty())
      throw std::invalid_argument("attention: --sentence has no tokens");
  } else {
    const DecodeResult best = decode_password(cfg.password, nb, cfg.beam);
    token_ids = best.tokens;
    tokens = decode_tokens(token_ids, nb.vocabs.words);
    if (tokens.empty())
      throw std::runtime_error("attention: decode produced an empty sentence");
  }

  const std::vector<int> ids = encode_password(cfg.password, nb.vocabs.chars);
  const std::string text =
      with_checkpoint_params(nb.checkpoint, [&](const auto& params) {
        return format_attention(utf8_chars(cfg.password), tokens,
                                attention_matrix(ids, token_ids, params));
      });

  AttentionStats st;
  st.rows = utf8_chars(cfg.password).size();
  st.cols = tokens.size();
  if (!cfg.out.empty()) {
    write_text_file(cfg.out, text);
    Json stats;
    stats["rows"] = st.rows;
    stats["cols"] = st.cols;
    write_manifest(cfg.out + ".manifest.json",
                   make_manifest("attention", to_json(cfg), std::move(stats)));
  } else {
    fallback_out << text;
  }
  return st;
}

// ---------------------------------------------------------------------------
// rerun: replay any stage from its manifest

struct RerunResult {
  std::string subcommand;
  int exit_code = 0;
};

inline RerunResult run_from_manifest(const std::string& path, std::ostream& out,
                                     std::ostream& err) {
  Json m;
  try {
    m = Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw std::runtime_error("manifest " + path + ": " + e.what());
  }
  try {
    if (m.at("tool").get<std::string>() != kToolName)
      throw std::runtime_error("manifest " + path + " was not written by " +
                               kToolName);
    const std::string version = m.at("version").get<std::string>();
    if (version != kToolVersion)
      throw std::runtime_error("manifest " + path + " was written by version " +
                               version + "; this tool is " + kToolVersion);
    const std::string sub = m.at("subcommand").get<std::string>();
    const Json& c = m.at("config");
    if (sub == "prepare") {
      run_prepare(prepare_from_json(c));
      return {sub, 0};
    }
    if (sub == "baseline") {
      run_baseline(baseline_from_json(c));
      return {sub, 0};
    }
    if (sub == "train") {
      run_train(train_from_json(c), out);
      return {sub, 0};
    }
    if (sub == "generate") {
      const GenerateStats st = run_generate(generate_from_json(c), out, err);
      return {sub, st.skipped > 0 ? 1 : 0};
    }
    if (sub == "evaluate") {
      run_evaluate(evaluate_from_json(c), out);
      return {sub, 0};
    }
    if (sub == "compare") {
      run_compare(compare_from_json(c), out);
      return {sub, 0};
    }
    if (sub == "attention") {
      run_attention(attention_from_json(c), out);
      return {sub, 0};
    }
    throw std::runtime_error("manifest " + path + " has unknown subcommand " + sub);
  } catch (const Json::exception& e) {
    throw std::runtime_error("manifest " + path + ": " + e.what());
  }
}

}  // namespace mnemoseq
