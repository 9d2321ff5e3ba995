// Command-line surface for the password-to-mnemonic toolkit. Subcommands map
// one-to-one onto the pipeline stages; every stage that writes a file artifact
// also writes a JSON run manifest next to it, and `rerun` replays a manifest.

#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mnemoseq/pipeline.hpp"

namespace {

// "1,5" -> {1, 5}; widths must be positive integers.
std::vector<int> parse_beam_list(const std::string& text) {
  std::vector<int> widths;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    int w = 0;
    try {
      w = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || w < 1)
      throw std::invalid_argument("--beam expects a comma-separated list of widths >= 1, got: " + text);
    widths.push_back(w);
  }
  if (widths.empty())
    throw std::invalid_argument("--beam expects at least one width");
  return widths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mnemoseq: translate passwords into mnemonic sentences"};
  app.set_version_flag("--version", mnemoseq::kToolVersion);
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 all work succeeded; 1 partial failure (skipped password\n"
      "or failed gradient check); 2 invalid arguments or runtime error.");

  mnemoseq::PrepareConfig pcfg;
  CLI::App* prepare = app.add_subcommand(
      "prepare",
      "Tokenize a sentence corpus, derive passwords, filter by length, split "
      "into train/validation/test, and build vocabularies");
  prepare->add_option("--corpus", pcfg.corpus, "input text file, one sentence per line")
      ->required();
  prepare->add_option("--out", pcfg.out, "output directory")->required();
  prepare->add_option("--min-len", pcfg.min_len, "minimum password length")
      ->capture_default_str();
  prepare->add_option("--max-len", pcfg.max_len, "maximum password length")
      ->capture_default_str();
  prepare->add_option("--seed", pcfg.seed, "split shuffle seed")->capture_default_str();
  prepare
      ->add_option("--train-frac", pcfg.train_frac,
                   "fraction carved for training (the rest is test)")
      ->capture_default_str();
  prepare
      ->add_option("--valid-frac", pcfg.valid_frac,
                   "fraction of the training block held out for validation")
      ->capture_default_str();
  prepare->add_option(
      "--dict", pcfg.dict,
      "optional word list (one word per line); sentences containing words "
      "outside it are dropped");

  mnemoseq::TrainCliConfig tcfg;
  CLI::App* train = app.add_subcommand(
      "train", "Train the attentive encoder-decoder on prepared pairs");
  train->add_option("--data", tcfg.data, "prepared data directory (from prepare)");
  train->add_option("--out", tcfg.out, "checkpoint path (the log lands at <out>.log)");
  train->add_option("--embed", tcfg.train.embed, "embedding width")->capture_default_str();
  train->add_option("--hidden", tcfg.train.hidden, "recurrent state width")
      ->capture_default_str();
  train->add_option("--attn", tcfg.train.align, "alignment layer width")
      ->capture_default_str();
  train->add_option("--maxout-k", tcfg.train.maxout, "maxout units in the readout")
      ->capture_default_str();
  train->add_option("--dropout", tcfg.train.dropout, "dropout rate (0 disables)")
      ->capture_default_str();
  train->add_option("--batch", tcfg.train.batch_size, "batch size")->capture_default_str();
  train->add_option("--lr", tcfg.train.learning_rate, "learning rate")
      ->capture_default_str();
  train->add_option("--clip", tcfg.train.clip_norm, "global gradient-norm clip")
      ->capture_default_str();
  train->add_option("--epochs", tcfg.train.max_epochs, "maximum epochs")
      ->capture_default_str();
  train
      ->add_option("--patience", tcfg.train.patience,
                   "epochs without validation improvement before stopping")
      ->capture_default_str();
  train->add_option("--seed", tcfg.train.seed, "initialization/shuffle/dropout seed")
      ->capture_default_str();
  train
      ->add_option("--stop-loss", tcfg.train.stop_train_loss,
                   "finish early once training loss falls to this value (0 disables)")
      ->capture_default_str();
  train->add_option("--precision", tcfg.precision, "checkpoint precision: 32 or 64")
      ->capture_default_str();
  train->add_flag("--grad-check", tcfg.grad_check,
                  "instead of training, compare every parameter gradient against "
                  "finite differences (synthetic 4-char/5-word vocabulary at the "
                  "configured layer sizes) and exit nonzero on any failure");
  train->add_flag("--resume", tcfg.resume,
                  "load the checkpoint at --out and continue its epoch counter");

  mnemoseq::GenerateConfig gcfg;
  CLI::App* generate = app.add_subcommand(
      "generate", "Translate passwords into mnemonic sentences");
  generate->add_option("--model", gcfg.model,
                       "neural checkpoint or baseline model file")
      ->required();
  generate->add_option("--data", gcfg.data,
                       "prepared data directory (vocabularies; neural checkpoints only)");
  generate->add_option("passwords", gcfg.passwords, "passwords to translate");
  generate->add_option("--file", gcfg.file, "file with one password per line");
  generate->add_option("--out", gcfg.out,
                       "write sentences here instead of standard output");
  generate->add_option("--beam", gcfg.beam, "beam width")->capture_default_str();
  generate->add_flag("--restore-case", gcfg.restore,
                     "print display form: uppercase restored from the password, "
                     "punctuation attached");
  generate->add_option(
      "--attention", gcfg.attention,
      "also write each sentence's attention grid to this file (blocks "
      "separated by blank lines; neural checkpoints only)");

  mnemoseq::EvaluateConfig ecfg;
  std::string beam_list = "1";
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Generate for every test pair and report MP and BLEU-1..4");
  evaluate->add_option("--model", ecfg.model,
                       "neural checkpoint or baseline model file")
      ->required();
  evaluate->add_option("--data", ecfg.data,
                       "prepared data directory (vocabularies; neural checkpoints only)");
  evaluate->add_option("--pairs", ecfg.pairs, "pairs file to evaluate on")->required();
  evaluate->add_option("--out", ecfg.out,
                       "write the report here instead of standard output");
  evaluate
      ->add_option("--beam", beam_list,
                   "comma-separated beam widths, e.g. 1,5; the report carries "
                   "one metric block per width")
      ->capture_default_str();

  mnemoseq::CompareConfig ccfg;
  CLI::App* compare = app.add_subcommand(
      "compare", "Align two evaluation reports and print per-metric deltas");
  compare->add_option("report_a", ccfg.report_a, "first report (its values get .a)")
      ->required();
  compare->add_option("report_b", ccfg.report_b, "second report (its values get .b)")
      ->required();
  compare->add_option("--out", ccfg.out,
                      "write the table here instead of standard output");

  mnemoseq::AttentionConfig acfg;
  CLI::App* attention = app.add_subcommand(
      "attention",
      "Export the character-to-word attention grid for one password");
  attention->add_option("--model", acfg.model, "neural checkpoint")->required();
  attention->add_option("--data", acfg.data,
                        "prepared data directory (vocabularies)");
  attention->add_option("password", acfg.password, "password to decode")->required();
  attention->add_option("--sentence", acfg.sentence,
                        "force-decode this space-separated token sequence "
                        "instead of searching");
  attention->add_option("--beam", acfg.beam, "beam width when searching")
      ->capture_default_str();
  attention->add_option("--out", acfg.out,
                        "write the grid here instead of standard output");

  mnemoseq::BaselineConfig bcfg;
  CLI::App* baseline = app.add_subcommand(
      "baseline", "Fit the first-letter-constrained bigram baseline on a pairs file");
  baseline->add_option("--pairs", bcfg.pairs, "training pairs file")->required();
  baseline->add_option("--out", bcfg.out, "baseline model file to write")->required();

  std::string manifest_path;
  CLI::App* rerun = app.add_subcommand(
      "rerun", "Replay a pipeline stage from its run manifest");
  rerun->add_option("manifest", manifest_path, "manifest JSON written by a stage")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prepare) {
      const mnemoseq::PrepareStats st = mnemoseq::run_prepare(pcfg);
      std::cerr << "prepared " << st.pairs_kept << " pairs: train "
                << st.split.train << " validation " << st.split.validation
                << " test " << st.split.test << '\n';
      return 0;
    }
    if (*train) {
      const mnemoseq::TrainCliStats st = mnemoseq::run_train(tcfg, std::cout);
      return st.grad_ok ? 0 : 1;
    }
    if (*generate) {
      const mnemoseq::GenerateStats st =
          mnemoseq::run_generate(gcfg, std::cout, std::cerr);
      if (!gcfg.out.empty())
        std::cerr << "wrote " << st.generated << " sentences to " << gcfg.out
                  << (st.skipped ? " (skipped " + std::to_string(st.skipped) + ")"
                                 : "")
                  << '\n';
      return st.skipped > 0 ? 1 : 0;
    }
    if (*evaluate) {
      ecfg.beams = parse_beam_list(beam_list);
      mnemoseq::run_evaluate(ecfg, std::cout);
      if (!ecfg.out.empty())
        std::cerr << "wrote report to " << ecfg.out << '\n';
      return 0;
    }
    if (*compare) {
      mnemoseq::run_compare(ccfg, std::cout);
      if (!ccfg.out.empty())
        std::cerr << "wrote comparison to " << ccfg.out << '\n';
      return 0;
    }
    if (*attention) {
      const mnemoseq::AttentionStats st = mnemoseq::run_attention(acfg, std::cout);
      if (!acfg.out.empty())
        std::cerr << "wrote " << st.rows << "x" << st.cols
                  << " attention grid to " << acfg.out << '\n';
      return 0;
    }
    if (*baseline) {
      const mnemoseq::BaselineStats st = mnemoseq::run_baseline(bcfg);
      std::cerr << "fitted bigram model on " << st.sentences << " sentences ("
                << st.distinct_bigrams << " distinct bigrams)\n";
      return 0;
    }
    if (*rerun) {
      return mnemoseq::run_from_manifest(manifest_path, std::cout, std::cerr)
          .exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
