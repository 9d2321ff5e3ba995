#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mnemoseq/corpus.hpp"
#include "mnemoseq/loss.hpp"
#include "mnemoseq/model.hpp"
#include "mnemoseq/optimizer.hpp"
#include "mnemoseq/rng.hpp"

namespace mnemoseq {

struct TrainConfig {
  int embed = 256;
  int hidden = 256;
  int align = 256;
  int maxout = 256;
  double dropout = 0.2;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  int max_epochs = 10;
  int patience = 5;         // epochs without validation improvement
  std::uint64_t seed = 1;
  double stop_train_loss = 0.0;  // >0: finish early once train loss dips below
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  int skipped_updates = 0;  // batches whose gradients were non-finite
};

template <typename S>
struct TrainResult {
  ModelParams<S> best;
  int best_epoch = 0;
  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<EpochStats> history;
};

// Examples whose password contains a character absent from the vocabulary
// cannot be embedded; they are dropped before training.
inline std::vector<PairExample> drop_unknown_chars(
    const std::vector<PairExample>& examples, std::size_t* dropped = nullptr) {
  std::vector<PairExample> kept;
  std::size_t removed = 0;
  for (const auto& ex : examples) {
    if (has_unknown_chars(ex))
      ++removed;
    else
      kept.push_back(ex);
  }
  if (dropped) *dropped = removed;
  return kept;
}

// Token-weighted mean loss over a whole set, dropout off.
template <typename S>
double mean_loss(const std::vector<PairExample>& examples,
                 const ModelParams<S>& params, int batch_size) {
  if (examples.empty())
    throw std::invalid_argument("mean_loss: no examples");
  PadPolicy pad{0, params.dims.word_vocab};
  double total = 0.0;
  std::size_t tokens = 0;
  for (const Batch& batch : make_batches(examples, batch_size, pad)) {
    LossCache<S> cache;
    forward_loss(batch, params, false, 0.0, 0, &cache);
    total += static_cast<double>(cache.loss) * static_cast<double>(cache.tokens);
    tokens += cache.tokens;
  }
  return total / static_cast<double>(tokens);
}

// Trains on split.train, selects the best epoch by validation loss (training
// loss when the validation set is empty), and stops early after `patience`
// epochs without improvement. Deterministic for a fixed config and split:
// epoch shuffles and per-batch dropout masks all derive from cfg.seed.
template <typename S = float>
TrainResult<S> train(const DatasetSplit& split, const VocabPair& vocabs,
                     const TrainConfig& cfg, std::ostream* log = nullptr,
                     const ModelParams<S>* resume_from = nullptr,
                     int start_epoch = 0) {
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (cfg.max_epochs < 1) throw std::invalid_argument("train: max_epochs < 1");
  if (cfg.patience < 1) throw std::invalid_argument("train: patience < 1");

  std::size_t dropped_train = 0, dropped_valid = 0;
  std::vector<PairExample> train_set =
      drop_unknown_chars(split.train, &dropped_train);
  std::vector<PairExample> valid_set =
      drop_unknown_chars(split.validation, &dropped_valid);
  if (log && (dropped_train || dropped_valid))
    *log << "dropped " << dropped_train << " train / " << dropped_valid
         << " validation examples with out-of-vocabulary characters\n";
  if (train_set.empty())
    throw std::invalid_argument("train: no usable training examples");

  ModelDims dims;
  dims.char_vocab = vocabs.chars.size();
  dims.word_vocab = vocabs.words.size();
  dims.embed = cfg.embed;
  dims.hidden = cfg.hidden;
  dims.align = cfg.align;
  dims.maxout = cfg.maxout;

  ModelParams<S> params;
  if (resume_from) {
    if (!(resume_from->dims == dims))
      throw std::invalid_argument("train: resume model has different dimensions");
    params = *resume_from;
  } else {
    params = init_params<S>(dims, cfg.seed);
  }

  OptimizerConfig opt;
  opt.learning_rate = cfg.learning_rate;
  opt.clip_norm = cfg.clip_norm;
  AdamState<S> adam = AdamState<S>::zeros(dims);

  PadPolicy pad{0, dims.word_vocab};
  const bool use_dropout = cfg.dropout > 0.0;

  TrainResult<S> result;
  result.best = params;
  result.best_epoch = start_epoch;
  int since_best = 0;

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = start_epoch + 1; epoch <= start_epoch + cfg.max_epochs;
       ++epoch) {
    const std::uint64_t epoch_seed =
        mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch));
    Rng shuffle_rng(epoch_seed);
    shuffle_rng.shuffle(order.begin(), order.end());

    EpochStats stats;
    stats.epoch = epoch;
    double total = 0.0;
    std::size_t tokens = 0;
    std::uint64_t batch_index = 0;
    for (const Batch& batch :
         make_batches(train_set, order, cfg.batch_size, pad)) {
      LossCache<S> cache;
      forward_loss(batch, params, use_dropout, cfg.dropout,
                   mix_seed(epoch_seed, batch_index), &cache);
      ModelParams<S> grads = backward_gradients(cache, params);
      if (!apply_update(params, grads, adam, opt)) ++stats.skipped_updates;
      total += static_cast<double>(cache.loss) *
               static_cast<double>(cache.tokens);
      tokens += cache.tokens;
      ++batch_index;
    }
    stats.train_loss = total / static_cast<double>(tokens);
    stats.valid_loss = valid_set.empty()
                           ? stats.train_loss
                           : mean_loss(valid_set, params, cfg.batch_size);
    result.history.push_back(stats);

    if (stats.valid_loss < result.best_valid) {
      result.best_valid = stats.valid_loss;
      result.best_epoch = epoch;
      result.best = params;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (log) {
      *log << "epoch " << epoch << " train " << stats.train_loss << " valid "
           << stats.valid_loss;
      if (stats.skipped_updates)
        *log << " skipped " << stats.skipped_updates;
      if (result.best_epoch == epoch) *log << " *";
      *log << "\n";
    }

    if (cfg.stop_train_loss > 0.0 && stats.train_loss <= cfg.stop_train_loss)
      break;
    if (since_best >= cfg.patience) break;
  }
  return result;
}

}  // namespace mnemoseq
