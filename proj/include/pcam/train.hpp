#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pcam/dataset.hpp"
#include "pcam/network.hpp"
#include "pcam/rng.hpp"

namespace pcam {

struct TrainConfig {
  std::size_t batch_size = 16;
  double base_lr = 1e-4;
  double momentum = 0.9;
  std::size_t max_epochs = 30;
  std::size_t stop_window = 50;
  double stop_threshold = 0.995;
  std::uint64_t seed = 0;
  bool augment = true;
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  std::vector<BatchRecord> batches;
  std::size_t epochs_done = 0;
  bool stopped_early = false;
};

struct Metrics {
  // rows = true class, cols = predicted class
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<double> per_class_accuracy;
  double overall_accuracy = 0.0;
};

// v' = momentum*v + grad; param' = param - (base_lr*lr_factor)*v'.
void sgdm_step(Tensor& param, const Tensor& grad, Tensor& velocity,
               double base_lr, double lr_factor, double momentum);

// SGDM over every parameter layer; frozen layers are skipped entirely
// (velocity untouched). velocity must come from alloc_grads(net).
void sgdm_apply(Network& net, const NetworkGrads& grads,
                NetworkGrads& velocity, double base_lr, double momentum);

// True iff the last stop_window batch accuracies average at least
// stop_threshold (window must be full) or epochs_done hit max_epochs.
bool should_stop(const std::vector<double>& batch_accuracy_history,
                 std::size_t epochs_done, const TrainConfig& cfg);

// Stratified: per class, shuffle then first floor(0.85*n) to train.
std::pair<Dataset, Dataset> split_85_15(const Dataset& data, RngState& rng);

// Shuffle then round-robin into k folds; pair i = (all but fold i,
// fold i). Fold sizes differ by at most 1.
std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& data,
                                               std::size_t k, RngState& rng);

// Seeded-shuffled minibatches (short final batch kept); augmentation
// per cfg.augment with per-sample streams derived from cfg.seed+1;
// stops per should_stop. shuffle_rng orders each epoch (callers
// typically pass a stream seeded with cfg.seed+2). Throws NumericError
// naming epoch/batch if the loss goes non-finite.
TrainHistory train_loop(Network& net, const Dataset& data,
                        const TrainConfig& cfg, RngState& shuffle_rng);

// No augmentation. Throws on an empty dataset.
Metrics evaluate(const Network& net, const Dataset& data);

struct CrossvalResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
};

// For each fold: fresh head on the base trunk, train on the fold's
// training part, evaluate on its validation part. Folds come from
// kfold with a stream seeded cfg.seed+2.
CrossvalResult cross_validate(const Network& base, const Dataset& data,
                              std::size_t k, const TrainConfig& cfg,
                              double head_lr_factor = 20.0);

}  // namespace pcam
