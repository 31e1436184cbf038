#include "pcam/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pcam/augment.hpp"
#include "pcam/errors.hpp"

namespace pcam {

void sgdm_step(Tensor& param, const Tensor& grad, Tensor& velocity,
               double base_lr, double lr_factor, double momentum) {
  if (!param.same_shape(grad) || !param.same_shape(velocity))
    throw std::invalid_argument("sgdm_step: shape mismatch");
  if (lr_factor < 0.0)
    throw std::invalid_argument("sgdm_step: negative lr_factor");
  const double step = base_lr * lr_factor;
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= step * velocity[i];
  }
}

namespace {

void sgdm_layer(LayerSpec& spec, const LayerGrads& grads, LayerGrads& velocity,
                double base_lr, double momentum) {
  if (spec.frozen) return;
  if (!spec.weight.empty())
    sgdm_step(spec.weight, grads.weight, velocity.weight, base_lr,
              spec.lr_factor, momentum);
  if (!spec.bias.empty())
    sgdm_step(spec.bias, grads.bias, velocity.bias, base_lr, spec.lr_factor,
              momentum);
  for (std::size_t i = 0; i < spec.nested.size(); ++i)
    sgdm_layer(spec.nested[i], grads.nested[i], velocity.nested[i], base_lr,
               momentum);
}

// Fisher-Yates with draws from rng; modulo bias is irrelevant at these
// sizes and keeps the stream schedule simple.
void shuffle_indices(std::vector<std::size_t>& idx, RngState& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng_next_u64(rng) % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

void sgdm_apply(Network& net, const NetworkGrads& grads,
                NetworkGrads& velocity, double base_lr, double momentum) {
  if (grads.size() != net.layers.size() ||
      velocity.size() != net.layers.size())
    throw std::invalid_argument("sgdm_apply: layer count mismatch");
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    sgdm_layer(net.layers[i], grads[i], velocity[i], base_lr, momentum);
}

bool should_stop(const std::vector<double>& batch_accuracy_history,
                 std::size_t epochs_done, const TrainConfig& cfg) {
  if (epochs_done >= cfg.max_epochs) return true;
  if (batch_accuracy_history.size() < cfg.stop_window) return false;
  double sum = 0.0;
  for (std::size_t i = batch_accuracy_history.size() - cfg.stop_window;
       i < batch_accuracy_history.size(); ++i)
    sum += batch_accuracy_history[i];
  return sum / static_cast<double>(cfg.stop_window) >= cfg.stop_threshold;
}

std::pair<Dataset, Dataset> split_85_15(const Dataset& data, RngState& rng) {
  const std::size_t k = data.class_names.size();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const std::size_t label = data.samples[i].label;
    if (label >= k) throw std::invalid_argument("split: label out of range");
    by_class[label].push_back(i);
  }
  Dataset train, test;
  train.class_names = data.class_names;
  test.class_names = data.class_names;
  for (std::size_t c = 0; c < k; ++c) {
    if (by_class[c].empty())
      throw std::invalid_argument("split: empty class '" +
                                  data.class_names[c] + "'");
    shuffle_indices(by_class[c], rng);
    const std::size_t n = by_class[c].size();
    const std::size_t n_train = (17 * n) / 20;  // floor(0.85*n), exact
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? train : test).samples.push_back(
          data.samples[by_class[c][i]]);
    }
  }
  return {std::move(train), std::move(test)};
}

std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& data,
                                               std::size_t k, RngState& rng) {
  if (k < 2) throw std::invalid_argument("kfold: k must be at least 2");
  if (data.samples.size() < k)
    throw std::invalid_argument("kfold: fewer samples than folds");
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_indices(order, rng);
  std::vector<std::pair<Dataset, Dataset>> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    out[f].first.class_names = data.class_names;
    out[f].second.class_names = data.class_names;
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Sample& s = data.samples[order[pos]];
    const std::size_t fold = pos % k;
    for (std::size_t f = 0; f < k; ++f)
      (f == fold ? out[f].second : out[f].first).samples.push_back(s);
  }
  return out;
}

TrainHistory train_loop(Network& net, const Dataset& data,
                        const TrainConfig& cfg, RngState& shuffle_rng) {
  if (data.samples.empty())
    throw std::invalid_argument("train: empty dataset");
  if (data.class_names.size() != net.class_names.size())
    throw std::invalid_argument("train: dataset classes do not match network");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");

  const std::size_t n = data.samples.size();
  TrainHistory history;
  std::vector<double> acc_history;
  NetworkGrads velocity = alloc_grads(net);
  NetworkGrads batch_grads = alloc_grads(net);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const AugmentPolicy policy{};
  std::uint64_t occurrence = 0;

  std::size_t epoch = 0;
  for (; !should_stop(acc_history, epoch, cfg); ++epoch) {
    shuffle_indices(order, shuffle_rng);
    bool stop_now = false;
    for (std::size_t start = 0, batch_idx = 0; start < n;
         start += cfg.batch_size, ++batch_idx) {
      const std::size_t bn = std::min(cfg.batch_size, n - start);
      // Per-sample augmentation streams are fixed before the parallel
      // region so scheduling cannot change any draw.
      std::vector<std::uint64_t> aug_seeds(bn);
      for (std::size_t i = 0; i < bn; ++i)
        aug_seeds[i] = (cfg.seed + 1) ^ (occurrence + i);
      occurrence += bn;

      std::vector<NetworkGrads> sample_grads(bn);
      std::vector<double> sample_loss(bn, 0.0);
      std::vector<std::size_t> sample_pred(bn, 0);
      std::vector<std::string> sample_error(bn);
      const std::ptrdiff_t bns = static_cast<std::ptrdiff_t>(bn);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < bns; ++i) {
        try {
          const Sample& s = data.samples[order[start + i]];
          Tensor img = s.image;
          if (cfg.augment) {
            RngState aug_rng(aug_seeds[i]);
            img = augment_sample(img, policy, aug_rng);
          }
          ForwardTrace trace = network_forward(net, img);
          sample_pred[i] = trace.predicted;
          sample_grads[i] = alloc_grads(net);
          sample_loss[i] =
              network_backward(net, trace, s.label, sample_grads[i]);
        } catch (const std::exception& e) {
          sample_error[i] = e.what();
        }
      }
      for (std::size_t i = 0; i < bn; ++i)
        if (!sample_error[i].empty())
          throw NumericError("train: epoch " + std::to_string(epoch) +
                             " batch " + std::to_string(batch_idx) + ": " +
                             sample_error[i]);

      // Fixed-order batch reduction: sample index ascending.
      scale_grads(batch_grads, 0.0);
      double loss_sum = 0.0;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < bn; ++i) {
        accumulate_grads(batch_grads, sample_grads[i]);
        loss_sum += sample_loss[i];
        if (sample_pred[i] == data.samples[order[start + i]].label) ++correct;
      }
      scale_grads(batch_grads, 1.0 / static_cast<double>(bn));
      const double batch_loss = loss_sum / static_cast<double>(bn);
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch) + " batch " +
                           std::to_string(batch_idx));
      sgdm_apply(net, batch_grads, velocity, cfg.base_lr, cfg.momentum);

      const double batch_acc =
          static_cast<double>(correct) / static_cast<double>(bn);
      acc_history.push_back(batch_acc);
      history.batches.push_back({epoch, batch_idx, batch_loss, batch_acc});
      if (should_stop(acc_history, epoch, cfg)) {
        stop_now = true;
        if (start + bn >= n) ++epoch;  // window rule hit on a full epoch
        break;
      }
    }
    if (stop_now) {
      history.stopped_early = true;
      break;
    }
  }
  history.epochs_done = epoch;
  return history;
}

Metrics evaluate(const Network& net, const Dataset& data) {
  if (data.samples.empty())
    throw std::invalid_argument("evaluate: empty dataset");
  const std::size_t k = net.class_names.size();
  const std::size_t n = data.samples.size();
  std::vector<std::size_t> pred(n, 0);
  std::vector<std::string> errors(n);
  const std::ptrdiff_t ns = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ns; ++i) {
    try {
      pred[i] = network_forward(net, data.samples[i].image).predicted;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw NumericError("evaluate: sample " + std::to_string(i) + ": " +
                         errors[i]);

  Metrics m;
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (data.samples[i].label >= k)
      throw std::invalid_argument("evaluate: label out of range");
    m.confusion[data.samples[i].label][pred[i]]++;
  }
  std::size_t diag = 0;
  m.per_class_accuracy.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < k; ++j) row += m.confusion[c][j];
    if (row > 0)
      m.per_class_accuracy[c] = static_cast<double>(m.confusion[c][c]) /
                                static_cast<double>(row);
    diag += m.confusion[c][c];
  }
  m.overall_accuracy = static_cast<double>(diag) / static_cast<double>(n);
  return m;
}

CrossvalResult cross_validate(const Network& base, const Dataset& data,
                              std::size_t k, const TrainConfig& cfg,
                              double head_lr_factor) {
  RngState fold_rng(cfg.seed + 2);
  auto folds = kfold(data, k, fold_rng);
  CrossvalResult result;
  for (auto& [fold_train, fold_val] : folds) {
    RngState head_rng(cfg.seed);
    Network net = replace_head(base, data.class_names, head_rng,
                               head_lr_factor);
    RngState shuffle_rng(cfg.seed + 2);
    train_loop(net, fold_train, cfg, shuffle_rng);
    result.fold_accuracies.push_back(
        evaluate(net, fold_val).overall_accuracy);
  }
  double sum = 0.0;
  for (double a : result.fold_accuracies) sum += a;
  result.mean_accuracy = sum / static_cast<double>(k);
  return result;
}

}  // namespace pcam
