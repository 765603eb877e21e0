#include <algorithm>
#include <cmath>
#include <limits>

#include "litefat/errors.hpp"
#include "litefat/model.hpp"
#include "litefat/rng.hpp"

namespace litefat::model {

bool EarlyStopping::observe(double loss) {
  if (!has_best_ || best_ - loss > min_improvement_) {
    best_ = loss;
    has_best_ = true;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

TrainResult train_loop(const std::vector<ingest::ClipSample>& train_clips,
                       const ModelConfig& config, const TrainOptions& options,
                       const EpochCallback& on_epoch) {
  if (train_clips.empty()) throw InputError("train_loop: empty training split");
  if (options.batch_size == 0)
    throw InputError("train_loop: batch size must be >= 1");

  std::vector<Sample> samples;
  samples.reserve(train_clips.size());
  for (const auto& clip : train_clips) samples.push_back(to_sample(clip));

  ModelParams params = init_params(config, options.seed);
  ModelParams grads = zeros_like(config);
  AdamState adam = AdamState::init(config, options.learning_rate);
  EarlyStopping stopper(options.patience, options.min_improvement);
  Rng shuffle_rng = Rng::substream(options.seed, 0x5348);

  TrainResult result;
  result.params = params;
  result.history.best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    // Fisher-Yates with the pinned generator.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.bounded(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end =
          std::min(cursor + options.batch_size, order.size());
      const auto batch_n = static_cast<double>(batch_end - cursor);
      zero_tensors(grads);
      for (std::size_t b = cursor; b < batch_end; ++b) {
        const Sample& sample = samples[order[b]];
        ForwardResult fwd = model_forward(sample, params);
        const double loss = cross_entropy_loss(fwd.probs, sample.label);
        if (!std::isfinite(loss))
          throw NumericError("train_loop: non-finite training loss");
        epoch_loss += loss;
        backward_pass(params, fwd.trace, sample.label, grads,
                      /*accumulate=*/true);
      }
      scale_tensors(grads, 1.0 / batch_n);
      adam_step(params, grads, adam);
      cursor = batch_end;
    }
    epoch_loss /= static_cast<double>(samples.size());
    result.history.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);

    if (epoch_loss < result.history.best_loss) {
      result.history.best_loss = epoch_loss;
      result.history.best_epoch = epoch;
      result.params = params;
    }
    if (stopper.observe(epoch_loss)) {
      result.history.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace litefat::model
