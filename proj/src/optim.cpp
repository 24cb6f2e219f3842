#include "fakenews/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fakenews/errors.hpp"

namespace fakenews {

Var categorical_crossentropy(Var probs, int label) {
  const Tensor& p = probs.value();
  if (p.rank() != 1) throw DimensionError("categorical_crossentropy expects a probability vector");
  if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
    throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(p.size()) + ")");
  }
  const auto k = static_cast<std::size_t>(label);
  const double clamped = std::max(p[k], kProbabilityFloor);
  const std::size_t ip = probs.id();
  return probs.graph().record("crossentropy", {ip}, Tensor::scalar(-std::log(clamped)),
                              [=](Graph& g, std::size_t self) {
    const double pk = g.value(ip)[k];
    if (pk < kProbabilityFloor) return;  // clamped: locally constant
    g.adjoint(ip)[k] += -g.adjoint(self)[0] / pk;
  });
}

void adadelta_step(std::span<Tensor* const> params, AdadeltaState& state) {
  if (state.mean_sq_grad.size() != params.size()) {
    state.mean_sq_grad.clear();
    state.mean_sq_update.clear();
    for (Tensor* p : params) {
      state.mean_sq_grad.emplace_back(p->size(), 0.0);
      state.mean_sq_update.emplace_back(p->size(), 0.0);
    }
  }
  const double rho = state.rho, eps = state.epsilon;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    if (!p.has_grad() || p.grad().size() != p.size()) {
      throw ContractError("adadelta_step: parameter " + std::to_string(k) + " has no gradient");
    }
    auto& eg = state.mean_sq_grad[k];
    auto& ex = state.mean_sq_update[k];
    if (eg.size() != p.size()) throw ContractError("adadelta_step: state does not match parameters");
    auto x = p.data();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = grad[i];
      eg[i] = rho * eg[i] + (1.0 - rho) * g * g;
      const double dx = -(std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps)) * g;
      ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
      x[i] += dx;
    }
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ContractError("epsilon must be positive");
  if (patience && *patience == 0) throw ContractError("patience must be positive when set");
  if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
    throw ContractError("target accuracy must lie in (0, 1]");
  }
}

std::string EpochRecord::to_line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"epoch\":%zu,\"mean_loss\":%.17g,\"train_accuracy\":%.17g,\"val_accuracy\":%.17g}",
                epoch, mean_loss, train_accuracy, val_accuracy);
  return buf;
}

double accuracy(const ModelGraph& model, std::span<const EncodedExample> examples, std::size_t threads) {
  if (examples.empty()) return 0.0;
  const auto preds = predict_batch(model, examples, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label == examples[i].label_index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

namespace {

std::vector<std::vector<double>> snapshot(ParameterStore& params) {
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto d = params.tensor(i).data();
    values.emplace_back(d.begin(), d.end());
  }
  return values;
}

void restore(ParameterStore& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), params.tensor(i).data().begin());
  }
}

}  // namespace

TrainingLog train(ModelGraph& model, std::span<const EncodedExample> train_set,
                  std::span<const EncodedExample> valid_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ContractError("training set is empty");
  TrainingLog log;
  if (config.epochs == 0) return log;

  ParameterStore& params = model.parameters();
  const std::vector<Tensor*> trainable = params.trainable();
  AdadeltaState state;
  state.rho = config.rho;
  state.epsilon = config.epsilon;
  Rng rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> best = snapshot(params);
  std::size_t since_best = 0;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const EncodedExample& ex = train_set[order[i]];
        Graph g;
        Var probs = model.forward(g, ex);
        if (argmax_label(probs.value().data()) == ex.label_index) ++correct;
        Var loss = categorical_crossentropy(probs, ex.label_index);
        const double value = loss.value()[0];
        if (!std::isfinite(value)) {
          throw TrainingError("non-finite loss in batch " + std::to_string(batch_index) +
                              " (epoch " + std::to_string(epoch) + ")");
        }
        loss_sum += value;
        g.backward(scale(loss, weight));
      }
      adadelta_step(trainable, state);
      model.after_step();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.val_accuracy = valid_set.empty() ? accuracy(model, train_set) : accuracy(model, valid_set);
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (log.best_epoch == 0 || rec.val_accuracy > log.best_val_accuracy) {
      log.best_epoch = epoch;
      log.best_val_accuracy = rec.val_accuracy;
      best = snapshot(params);
      since_best = 0;
    } else {
      ++since_best;
    }
    if (config.target_accuracy && rec.val_accuracy >= *config.target_accuracy) break;
    if (config.patience && since_best >= *config.patience) break;
  }
  restore(params, best);
  return log;
}

}  // namespace fakenews
