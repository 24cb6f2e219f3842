#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fakenews/autodiff.hpp"
#include "fakenews/models.hpp"

namespace fakenews {

inline constexpr double kProbabilityFloor = 1e-12;

/// -log(max(probs[label], 1e-12)) as a scalar node.
Var categorical_crossentropy(Var probs, int label);

struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  std::vector<std::vector<double>> mean_sq_grad;    // E[g^2]
  std::vector<std::vector<double>> mean_sq_update;  // E[dx^2]
};

/// Per element, in this order:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       <- x + dx
/// Accumulators are allocated on first use. Throws ContractError when a
/// parameter has no gradient.
void adadelta_step(std::span<Tensor* const> params, AdadeltaState& state);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 42;
  double rho = 0.95;
  double epsilon = 1e-6;
  bool shuffle = true;
  /// Stop after this many epochs without a validation-accuracy improvement.
  std::optional<std::size_t> patience = 5;
  /// Stop as soon as validation accuracy reaches this value.
  std::optional<double> target_accuracy;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // accuracy of the in-epoch forward passes
  double val_accuracy = 0.0;

  /// One JSON object on one line; reals printed round-trip exact.
  std::string to_line() const;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_accuracy = 0.0;
};

double accuracy(const ModelGraph& model, std::span<const EncodedExample> examples, std::size_t threads = 1);

/// Shuffled mini-batch training with Adadelta on the mean cross-entropy of
/// each batch. Validation accuracy is measured after every epoch (on the
/// training set when `valid` is empty); the model ends holding the
/// parameters of the best epoch. Throws TrainingError on a non-finite loss.
TrainingLog train(ModelGraph& model, std::span<const EncodedExample> train_set,
                  std::span<const EncodedExample> valid_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace fakenews
