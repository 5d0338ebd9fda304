/* Copyright 2026 The tsadv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Defenses against sparse input perturbations: Gaussian data augmentation at
// training time, randomized smoothing at inference time, and mini-max
// adversarial training against a learned sparse layer. All input noise is
// relative, x(1 + eps).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsadv/attacks/attacks.hpp"
#include "tsadv/common/errors.hpp"
#include "tsadv/models/fit.hpp"
#include "tsadv/models/types.hpp"

namespace tsadv::defenses {

using diffkit::Tensor;
using models::ForecasterParams;
using models::PredictiveSamples;
using models::Window;

enum class DefenseKind { kNone, kAugmentation, kSmoothing, kMinimax };

std::string_view defense_name(DefenseKind kind);
DefenseKind parse_defense(std::string_view name);

inline constexpr std::uint64_t kAugmentStream = 0x6175676d;  // "augm"
inline constexpr std::uint64_t kMinimaxStream = 0x6d696e6d;  // "minm"

// x(1 + xi), xi ~ N(0, sigma^2) elementwise; y_true is untouched.
Window augment(const Window& window, double sigma, std::uint64_t seed);

struct AugmentConfig {
  double sigma = 0.1;
  // Jittered copies per training window; the clean window is not kept.
  std::size_t copies = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fits the forecaster on jittered copies of the training windows.
models::FitResult fit_augmented(std::span<const Window> windows, const models::FitConfig& fit,
                                const AugmentConfig& cfg);

struct SmoothingConfig {
  double sigma = 0.1;
  std::size_t n = 100;
  std::uint64_t seed = 0;

  void validate() const;
  // Sampling options that route a draw through the smoothed forecaster.
  models::SampleOptions options() const { return models::SampleOptions{false, sigma}; }
};

// n paths, each from the base forecaster given its own jittered history
// x(1 + eps_i). With sigma = 0 this reproduces sample_paths for the same seed.
PredictiveSamples smoothed_sample_paths(const ForecasterParams& params, const Tensor& x,
                                        std::size_t horizon, const SmoothingConfig& cfg);

struct MinimaxConfig {
  // Defender sparse-layer sparsity; 0 selects ceil(dim / 2).
  std::size_t k = 0;
  std::size_t epochs = 8;
  std::size_t attacker_steps = 10;
  std::size_t model_steps = 10;
  double attacker_lr = 0.05;
  double model_lr = 2e-3;
  double clip_norm = 10.0;
  // Perturbation draws per window per step.
  std::size_t n_delta = 8;
  // Sampled paths per perturbed history when estimating E[y] for recurrent
  // models; linear-VAR uses its exact noise-free mean.
  std::size_t n_paths = 4;
  std::size_t batch_size = 8;
  double eta = 0.5;
  double temperature = 0.1;
  // Test hook: the defender layer is never trained and emits delta = 0.
  bool freeze_layer = false;
  std::uint64_t seed = 0;

  std::size_t effective_k(std::size_t dim) const { return k > 0 ? k : (dim + 1) / 2; }
  // Throws std::invalid_argument on an empty schedule or out-of-range k.
  void validate(std::size_t dim) const;
};

struct MinimaxResult {
  ForecasterParams params;
  attacks::SparseLayerParams layer;
  // Per epoch: mean attacker objective (negative mean l2 deviation of the
  // forecast mean from the truth, mean-scaled units) and mean corrupted-input
  // NLL per value seen by the model steps.
  std::vector<double> attacker_loss;
  std::vector<double> model_nll;
};

// Raised when either loop produces a non-finite objective; carries the
// parameters at the end of the last completed epoch.
class MinimaxDivergence : public DivergenceError {
 public:
  MinimaxDivergence(const std::string& what, ForecasterParams last_stable, std::size_t epoch)
      : DivergenceError(what), last_stable_(std::move(last_stable)), epoch_(epoch) {}
  const ForecasterParams& last_stable() const { return last_stable_; }
  std::size_t epoch() const { return epoch_; }

 private:
  ForecasterParams last_stable_;
  std::size_t epoch_;
};

// Alternates, once per epoch, attacker steps that train the defender's sparse
// layer to push the forecast mean away from the truth and model steps that
// maximize the likelihood of y_true given x(1 + delta). Starts from the
// maximum-likelihood fit of `fit`. No rows are exempt from perturbation.
MinimaxResult minimax_train(std::span<const Window> windows, const models::FitConfig& fit,
                            const MinimaxConfig& cfg);

// Corrupted-input NLL per value over `windows`, averaged over n_delta hard
// draws per window from `layer` (clipped to eta). With a frozen layer it is
// the ordinary dataset NLL.
double corrupted_nll(const ForecasterParams& params, const attacks::SparseLayerParams& layer,
                     std::span<const Window> windows, const MinimaxConfig& cfg,
                     std::uint64_t seed);

nlohmann::json to_json(const AugmentConfig& cfg);
nlohmann::json to_json(const SmoothingConfig& cfg);
nlohmann::json to_json(const MinimaxConfig& cfg);
AugmentConfig augment_config_from_json(const nlohmann::json& doc);
SmoothingConfig smoothing_config_from_json(const nlohmann::json& doc);
MinimaxConfig minimax_config_from_json(const nlohmann::json& doc);

// Checkpoint metadata block {"kind": ..., <config fields>}.
nlohmann::json defense_metadata(DefenseKind kind, const nlohmann::json& config);

}  // namespace tsadv::defenses
