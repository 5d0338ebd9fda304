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

// Sparse indirect attacks. A perturbation delta (dim x T) acts
// multiplicatively on the history, x(1 + delta), never touches the target
// rows I, has at most k nonzero rows and entries bounded by eta.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsadv/diffkit/graph.hpp"
#include "tsadv/models/forecaster.hpp"
#include "tsadv/models/types.hpp"

namespace tsadv::attacks {

using diffkit::Tensor;
using models::ForecasterParams;
using models::PredictiveSamples;
using models::Window;

inline constexpr std::uint64_t kTargetStream = 0x74617267;  // "targ"
inline constexpr std::uint64_t kAttackStream = 0x61747463;  // "attc"
inline constexpr std::uint64_t kLayerStream = 0x6c617972;   // "layr"

enum class RowRanking { kSquaredL2, kL1 };
// chi(y): values at (I, H), their mean over H, or their sum over I.
enum class Statistic { kPoint, kMeanOverHorizon, kSumOverItems };

struct AttackSpec {
  std::vector<std::size_t> targets;   // I, item indices
  std::vector<std::size_t> horizons;  // H, zero-based offsets into the horizon
  std::size_t k = 1;
  double eta = 0.5;
  double c1 = 2.0;
  std::size_t iterations = 200;
  // 0 selects eta / 8.
  double step_size = 0.0;
  std::size_t n_grad = 32;
  RowRanking ranking = RowRanking::kSquaredL2;
  Statistic statistic = Statistic::kPoint;

  double effective_step() const { return step_size > 0.0 ? step_size : eta / 8.0; }
  bool is_target(std::size_t item) const;
  // Throws std::invalid_argument unless I and H are nonempty and in range,
  // 1 <= k <= dim - |I|, eta > 0, and c1 > 0 with c1 != 1.
  void validate(std::size_t dim, std::size_t horizon) const;
};

enum class BoundKind {
  kHard,      // s(delta) <= k holds for this draw
  kExpected,  // E[s(delta)] <= k holds for the distribution it came from
};

struct Perturbation {
  Tensor delta;  // dim x T
  AttackSpec spec;
  std::size_t sparsity = 0;
  double max_norm = 0.0;
  BoundKind bound = BoundKind::kHard;
  // Expected row sparsity of the generating distribution (probabilistic only).
  std::optional<double> expected_sparsity;
  std::size_t window_id = 0;
  std::uint64_t seed = 0;
};

std::size_t row_sparsity(const Tensor& delta);
double max_abs(const Tensor& delta);
// x(1 + delta)
Tensor apply_perturbation(const Tensor& x, const Tensor& delta);

// Number of rollout steps needed to reach every offset in H.
std::size_t rollout_length(const AttackSpec& spec);

// Matrix S (|I||H| x m) with chi(y) = vec(y_{I,H}) S, vec ordered item-major.
Tensor statistic_matrix(const AttackSpec& spec);

// c1 * chi(y_hat) for the first path of `samples`; 1 x m.
Tensor adversarial_target(const PredictiveSamples& samples, const AttackSpec& spec);
// Draws the single path y_hat from the clean model and applies the above.
// A positive options.input_jitter targets the smoothed forecaster.
Tensor draw_adversarial_target(const ForecasterParams& params, const Tensor& x,
                               std::size_t horizon, const AttackSpec& spec, std::uint64_t seed,
                               models::SampleOptions options = {});

struct LossValue {
  double value = 0.0;
  Tensor grad;  // d loss / d delta, dim x T; empty when not requested
};

// Monte-Carlo estimate with spec.n_grad paths of
//   sum_j E[(chi_j(y) - t_j)^2],  y ~ p(. | x(1 + delta)).
// With options.input_jitter > 0 every path also sees its own smoothing noise,
// so the gradient is taken through the smoothed forecaster.
// Throws NonFiniteError on a non-finite loss.
LossValue attack_loss(const ForecasterParams& params, const Tensor& x, const Tensor& delta,
                      const Tensor& target, const AttackSpec& spec, std::size_t horizon,
                      std::uint64_t seed, bool with_grad = true,
                      models::SampleOptions options = {});

// Graph form used by the attacks and the minimax defense: `steps` as returned
// by models::rollout for one history, target 1 x m.
diffkit::Var statistic_loss(std::span<const diffkit::Var> steps, const Tensor& target,
                            const AttackSpec& spec);

Tensor clip(const Tensor& delta, double eta);
Tensor pgd_step(const Tensor& delta, const Tensor& grad, double step_size, double eta);
// Keeps the k highest-ranked rows outside I and zeroes the rest; ties go to
// the lower index. Throws std::invalid_argument when k > dim - |I|.
Perturbation sparsify_topk(const Tensor& delta, std::size_t k,
                           std::span<const std::size_t> targets,
                           RowRanking ranking = RowRanking::kSquaredL2);

Perturbation deterministic_attack(const ForecasterParams& params, const Window& window,
                                  const AttackSpec& spec, std::uint64_t seed,
                                  models::SampleOptions options = {});

// ---------------------------------------------------------------------------
// Probabilistic sparse layer.
//
// Row i of delta is mask_i * delta'_i with delta'_i ~ N(mu_i, diag(sigma_i^2))
// and mask_i = 1{u_i <= probit(r_i)}, u_i ~ N(0, 1). With x~ the row-wise
// mean-normalized history (dim x T):
//   mu    = x~ w_mu + b_mu
//   sigma = softplus(x~ w_sd + b_sd)
struct SparseLayerParams {
  Tensor w_mu;   // T x T
  Tensor b_mu;   // dim x T
  Tensor w_sd;   // T x T
  Tensor b_sd;   // dim x T
  Tensor gamma;  // dim, strictly positive

  std::size_t dim() const { return gamma.size(); }
  std::size_t context() const { return w_mu.rows(); }
  void validate() const;
};

SparseLayerParams init_sparse_layer(std::size_t dim, std::size_t context, double eta);

// r_i = k sqrt(gamma_i) / (sqrt(d) sqrt(sum_j gamma_j)), clamped to [0, 1].
std::vector<double> keep_probabilities(const Tensor& gamma, std::size_t k);
// sum_i min(1, r_i); never exceeds k.
double expected_sparsity(const Tensor& gamma, std::size_t k, std::size_t dim);

struct LayerSample {
  Tensor delta;  // dim x T, not clipped
  std::vector<bool> mask;
};

// Hard sample. Rows listed in `zero_rows` are set to zero after masking.
LayerSample sparse_layer_sample(const SparseLayerParams& layer, const Tensor& x, std::size_t k,
                                std::uint64_t seed, std::span<const std::size_t> zero_rows = {});

// Unconstrained training state of a layer: gamma is held as log(gamma).
struct LayerState {
  Tensor w_mu, b_mu, w_sd, b_sd;
  Tensor log_gamma;  // dim x 1

  static LayerState from(const SparseLayerParams& layer);
  SparseLayerParams params() const;
  std::vector<Tensor*> tensors();
};

struct LayerVars {
  diffkit::Var w_mu, b_mu, w_sd, b_sd, log_gamma;
  std::vector<diffkit::Var> list() const { return {w_mu, b_mu, w_sd, b_sd, log_gamma}; }
};

LayerVars bind_layer(diffkit::Graph& g, const LayerState& state);

// Graph form of one draw with the relaxed gate
// sigmoid((probit(r) - u) / temperature), used for training. Returns delta
// time-major (T x dim), clipped to [-eta, eta], with `zero_rows` zeroed.
diffkit::Var relaxed_layer_delta(const LayerVars& vars, const Tensor& x, std::size_t k,
                                 double eta, double temperature, Rng& rng,
                                 std::span<const std::size_t> zero_rows);

struct ProbTrainConfig {
  std::size_t steps = 150;
  double learning_rate = 0.05;
  // Perturbation draws per step (outer expectation).
  std::size_t n_delta = 4;
  double temperature = 0.1;
};

// Minimizes E_delta || E_y[chi(y)] - t ||^2 over the layer parameters.
// Throws DivergenceError on a non-finite objective.
SparseLayerParams probabilistic_attack_train(const ForecasterParams& params, const Window& window,
                                             const AttackSpec& spec, const ProbTrainConfig& cfg,
                                             std::uint64_t seed);

// Monte-Carlo value of the trained objective with hard masks and clipped
// draws: mean over n_delta draws of || mean_{n_grad paths} chi(y) - t ||^2.
double probabilistic_objective(const ForecasterParams& params, const SparseLayerParams& layer,
                               const Tensor& x, const Tensor& target, const AttackSpec& spec,
                               std::size_t horizon, std::size_t n_delta, std::uint64_t seed);

// One evaluation-time draw from a trained layer, clipped to eta, I rows zero.
Perturbation sample_perturbation(const SparseLayerParams& layer, const Window& window,
                                 const AttackSpec& spec, std::uint64_t seed);

// Trains a layer on the window and returns one evaluation draw.
Perturbation probabilistic_attack(const ForecasterParams& params, const Window& window,
                                  const AttackSpec& spec, const ProbTrainConfig& cfg,
                                  std::uint64_t seed);

std::string ranking_name(RowRanking r);
RowRanking parse_ranking(const std::string& s);
std::string statistic_name(Statistic s);
Statistic parse_statistic(const std::string& s);

nlohmann::json to_json(const AttackSpec& spec);
AttackSpec attack_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Perturbation& p);
Perturbation perturbation_from_json(const nlohmann::json& doc);

}  // namespace tsadv::attacks
