#pragma once

// Per-user preference model and the dual-source reward combiner.
//
// The model maps an encoded state to a latent per-step reward. A clip's
// return is the sum over its steps, and P(a > b) follows Bradley-Terry on
// the two returns. Training minimizes
//   mean_pairs( -mu1 log P(a>b) - mu2 log P(b>a) ) + l2 * |theta|^2
// with seeded mini-batch SGD.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "adaptui/adapt_env.hpp"
#include "adaptui/mlp.hpp"
#include "adaptui/preference.hpp"

namespace adaptui {

inline constexpr int kRewardHidden = 64;
inline constexpr double kRewardOutputScale = 0.1;

// [16, 64, 64, 1]; random init scales the output weights by kRewardOutputScale.
Mlp make_reward_model(std::uint64_t seed, Activation activation = Activation::LeakyRectifier,
                      Init init = Init::Random);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 16;
  double l2 = 1e-4;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct LossPoint {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation split
};

struct TrainResult {
  Mlp model;
  std::vector<LossPoint> curve;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

double predict_step_reward(const Mlp& m, std::span<const double> x);
double clip_return(const Mlp& m, const ClipSegment& clip);

// Stable two-way softmax on returns.
double bradley_terry(double return_a, double return_b) noexcept;
double pref_probability(const Mlp& m, const ClipSegment& a, const ClipSegment& b);

// Objective value over `pairs` (the regularizer is added once, not per pair).
// Throws Error(kInvalidArgument) on an empty set or an unknown clip id.
double preference_loss(const Mlp& m, std::span<const PreferencePair> pairs, const ClipStore& store,
                       double l2);
// Same objective; writes its gradient into `grad` (overwritten).
double preference_loss_grad(const Mlp& m, std::span<const PreferencePair> pairs,
                            const ClipStore& store, double l2, std::span<double> grad);

// Progress is reported after every epoch.
TrainResult train(Mlp m, std::span<const PreferencePair> pairs, const ClipStore& store,
                  const TrainConfig& cfg, const ProgressFn& progress = nullptr);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::vector<std::size_t> checked;   // parameter indices
  std::vector<double> analytic;       // gradient at those indices
};

// Central differences with step h on `coordinates` randomly chosen
// parameters. Relative error is |a - n| / max(|a|, |n|, kGradCheckFloor).
inline constexpr double kGradCheckFloor = 1e-6;
GradCheckReport grad_check(const Mlp& m, std::span<const PreferencePair> pairs,
                           const ClipStore& store, double l2, std::size_t coordinates = 100,
                           std::uint64_t seed = 0, double h = 1e-5);

// Welford accumulator; standardize() is the identity until two samples.
struct RunningStat {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept;
  double variance() const noexcept;  // sample variance
  double standardize(double x) const noexcept;
};

struct DualRewardConfig {
  double beta = 0.5;
  RunningStat hci;
  RunningStat hf;
};

void validate(const DualRewardConfig& cfg);

// (1 - beta) * z_hci(hci) + beta * z_hf(hf). With update_stats the samples
// are pushed into the accumulators before standardizing.
double combined_reward(double hci, double hf, DualRewardConfig& cfg, bool update_stats);

// Reward from the preference model evaluated at the state the action leads to.
RewardProvider model_reward(Mlp m, Domain domain);

// Sweeps every (state, action) pair once to fix the standardization
// statistics, then combines with frozen statistics so the returned provider
// is stationary and read-only.
RewardProvider calibrated_dual_reward(const RewardProvider& hci, const RewardProvider& hf,
                                      double beta, const ContextModel& ctx,
                                      DualRewardConfig* calibrated = nullptr);

void write_loss_csv(std::ostream& out, const std::vector<LossPoint>& curve);

}  // namespace adaptui
