#include "adaptui/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

const ClipSegment& lookup(const ClipStore& store, const std::string& id) {
  const auto it = store.find(id);
  if (it == store.end()) throw Error(ErrorCode::kInvalidArgument, "unknown clip id " + id);
  return it->second;
}

double l2_term(const Mlp& m, double l2) {
  if (l2 == 0.0) return 0.0;
  double sq = 0.0;
  for (double p : m.params()) sq += p * p;
  return l2 * sq;
}

// Per-pair cross-entropy in terms of the return difference d = Ra - Rb.
double pair_loss(double d, double mu_first, double mu_second) noexcept {
  return mu_first * softplus(-d) + mu_second * softplus(d);
}

// Forward passes over every step of a clip; returns the summed output.
double clip_forward(const Mlp& m, const ClipSegment& clip, std::vector<Mlp::Tape>& tapes) {
  tapes.resize(clip.steps.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < clip.steps.size(); ++t) {
    const auto x = encode_state(clip.steps[t].state, clip.domain);
    sum += m.forward(x, tapes[t])[0];
  }
  return sum;
}

}  // namespace

Mlp make_reward_model(std::uint64_t seed, Activation activation, Init init) {
  Mlp m({static_cast<int>(kFeatureDim), kRewardHidden, kRewardHidden, 1}, activation, seed, init);
  // A full-scale output layer makes untrained clip returns differ by several
  // units, i.e. near-certain preferences before any data has been seen.
  const std::size_t last = m.num_layers() - 1;
  auto p = m.params();
  for (std::size_t i = m.weight_offset(last); i < m.bias_offset(last); ++i) p[i] *= kRewardOutputScale;
  return m;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  if (cfg.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(cfg.l2 >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "l2 must be >= 0");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "val_fraction must be in [0,1)");
  }
}

double predict_step_reward(const Mlp& m, std::span<const double> x) {
  if (m.output_dim() != 1) throw Error(ErrorCode::kInvalidArgument, "reward model must be scalar");
  return m.forward(x)[0];
}

double clip_return(const Mlp& m, const ClipSegment& clip) {
  double sum = 0.0;
  for (const auto& step : clip.steps) {
    sum += predict_step_reward(m, encode_state(step.state, clip.domain));
  }
  return sum;
}

double bradley_terry(double return_a, double return_b) noexcept {
  const double hi = std::max(return_a, return_b);
  const double ea = std::exp(return_a - hi);
  const double eb = std::exp(return_b - hi);
  return ea / (ea + eb);
}

double pref_probability(const Mlp& m, const ClipSegment& a, const ClipSegment& b) {
  return bradley_terry(clip_return(m, a), clip_return(m, b));
}

double preference_loss(const Mlp& m, std::span<const PreferencePair> pairs, const ClipStore& store,
                       double l2) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no preference pairs");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double d = clip_return(m, lookup(store, p.first)) - clip_return(m, lookup(store, p.second));
    total += pair_loss(d, p.mu_first, p.mu_second);
  }
  return total / static_cast<double>(pairs.size()) + l2_term(m, l2);
}

double preference_loss_grad(const Mlp& m, std::span<const PreferencePair> pairs,
                            const ClipStore& store, double l2, std::span<double> grad) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no preference pairs");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double n = static_cast<double>(pairs.size());
  std::vector<Mlp::Tape> tapes_a;
  std::vector<Mlp::Tape> tapes_b;
  double total = 0.0;
  for (const auto& p : pairs) {
    const double ra = clip_forward(m, lookup(store, p.first), tapes_a);
    const double rb = clip_forward(m, lookup(store, p.second), tapes_b);
    const double d = ra - rb;
    total += pair_loss(d, p.mu_first, p.mu_second);
    // dL/dd = sigmoid(d) * (mu1 + mu2) - mu1
    const double s = bradley_terry(ra, rb);
    const double dd = (s * (p.mu_first + p.mu_second) - p.mu_first) / n;
    const double up[1] = {dd};
    const double down[1] = {-dd};
    for (const auto& tape : tapes_a) m.backward(tape, up, grad);
    for (const auto& tape : tapes_b) m.backward(tape, down, grad);
  }
  if (l2 != 0.0) {
    const auto theta = m.params();
    for (std::size_t i = 0; i < theta.size(); ++i) grad[i] += 2.0 * l2 * theta[i];
  }
  return total / n + l2_term(m, l2);
}

TrainResult train(Mlp m, std::span<const PreferencePair> pairs, const ClipStore& store,
                  const TrainConfig& cfg, const ProgressFn& progress) {
  validate(cfg);
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no preference pairs");
  for (const auto& p : pairs) {
    lookup(store, p.first);
    lookup(store, p.second);
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(pairs.size())));
  n_val = std::min(n_val, pairs.size() - 1);

  TrainResult result;
  result.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(result.val_indices.begin(), result.val_indices.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<PreferencePair> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(pairs[i]);
    return out;
  };
  std::vector<PreferencePair> train_set = gather(result.train_indices);
  const std::vector<PreferencePair> val_set = gather(result.val_indices);

  std::vector<double> grad(m.params().size());
  std::vector<PreferencePair> batch;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), rng);
    for (std::size_t start = 0; start < train_set.size(); start += bs) {
      const std::size_t end = std::min(start + bs, train_set.size());
      batch.assign(train_set.begin() + static_cast<std::ptrdiff_t>(start),
                   train_set.begin() + static_cast<std::ptrdiff_t>(end));
      preference_loss_grad(m, batch, store, cfg.l2, grad);
      auto theta = m.params();
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.learning_rate * grad[i];
    }
    LossPoint point;
    point.epoch = epoch;
    point.train_loss = preference_loss(m, train_set, store, cfg.l2);
    if (!val_set.empty()) point.val_loss = preference_loss(m, val_set, store, cfg.l2);
    result.curve.push_back(point);
    if (progress) progress(static_cast<double>(epoch) / cfg.epochs);
  }
  if (!m.all_finite()) throw Error(ErrorCode::kInternal, "training diverged");
  result.model = std::move(m);
  return result;
}

GradCheckReport grad_check(const Mlp& m, std::span<const PreferencePair> pairs,
                           const ClipStore& store, double l2, std::size_t coordinates,
                           std::uint64_t seed, double h) {
  std::vector<double> grad(m.params().size());
  preference_loss_grad(m, pairs, store, l2, grad);

  GradCheckReport report;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(grad.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(coordinates, idx.size()));
  std::sort(idx.begin(), idx.end());

  Mlp probe = m;
  for (std::size_t i : idx) {
    const double orig = probe.params()[i];
    probe.params()[i] = orig + h;
    const double up = preference_loss(probe, pairs, store, l2);
    probe.params()[i] = orig - h;
    const double down = preference_loss(probe, pairs, store, l2);
    probe.params()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    // With h = 1e-5 the difference quotient carries roundoff near 1e-11, so
    // gradients that are exactly zero are measured against a 1e-6 floor.
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), kGradCheckFloor});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(grad[i] - numeric) / denom);
    report.checked.push_back(i);
    report.analytic.push_back(grad[i]);
  }
  report.coordinates = idx.size();
  return report;
}

void RunningStat::push(double x) noexcept {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

double RunningStat::variance() const noexcept {
  return count < 2 ? 0.0 : m2 / static_cast<double>(count - 1);
}

double RunningStat::standardize(double x) const noexcept {
  if (count < 2) return x;
  const double sd = std::sqrt(variance());
  return sd > 1e-12 ? (x - mean) / sd : x - mean;
}

void validate(const DualRewardConfig& cfg) {
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must be in [0,1]");
  if (cfg.hci.m2 < 0.0 || cfg.hf.m2 < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "negative variance accumulator");
  }
}

double combined_reward(double hci, double hf, DualRewardConfig& cfg, bool update_stats) {
  if (update_stats) {
    cfg.hci.push(hci);
    cfg.hf.push(hf);
  }
  return (1.0 - cfg.beta) * cfg.hci.standardize(hci) + cfg.beta * cfg.hf.standardize(hf);
}

RewardProvider model_reward(Mlp m, Domain domain) {
  if (m.input_dim() != kFeatureDim || m.output_dim() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "reward model must map 16 features to a scalar");
  }
  return [m = std::move(m), domain](const UiConfig& state, const AdaptationAction& action,
                                    const ContextModel&) {
    return predict_step_reward(m, encode_state(apply_action(state, action), domain));
  };
}

RewardProvider calibrated_dual_reward(const RewardProvider& hci, const RewardProvider& hf,
                                      double beta, const ContextModel& ctx,
                                      DualRewardConfig* calibrated) {
  DualRewardConfig cfg;
  cfg.beta = beta;
  validate(cfg);
  for (const auto& state : enumerate_configs()) {
    for (int a = 0; a < kNumActions; ++a) {
      const auto action = AdaptationAction::from_index(a);
      combined_reward(hci(state, action, ctx), hf(state, action, ctx), cfg, true);
    }
  }
  if (calibrated) *calibrated = cfg;
  return [cfg, hci, hf](const UiConfig& state, const AdaptationAction& action,
                        const ContextModel& c) {
    DualRewardConfig frozen = cfg;
    return combined_reward(hci(state, action, c), hf(state, action, c), frozen, false);
  };
}

void write_loss_csv(std::ostream& out, const std::vector<LossPoint>& curve) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& p : curve) {
    out << p.epoch << ',' << p.train_loss << ',';
    if (!std::isnan(p.val_loss)) out << p.val_loss;
    out << '\n';
  }
}

}  // namespace adaptui
