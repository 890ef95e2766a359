#include "adaptui/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

constexpr std::size_t kNetOutputs = kNumActions + 1;
constexpr double kPolicyHeadScale = 0.01;

void softmax(const std::array<double, kNumActions>& logits, std::array<double, kNumActions>& probs) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    probs[i] = std::exp(logits[i] - hi);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

ACModel::Output split(const std::vector<double>& out) {
  ACModel::Output o;
  std::copy_n(out.begin(), kNumActions, o.logits.begin());
  o.value = out[kNumActions];
  softmax(o.logits, o.probs);
  return o;
}

int greedy(const std::array<double, kNumActions>& logits) {
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::uint64_t worker_seed(std::uint64_t seed, int worker) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(worker + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Worker {
  Environment env;
  std::mt19937_64 rng;
  bool fresh = true;
  std::vector<ACSample> batch;
  std::vector<double> grad;
};

struct Transition {
  FeatureVector x{};
  int action = 0;
  double reward = 0.0;
  bool episode_end = false;
  FeatureVector next_x{};
};

void collect(Worker& w, const ACModel& model, const RewardProvider& reward, const ACConfig& cfg,
             std::int64_t steps) {
  const Domain domain = w.env.config().domain;
  std::vector<Transition> traj;
  traj.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t t = 0; t < steps; ++t) {
    if (w.fresh || w.env.done()) {
      w.env.reset();
      w.fresh = false;
    }
    Transition tr;
    tr.x = encode_state(w.env.state(), domain);
    tr.action = ac_act(model, tr.x, ActMode::Sample, w.rng).index();
    const StepOutcome out = w.env.step(AdaptationAction::from_index(tr.action), reward);
    tr.reward = out.reward;
    tr.episode_end = out.done;
    tr.next_x = encode_state(out.next_state, domain);
    traj.push_back(tr);
  }

  w.batch.resize(traj.size());
  double ret = 0.0;
  for (std::size_t i = traj.size(); i-- > 0;) {
    const auto& tr = traj[i];
    if (i + 1 == traj.size() || tr.episode_end) {
      ret = tr.reward + cfg.gamma * model.evaluate(tr.next_x).value;
    } else {
      ret = tr.reward + cfg.gamma * ret;
    }
    auto& s = w.batch[i];
    s.x = tr.x;
    s.action = tr.action;
    s.value_target = ret;
    s.advantage = ret - model.evaluate(tr.x).value;
  }
  std::fill(w.grad.begin(), w.grad.end(), 0.0);
  if (!w.batch.empty()) ac_loss_grad(model, w.batch, cfg, w.grad);
}

}  // namespace

ACModel::ACModel(std::uint64_t seed)
    : net_({static_cast<int>(kFeatureDim), 64, 64, static_cast<int>(kNetOutputs)},
           Activation::LeakyRectifier, seed) {
  // Near-uniform initial policy.
  auto p = net_.params();
  const std::size_t last = net_.num_layers() - 1;
  const std::size_t in = static_cast<std::size_t>(net_.layer_sizes()[last]);
  for (std::size_t i = 0; i < kNumActions * in; ++i) p[net_.weight_offset(last) + i] *= kPolicyHeadScale;
}

ACModel::ACModel(Mlp net) : net_(std::move(net)) {
  if (net_.input_dim() != kFeatureDim || net_.output_dim() != kNetOutputs) {
    throw Error(ErrorCode::kInvalidArgument, "actor-critic network must map 16 -> 16");
  }
}

ACModel::Output ACModel::evaluate(std::span<const double> x) const { return split(net_.forward(x)); }

void validate(const ACConfig& cfg) {
  if (cfg.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  if (cfg.n_step < 1) throw Error(ErrorCode::kInvalidArgument, "n_step must be >= 1");
  if (!(cfg.entropy_coef >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "entropy_coef must be >= 0");
  if (!(cfg.value_coef >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "value_coef must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be in [0,1)");
  if (cfg.total_steps < 0) throw Error(ErrorCode::kInvalidArgument, "negative total_steps");
}

double ac_loss(const ACModel& m, std::span<const ACSample> batch, const ACConfig& cfg) {
  double total = 0.0;
  for (const auto& s : batch) {
    const auto o = m.evaluate(s.x);
    double entropy = 0.0;
    for (double p : o.probs) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    const double td = s.value_target - o.value;
    total += -std::log(o.probs[static_cast<std::size_t>(s.action)]) * s.advantage +
             cfg.value_coef * td * td - cfg.entropy_coef * entropy;
  }
  return batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
}

double ac_loss_grad(const ACModel& m, std::span<const ACSample> batch, const ACConfig& cfg,
                    std::span<double> grad) {
  if (batch.empty()) return 0.0;
  const double n = static_cast<double>(batch.size());
  Mlp::Tape tape;
  std::array<double, kNetOutputs> g{};
  double total = 0.0;
  for (const auto& s : batch) {
    const auto o = split(m.net().forward(s.x, tape));
    double entropy = 0.0;
    std::array<double, kNumActions> logp{};
    for (std::size_t j = 0; j < kNumActions; ++j) {
      logp[j] = std::log(std::max(o.probs[j], 1e-300));
      entropy -= o.probs[j] * logp[j];
    }
    const auto a = static_cast<std::size_t>(s.action);
    const double td = s.value_target - o.value;
    total += -logp[a] * s.advantage + cfg.value_coef * td * td - cfg.entropy_coef * entropy;

    for (std::size_t j = 0; j < kNumActions; ++j) {
      const double policy = (o.probs[j] - (j == a ? 1.0 : 0.0)) * s.advantage;
      // d(-H)/dlogit_j = p_j (log p_j + H)
      const double ent = cfg.entropy_coef * o.probs[j] * (logp[j] + entropy);
      g[j] = (policy + ent) / n;
    }
    g[kNumActions] = -2.0 * cfg.value_coef * td / n;
    m.net().backward(tape, g, grad);
  }
  return total / n;
}

ACModel ac_train(const EpisodeConfig& env, const RewardProvider& reward, const ACConfig& cfg) {
  return ac_train(env, reward, cfg, ACModel(cfg.seed));
}

ACModel ac_train(const EpisodeConfig& env, const RewardProvider& reward, const ACConfig& cfg,
                 ACModel model, const ProgressFn& progress) {
  validate(cfg);
  const std::size_t n_params = model.net().params().size();
  std::vector<Worker> workers;
  workers.reserve(static_cast<std::size_t>(cfg.workers));
  for (int w = 0; w < cfg.workers; ++w) {
    EpisodeConfig ec = env;
    ec.seed = env.seed + static_cast<std::uint64_t>(w);
    workers.push_back(Worker{Environment(ec), std::mt19937_64(worker_seed(cfg.seed, w)), true, {},
                             std::vector<double>(n_params, 0.0)});
  }

  Adam adam;
  adam.learning_rate = cfg.learning_rate;
  std::vector<double> grad(n_params, 0.0);
  std::int64_t done_steps = 0;
  const auto n_workers = static_cast<std::int64_t>(cfg.workers);
  while (done_steps < cfg.total_steps) {
    const std::int64_t remaining = cfg.total_steps - done_steps;
    const std::int64_t round = std::min<std::int64_t>(remaining, n_workers * cfg.n_step);
    std::vector<std::int64_t> quota(workers.size(), round / n_workers);
    for (std::int64_t w = 0; w < round % n_workers; ++w) ++quota[static_cast<std::size_t>(w)];

    // Workers read `model` concurrently; it is only written after they join.
    if (workers.size() == 1) {
      collect(workers[0], model, reward, cfg, quota[0]);
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> failures(workers.size());
      threads.reserve(workers.size());
      for (std::size_t w = 0; w < workers.size(); ++w) {
        threads.emplace_back([&, w] {
          try {
            collect(workers[w], model, reward, cfg, quota[w]);
          } catch (...) {
            failures[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t w = 0; w < workers.size(); ++w) {
      const double weight = static_cast<double>(quota[w]) / static_cast<double>(round);
      for (std::size_t i = 0; i < n_params; ++i) grad[i] += weight * workers[w].grad[i];
    }
    adam.step(model.net().params(), grad);
    done_steps += round;
    if (progress) progress(static_cast<double>(done_steps) / static_cast<double>(cfg.total_steps));
  }
  if (!model.net().all_finite()) throw Error(ErrorCode::kInternal, "actor-critic training diverged");
  return model;
}

AdaptationAction ac_act(const ACModel& m, std::span<const double> x, ActMode mode,
                        std::mt19937_64& rng) {
  const auto o = m.evaluate(x);
  if (mode == ActMode::Greedy) return AdaptationAction::from_index(greedy(o.logits));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  for (int a = 0; a < kNumActions; ++a) {
    u -= o.probs[static_cast<std::size_t>(a)];
    if (u < 0.0) return AdaptationAction::from_index(a);
  }
  return AdaptationAction::from_index(kNumActions - 1);
}

AdaptationAction ac_act(const ACModel& m, std::span<const double> x, ActMode mode,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ac_act(m, x, mode, rng);
}

}  // namespace adaptui
