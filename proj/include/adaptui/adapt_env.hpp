#pragma once

// Episodic MDP over UI configurations and the offline clip corpus humans rank.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "adaptui/ui_domain.hpp"

namespace adaptui {

inline constexpr int kDefaultHorizon = 8;
inline constexpr int kClipLength = 8;
inline constexpr int kDefaultMsPerStep = 500;

enum class StartMode : std::uint8_t { FixedDefault, UniformRandom };

struct EpisodeConfig {
  Domain domain = Domain::Courses;
  int horizon = kDefaultHorizon;
  StartMode start = StartMode::FixedDefault;
  std::uint64_t seed = 0;
  ContextModel context;
};

void validate(const EpisodeConfig& cfg);

struct StepOutcome {
  UiConfig next_state;
  double reward = 0.0;
  bool done = false;
};

// Reward for taking `action` in `state` under `ctx`. Implementations must be
// pure and safe to call concurrently; domain-specific providers capture their
// domain at construction.
using RewardProvider =
    std::function<double(const UiConfig& state, const AdaptationAction& action, const ContextModel& ctx)>;

// Fraction of a long-running computation completed so far, in [0, 1].
using ProgressFn = std::function<void(double)>;

RewardProvider zero_reward();
RewardProvider constant_reward(double value);

// First start state of an episode drawn for `cfg` (seed-deterministic).
UiConfig reset(const EpisodeConfig& cfg);

class Environment {
 public:
  explicit Environment(EpisodeConfig cfg);

  // Starts a new episode. UniformRandom starts advance an internal generator
  // seeded from cfg.seed, so successive resets differ but replay identically.
  UiConfig reset();

  // Throws Error(kFailedPrecondition, "episode exhausted") once done.
  StepOutcome step(const AdaptationAction& action, const RewardProvider& reward);

  const UiConfig& state() const noexcept { return state_; }
  int steps_taken() const noexcept { return steps_; }
  bool done() const noexcept { return steps_ >= cfg_.horizon; }
  const EpisodeConfig& config() const noexcept { return cfg_; }

 private:
  EpisodeConfig cfg_;
  std::mt19937_64 rng_;
  UiConfig state_;
  int steps_ = 0;
};

struct ClipStep {
  UiConfig state;
  AdaptationAction action;

  friend bool operator==(const ClipStep&, const ClipStep&) = default;
};

struct ClipSegment {
  std::string id;
  Domain domain = Domain::Courses;
  std::vector<ClipStep> steps;
  int render_hint_ms_per_step = kDefaultMsPerStep;

  friend bool operator==(const ClipSegment&, const ClipSegment&) = default;
};

// Throws Error(kInvalidArgument) unless the clip has kClipLength steps whose
// states follow from replaying the recorded actions.
void validate(const ClipSegment& clip);

enum class ClipPolicy : std::uint8_t { UniformRandomAction, ScriptedSweep };

// n_per_domain clips for each domain, Courses first. Ids are "<domain>-NNN".
// ScriptedSweep covers every Assign action in each domain whenever
// n_per_domain * kClipLength >= kNumAssignActions.
std::vector<ClipSegment> generate_clips(int n_per_domain, ClipPolicy policy, std::uint64_t seed);

using ClipStore = std::map<std::string, ClipSegment>;
ClipStore make_store(const std::vector<ClipSegment>& clips);

void to_json(nlohmann::json& j, const ClipSegment& v);
void from_json(const nlohmann::json& j, ClipSegment& v);

// One JSON object per line.
void write_corpus(std::ostream& out, const std::vector<ClipSegment>& clips);
std::vector<ClipSegment> read_corpus(std::istream& in);

ClipPolicy parse_clip_policy(std::string_view s);

}  // namespace adaptui
