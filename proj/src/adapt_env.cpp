#include "adaptui/adapt_env.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

UiConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, kNumConfigs - 1);
  return config_from_index(pick(rng));
}

std::mt19937_64 domain_rng(std::uint64_t seed, Domain domain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(domain) + 1u};
  return std::mt19937_64(seq);
}

std::string clip_id(Domain domain, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%03d", domain == Domain::Courses ? "courses" : "trips", index);
  return buf;
}

}  // namespace

void validate(const EpisodeConfig& cfg) {
  if (cfg.horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  validate(cfg.context);
}

RewardProvider zero_reward() {
  return [](const UiConfig&, const AdaptationAction&, const ContextModel&) { return 0.0; };
}

RewardProvider constant_reward(double value) {
  return [value](const UiConfig&, const AdaptationAction&, const ContextModel&) { return value; };
}

UiConfig reset(const EpisodeConfig& cfg) {
  Environment env(cfg);
  return env.reset();
}

Environment::Environment(EpisodeConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  validate(cfg_);
  state_ = kDefaultConfig;
}

UiConfig Environment::reset() {
  state_ = cfg_.start == StartMode::FixedDefault ? kDefaultConfig : random_config(rng_);
  steps_ = 0;
  return state_;
}

StepOutcome Environment::step(const AdaptationAction& action, const RewardProvider& reward) {
  if (done()) throw Error(ErrorCode::kFailedPrecondition, "episode exhausted");
  StepOutcome out;
  out.reward = reward(state_, action, cfg_.context);
  out.next_state = apply_action(state_, action);
  state_ = out.next_state;
  ++steps_;
  out.done = done();
  return out;
}

void validate(const ClipSegment& clip) {
  if (clip.steps.size() != static_cast<std::size_t>(kClipLength)) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip " + clip.id + " must have " + std::to_string(kClipLength) + " steps");
  }
  if (clip.render_hint_ms_per_step <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "clip " + clip.id + " has non-positive render hint");
  }
  for (std::size_t i = 1; i < clip.steps.size(); ++i) {
    if (apply_action(clip.steps[i - 1].state, clip.steps[i - 1].action) != clip.steps[i].state) {
      throw Error(ErrorCode::kInvalidArgument,
                  "clip " + clip.id + " is inconsistent at step " + std::to_string(i));
    }
  }
}

std::vector<ClipSegment> generate_clips(int n_per_domain, ClipPolicy policy, std::uint64_t seed) {
  if (n_per_domain < 1) throw Error(ErrorCode::kInvalidArgument, "n_per_domain must be >= 1");
  std::vector<ClipSegment> clips;
  clips.reserve(static_cast<std::size_t>(n_per_domain) * kAllDomains.size());
  for (Domain domain : kAllDomains) {
    auto rng = domain_rng(seed, domain);
    std::vector<int> sweep(kNumAssignActions);
    std::iota(sweep.begin(), sweep.end(), 0);
    std::shuffle(sweep.begin(), sweep.end(), rng);
    std::uniform_int_distribution<int> any_action(0, kNumActions - 1);

    for (int c = 0; c < n_per_domain; ++c) {
      ClipSegment clip;
      clip.id = clip_id(domain, c);
      clip.domain = domain;
      UiConfig state = random_config(rng);
      for (int t = 0; t < kClipLength; ++t) {
        const int a = policy == ClipPolicy::ScriptedSweep
                          ? sweep[static_cast<std::size_t>((c * kClipLength + t) % kNumAssignActions)]
                          : any_action(rng);
        const auto action = AdaptationAction::from_index(a);
        clip.steps.push_back({state, action});
        state = apply_action(state, action);
      }
      clips.push_back(std::move(clip));
    }
  }
  return clips;
}

ClipStore make_store(const std::vector<ClipSegment>& clips) {
  ClipStore store;
  for (const auto& c : clips) {
    if (!store.emplace(c.id, c).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate clip id " + c.id);
    }
  }
  return store;
}

void to_json(nlohmann::json& j, const ClipSegment& v) {
  auto steps = nlohmann::json::array();
  for (const auto& s : v.steps) steps.push_back({{"state", s.state}, {"action", s.action}});
  j = nlohmann::json{{"id", v.id},
                     {"domain", v.domain},
                     {"steps", std::move(steps)},
                     {"render_hint_ms_per_step", v.render_hint_ms_per_step}};
}

void from_json(const nlohmann::json& j, ClipSegment& v) {
  ClipSegment c;
  c.id = j.at("id").get<std::string>();
  c.domain = j.at("domain").get<Domain>();
  for (const auto& s : j.at("steps")) {
    c.steps.push_back({s.at("state").get<UiConfig>(), s.at("action").get<AdaptationAction>()});
  }
  c.render_hint_ms_per_step = j.value("render_hint_ms_per_step", kDefaultMsPerStep);
  v = std::move(c);
}

void write_corpus(std::ostream& out, const std::vector<ClipSegment>& clips) {
  for (const auto& c : clips) out << nlohmann::json(c).dump() << '\n';
}

std::vector<ClipSegment> read_corpus(std::istream& in) {
  std::vector<ClipSegment> clips;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto clip = nlohmann::json::parse(line).get<ClipSegment>();
      validate(clip);
      clips.push_back(std::move(clip));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return clips;
}

ClipPolicy parse_clip_policy(std::string_view s) {
  if (s == "random" || s == "UniformRandomAction") return ClipPolicy::UniformRandomAction;
  if (s == "sweep" || s == "ScriptedSweep") return ClipPolicy::ScriptedSweep;
  throw Error(ErrorCode::kInvalidArgument, "unknown clip policy '" + std::string(s) + "'");
}

}  // namespace adaptui
