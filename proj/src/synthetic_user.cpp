#include "adaptui/synthetic_user.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

UiConfig make_config(Layout l, FontSize f, Density d, Theme t, Widget w) {
  return UiConfig{l, f, d, t, w};
}

std::vector<Persona> presets() {
  std::vector<Persona> out(3);

  out[0].id = "readability-focused";
  out[0].preferred = {
      make_config(Layout::List, FontSize::Large, Density::Detailed, Theme::Light, Widget::ListMenu),
      make_config(Layout::Grid2, FontSize::Large, Density::Detailed, Theme::Light, Widget::ListMenu)};
  out[0].weights = {0.25, 0.45, 0.15, 0.10, 0.05};

  out[1].id = "aesthetics-focused";
  out[1].preferred = {
      make_config(Layout::Grid3, FontSize::Medium, Density::Condensed, Theme::Dark, Widget::Dropdown),
      make_config(Layout::Grid4, FontSize::Small, Density::Condensed, Theme::Dark, Widget::Dropdown)};
  out[1].weights = {0.35, 0.05, 0.10, 0.40, 0.10};

  out[2].id = "density-averse";
  out[2].preferred = {
      make_config(Layout::Grid2, FontSize::Medium, Density::Condensed, Theme::Light, Widget::Dropdown),
      make_config(Layout::Grid3, FontSize::Small, Density::Condensed, Theme::Light, Widget::Dropdown)};
  out[2].weights = {0.20, 0.10, 0.50, 0.10, 0.10};
  out[2].dark_when_dim = true;

  return out;
}

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<double, kNumAttributes> Persona::normalized_weights() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  auto out = weights;
  for (double& w : out) w /= sum;
  return out;
}

void validate(const Persona& p) {
  double sum = 0.0;
  for (double w : p.weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "persona " + p.id + ": weight outside [0,1]");
    }
    sum += w;
  }
  if (sum <= 0.0) throw Error(ErrorCode::kInvalidArgument, "persona " + p.id + ": all weights zero");
  if (!(p.noise_sd >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "persona " + p.id + ": negative noise_sd");
  }
}

UiConfig effective_preference(const Persona& p, Domain domain, const ContextModel& ctx) {
  UiConfig pref = p.preferred_for(domain);
  if (p.dark_when_dim && ctx.environment.ambient_light < kDimLightThreshold) pref.theme = Theme::Dark;
  return pref;
}

double noiseless_engagement(const Persona& p, const UiConfig& s, Domain domain,
                            const ContextModel& ctx) {
  const UiConfig pref = effective_preference(p, domain, ctx);
  const auto w = p.normalized_weights();
  double mismatch = 0.0;
  for (std::size_t k = 0; k < kNumAttributes; ++k) {
    if (s.get(kAllAttributes[k]) != pref.get(kAllAttributes[k])) mismatch += w[k];
  }
  return std::clamp(1.0 - mismatch, 0.0, 1.0);
}

double engagement(const Persona& p, const UiConfig& s, Domain domain, const ContextModel& ctx,
                  std::uint64_t seed) {
  const double base = noiseless_engagement(p, s, domain, ctx);
  if (p.noise_sd <= 0.0) return base;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, p.noise_sd);
  return std::clamp(base + noise(rng), 0.0, 1.0);
}

std::pair<UiConfig, double> oracle_best(const Persona& p, Domain domain, const ContextModel& ctx) {
  const auto& all = enumerate_configs();
  UiConfig best = all.front();
  double best_value = noiseless_engagement(p, best, domain, ctx);
  for (const auto& c : all) {
    const double v = noiseless_engagement(p, c, domain, ctx);
    if (v > best_value) {
      best = c;
      best_value = v;
    }
  }
  return {best, best_value};
}

std::vector<Persona> make_personas(int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "persona count must be >= 1");
  std::vector<Persona> out = presets();
  out.resize(std::min<std::size_t>(out.size(), static_cast<std::size_t>(n)));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_config(0, kNumConfigs - 1);
  std::uniform_real_distribution<double> pick_weight(0.05, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int i = static_cast<int>(out.size()); i < n; ++i) {
    Persona p;
    char id[32];
    std::snprintf(id, sizeof id, "persona-%03d", i + 1);
    p.id = id;
    for (auto& pref : p.preferred) pref = config_from_index(pick_config(rng));
    for (auto& w : p.weights) w = pick_weight(rng);
    p.dark_when_dim = coin(rng);
    out.push_back(std::move(p));
  }
  return out;
}

Persona preset_persona(std::string_view name) {
  for (auto& p : presets()) {
    if (p.id == name) return p;
  }
  throw Error(ErrorCode::kNotFound, "unknown persona '" + std::string(name) + "'");
}

RewardProvider persona_reward(Persona p, Domain domain, std::uint64_t seed) {
  validate(p);
  return [p = std::move(p), domain, seed](const UiConfig& state, const AdaptationAction& action,
                                          const ContextModel& ctx) {
    const UiConfig next = apply_action(state, action);
    const auto key = static_cast<std::uint64_t>(config_index(state) * kNumActions + action.index());
    return engagement(p, next, domain, ctx, mix(seed ^ mix(key)));
  };
}

RewardProvider population_reward(std::vector<Persona> population, Domain domain) {
  if (population.empty()) throw Error(ErrorCode::kInvalidArgument, "empty population");
  for (const auto& p : population) validate(p);
  return [pop = std::move(population), domain](const UiConfig& state,
                                               const AdaptationAction& action,
                                               const ContextModel& ctx) {
    const UiConfig next = apply_action(state, action);
    double sum = 0.0;
    for (const auto& p : pop) sum += noiseless_engagement(p, next, domain, ctx);
    return sum / static_cast<double>(pop.size());
  };
}

double clip_utility(const Persona& p, const ClipSegment& clip, const ContextModel& ctx) {
  double sum = 0.0;
  for (const auto& step : clip.steps) sum += noiseless_engagement(p, step.state, clip.domain, ctx);
  return clip.steps.empty() ? 0.0 : sum / static_cast<double>(clip.steps.size());
}

PreferenceLabel simulated_answer(const Persona& p, const ClipSegment& left,
                                 const ClipSegment& right, const ContextModel& ctx) {
  const double diff = clip_utility(p, left, ctx) - clip_utility(p, right, ctx);
  if (std::abs(diff) < kComparatorTieEps) return PreferenceLabel::Equal;
  return diff > 0 ? PreferenceLabel::Left : PreferenceLabel::Right;
}

void to_json(nlohmann::json& j, const Persona& v) {
  j = nlohmann::json{
      {"id", v.id},
      {"preferred", {{"Courses", v.preferred[0]}, {"Trips", v.preferred[1]}}},
      {"weights", v.weights},
      {"noise_sd", v.noise_sd},
      {"dark_when_dim", v.dark_when_dim},
  };
}

void from_json(const nlohmann::json& j, Persona& v) {
  Persona p;
  p.id = j.at("id").get<std::string>();
  const auto& pref = j.at("preferred");
  p.preferred[0] = pref.at("Courses").get<UiConfig>();
  p.preferred[1] = pref.at("Trips").get<UiConfig>();
  p.weights = j.at("weights").get<std::array<double, kNumAttributes>>();
  p.noise_sd = j.value("noise_sd", 0.0);
  p.dark_when_dim = j.value("dark_when_dim", false);
  validate(p);
  v = std::move(p);
}

}  // namespace adaptui
