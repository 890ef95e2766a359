#pragma once

// Parametric personas: weighted-Hamming engagement over UI attributes with a
// single context rule (prefer Dark when the room is dim). Used as the baseline
// engagement source and as the brute-force oracle in tests.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adaptui/adapt_env.hpp"
#include "adaptui/preference.hpp"
#include "adaptui/ui_domain.hpp"

namespace adaptui {

inline constexpr double kDimLightThreshold = 0.3;
inline constexpr double kComparatorTieEps = 1e-9;

struct Persona {
  std::string id;
  std::array<UiConfig, kNumDomains> preferred{};
  std::array<double, kNumAttributes> weights{0.2, 0.2, 0.2, 0.2, 0.2};
  double noise_sd = 0.0;
  bool dark_when_dim = false;

  const UiConfig& preferred_for(Domain d) const {
    return preferred[static_cast<std::size_t>(d)];
  }
  // Weights scaled to sum 1.
  std::array<double, kNumAttributes> normalized_weights() const;
};

void validate(const Persona& p);

// Preferred config after applying the dim-light theme rule.
UiConfig effective_preference(const Persona& p, Domain domain, const ContextModel& ctx);

double noiseless_engagement(const Persona& p, const UiConfig& s, Domain domain,
                            const ContextModel& ctx);

// clamp(noiseless + N(0, noise_sd), 0, 1), with the noise drawn from `seed`.
double engagement(const Persona& p, const UiConfig& s, Domain domain, const ContextModel& ctx,
                  std::uint64_t seed);

// Exhaustive argmax of noiseless engagement; ties go to the earliest config.
std::pair<UiConfig, double> oracle_best(const Persona& p, Domain domain, const ContextModel& ctx);

// The first three are fixed presets: "readability-focused",
// "aesthetics-focused" and "density-averse". The rest are drawn from `seed`.
std::vector<Persona> make_personas(int n, std::uint64_t seed);
Persona preset_persona(std::string_view name);

// Reward for reaching apply_action(state, action). With noise_sd > 0 the
// noise seed mixes `seed` with the (state, action) pair so the provider
// stays a pure function.
RewardProvider persona_reward(Persona p, Domain domain, std::uint64_t seed = 0);

// Mean engagement of a population, a stand-in for a model fitted to many users.
RewardProvider population_reward(std::vector<Persona> population, Domain domain);

// Mean noiseless engagement over the clip's recorded states.
double clip_utility(const Persona& p, const ClipSegment& clip, const ContextModel& ctx);

// Simulated human: prefers the clip with higher utility, Equal within 1e-9.
PreferenceLabel simulated_answer(const Persona& p, const ClipSegment& left,
                                 const ClipSegment& right, const ContextModel& ctx);

void to_json(nlohmann::json& j, const Persona& v);
void from_json(const nlohmann::json& j, Persona& v);

}  // namespace adaptui
