#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace adaptui {

enum class PreferenceLabel : std::uint8_t { Left, Right, Equal, Skip };

std::string_view to_string(PreferenceLabel v) noexcept;
PreferenceLabel parse_label(std::string_view s);

void to_json(nlohmann::json& j, PreferenceLabel v);
void from_json(const nlohmann::json& j, PreferenceLabel& v);

// Bradley-Terry target for one answered comparison. mu is (1,0) when `first`
// was preferred, (0,1) when `second` was, (0.5,0.5) for a tie.
struct PreferencePair {
  std::string first;
  std::string second;
  double mu_first = 0.5;
  double mu_second = 0.5;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// Maps a non-Skip label on (left, right) to a pair; Skip throws.
PreferencePair make_pair(std::string left, std::string right, PreferenceLabel label);

void to_json(nlohmann::json& j, const PreferencePair& v);
void from_json(const nlohmann::json& j, PreferencePair& v);

}  // namespace adaptui
