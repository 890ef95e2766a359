#include "adaptui/preference.hpp"

#include <array>
#include <cctype>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {
constexpr std::array<std::string_view, 4> kLabelNames{"Left", "Right", "Equal", "Skip"};
}

std::string_view to_string(PreferenceLabel v) noexcept {
  return kLabelNames[static_cast<std::size_t>(v)];
}

PreferenceLabel parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    const auto& name = kLabelNames[i];
    if (name.size() != s.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < s.size() && same; ++k) {
      same = std::tolower(static_cast<unsigned char>(s[k])) ==
             std::tolower(static_cast<unsigned char>(name[k]));
    }
    if (same) return static_cast<PreferenceLabel>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown label '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, PreferenceLabel v) { j = std::string(to_string(v)); }
void from_json(const nlohmann::json& j, PreferenceLabel& v) { v = parse_label(j.get<std::string>()); }

PreferencePair make_pair(std::string left, std::string right, PreferenceLabel label) {
  PreferencePair p{std::move(left), std::move(right), 0.5, 0.5};
  switch (label) {
    case PreferenceLabel::Left: p.mu_first = 1.0; p.mu_second = 0.0; break;
    case PreferenceLabel::Right: p.mu_first = 0.0; p.mu_second = 1.0; break;
    case PreferenceLabel::Equal: break;
    case PreferenceLabel::Skip:
      throw Error(ErrorCode::kInvalidArgument, "skipped comparisons carry no preference");
  }
  return p;
}

void to_json(nlohmann::json& j, const PreferencePair& v) {
  j = nlohmann::json{{"first", v.first}, {"second", v.second}, {"mu", {v.mu_first, v.mu_second}}};
}

void from_json(const nlohmann::json& j, PreferencePair& v) {
  v.first = j.at("first").get<std::string>();
  v.second = j.at("second").get<std::string>();
  const auto& mu = j.at("mu");
  v.mu_first = mu.at(0).get<double>();
  v.mu_second = mu.at(1).get<double>();
}

}  // namespace adaptui
