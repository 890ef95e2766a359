#include "adaptui/ui_domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

constexpr std::array<std::string_view, 5> kLayoutNames{"List", "Grid2", "Grid3", "Grid4", "Grid5"};
constexpr std::array<std::string_view, 3> kFontNames{"Small", "Medium", "Large"};
constexpr std::array<std::string_view, 2> kDensityNames{"Detailed", "Condensed"};
constexpr std::array<std::string_view, 2> kThemeNames{"Light", "Dark"};
constexpr std::array<std::string_view, 2> kWidgetNames{"ListMenu", "Dropdown"};
constexpr std::array<std::string_view, 2> kDomainNames{"Courses", "Trips"};
constexpr std::array<std::string_view, 5> kFieldNames{"layout", "font_size", "density", "theme",
                                                      "widget"};
constexpr std::array<std::string_view, 4> kAgeBandNames{"Under25", "From25To44", "From45To64",
                                                        "Over64"};
constexpr std::array<std::string_view, 2> kInputNames{"Mouse", "Touch"};

constexpr std::array<int, kNumAttributes> kOffsets{0, 5, 8, 10, 12};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <std::size_t N>
int find_name(const std::array<std::string_view, N>& names, std::string_view s,
              std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (iequals(names[i], s)) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

int cardinality(Attribute attr) noexcept {
  return kAttributeCardinality[static_cast<std::size_t>(attr)];
}

int attribute_offset(Attribute attr) noexcept { return kOffsets[static_cast<std::size_t>(attr)]; }

int UiConfig::get(Attribute attr) const noexcept {
  switch (attr) {
    case Attribute::Layout: return static_cast<int>(layout);
    case Attribute::FontSize: return static_cast<int>(font_size);
    case Attribute::Density: return static_cast<int>(density);
    case Attribute::Theme: return static_cast<int>(theme);
    case Attribute::Widget: return static_cast<int>(widget);
  }
  return 0;
}

UiConfig UiConfig::with(Attribute attr, int value) const {
  if (value < 0 || value >= cardinality(attr)) {
    throw Error(ErrorCode::kInvalidArgument,
                "value " + std::to_string(value) + " out of range for " +
                    std::string(field_name(attr)));
  }
  UiConfig out = *this;
  switch (attr) {
    case Attribute::Layout: out.layout = static_cast<Layout>(value); break;
    case Attribute::FontSize: out.font_size = static_cast<FontSize>(value); break;
    case Attribute::Density: out.density = static_cast<Density>(value); break;
    case Attribute::Theme: out.theme = static_cast<Theme>(value); break;
    case Attribute::Widget: out.widget = static_cast<Widget>(value); break;
  }
  return out;
}

void validate(const ContextModel& ctx) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (ctx.platform.screen_w_px <= 0 || ctx.platform.screen_h_px <= 0) {
    fail("screen dimensions must be positive");
  }
  const auto& env = ctx.environment;
  if (!(env.ambient_light >= 0.0 && env.ambient_light <= 1.0)) fail("ambient_light outside [0,1]");
  if (!(env.noise_level >= 0.0 && env.noise_level <= 1.0)) fail("noise_level outside [0,1]");
}

AdaptationAction AdaptationAction::assign(Attribute attr, int value) {
  if (value < 0 || value >= cardinality(attr)) {
    throw Error(ErrorCode::kInvalidArgument,
                "value " + std::to_string(value) + " out of range for " +
                    std::string(field_name(attr)));
  }
  return AdaptationAction(attr, value);
}

AdaptationAction AdaptationAction::from_index(int index) {
  if (index < 0 || index >= kNumActions) {
    throw Error(ErrorCode::kInvalidArgument, "action index out of range: " + std::to_string(index));
  }
  if (index == kNoOpIndex) return noop();
  for (Attribute attr : kAllAttributes) {
    const int off = attribute_offset(attr);
    if (index < off + cardinality(attr)) return AdaptationAction(attr, index - off);
  }
  return noop();
}

int AdaptationAction::index() const noexcept {
  return noop_ ? kNoOpIndex : attribute_offset(attr_) + value_;
}

UiConfig apply_action(const UiConfig& config, const AdaptationAction& action) {
  if (action.is_noop()) return config;
  return config.with(action.attribute(), action.value());
}

const std::vector<UiConfig>& enumerate_configs() {
  static const std::vector<UiConfig> all = [] {
    std::vector<UiConfig> v;
    v.reserve(kNumConfigs);
    for (int i = 0; i < kNumConfigs; ++i) v.push_back(config_from_index(i));
    return v;
  }();
  return all;
}

int config_index(const UiConfig& c) noexcept {
  int idx = 0;
  for (Attribute attr : kAllAttributes) idx = idx * cardinality(attr) + c.get(attr);
  return idx;
}

UiConfig config_from_index(int index) {
  if (index < 0 || index >= kNumConfigs) {
    throw Error(ErrorCode::kInvalidArgument, "config index out of range: " + std::to_string(index));
  }
  UiConfig c;
  for (auto it = kAllAttributes.rbegin(); it != kAllAttributes.rend(); ++it) {
    const int card = cardinality(*it);
    c = c.with(*it, index % card);
    index /= card;
  }
  return c;
}

FeatureVector encode_state(const UiConfig& config, Domain domain) noexcept {
  FeatureVector x{};
  for (Attribute attr : kAllAttributes) {
    x[static_cast<std::size_t>(attribute_offset(attr) + config.get(attr))] = 1.0;
  }
  x[kNumAssignActions + static_cast<std::size_t>(domain)] = 1.0;
  return x;
}

std::string_view to_string(Domain v) noexcept { return kDomainNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Attribute v) noexcept { return field_name(v); }
std::string_view field_name(Attribute attr) noexcept {
  return kFieldNames[static_cast<std::size_t>(attr)];
}

std::string_view value_name(Attribute attr, int value) {
  if (value < 0 || value >= cardinality(attr)) {
    throw Error(ErrorCode::kInvalidArgument, "value out of range");
  }
  const auto i = static_cast<std::size_t>(value);
  switch (attr) {
    case Attribute::Layout: return kLayoutNames[i];
    case Attribute::FontSize: return kFontNames[i];
    case Attribute::Density: return kDensityNames[i];
    case Attribute::Theme: return kThemeNames[i];
    case Attribute::Widget: return kWidgetNames[i];
  }
  return {};
}

Domain parse_domain(std::string_view s) {
  return static_cast<Domain>(find_name(kDomainNames, trim(s), "domain"));
}

Attribute parse_attribute(std::string_view s) {
  return static_cast<Attribute>(find_name(kFieldNames, trim(s), "attribute"));
}

int parse_value(Attribute attr, std::string_view s) {
  s = trim(s);
  switch (attr) {
    case Attribute::Layout: return find_name(kLayoutNames, s, "layout");
    case Attribute::FontSize: return find_name(kFontNames, s, "font_size");
    case Attribute::Density: return find_name(kDensityNames, s, "density");
    case Attribute::Theme: return find_name(kThemeNames, s, "theme");
    case Attribute::Widget: return find_name(kWidgetNames, s, "widget");
  }
  return 0;
}

std::string to_compact_string(const UiConfig& config) {
  std::string out;
  for (Attribute attr : kAllAttributes) {
    if (!out.empty()) out += ',';
    out += value_name(attr, config.get(attr));
  }
  return out;
}

UiConfig parse_config(std::string_view s) {
  s = trim(s);
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    int idx = 0;
    std::from_chars(s.data(), s.data() + s.size(), idx);
    return config_from_index(idx);
  }
  UiConfig c;
  std::size_t pos = 0;
  for (Attribute attr : kAllAttributes) {
    if (pos > s.size()) throw Error(ErrorCode::kInvalidArgument, "config needs 5 fields");
    const std::size_t comma = s.find(',', pos);
    const std::string_view part = s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos);
    c = c.with(attr, parse_value(attr, part));
    pos = comma == std::string_view::npos ? s.size() + 1 : comma + 1;
  }
  if (pos <= s.size()) throw Error(ErrorCode::kInvalidArgument, "config has more than 5 fields");
  return c;
}

void to_json(nlohmann::json& j, Domain v) { j = std::string(to_string(v)); }

void from_json(const nlohmann::json& j, Domain& v) { v = parse_domain(j.get<std::string>()); }

void to_json(nlohmann::json& j, const UiConfig& v) {
  j = nlohmann::json::object();
  for (Attribute attr : kAllAttributes) {
    j[std::string(field_name(attr))] = std::string(value_name(attr, v.get(attr)));
  }
}

void from_json(const nlohmann::json& j, UiConfig& v) {
  UiConfig c;
  for (Attribute attr : kAllAttributes) {
    const auto& field = j.at(std::string(field_name(attr)));
    c = c.with(attr, parse_value(attr, field.get<std::string>()));
  }
  v = c;
}

void to_json(nlohmann::json& j, const ContextModel& v) {
  nlohmann::json user{
      {"age_band", kAgeBandNames[static_cast<std::size_t>(v.user.age_band)]},
      {"interaction_count", v.user.interaction_count},
  };
  if (v.user.declared_pref) user["declared_pref"] = *v.user.declared_pref;
  j = nlohmann::json{
      {"user", user},
      {"platform",
       {{"screen_w_px", v.platform.screen_w_px},
        {"screen_h_px", v.platform.screen_h_px},
        {"input", kInputNames[static_cast<std::size_t>(v.platform.input)]}}},
      {"environment",
       {{"ambient_light", v.environment.ambient_light},
        {"noise_level", v.environment.noise_level}}},
  };
}

void from_json(const nlohmann::json& j, ContextModel& v) {
  ContextModel c;
  if (j.contains("user")) {
    const auto& u = j.at("user");
    if (u.contains("age_band")) {
      c.user.age_band = static_cast<AgeBand>(
          find_name(kAgeBandNames, u.at("age_band").get<std::string>(), "age_band"));
    }
    c.user.interaction_count = u.value("interaction_count", 0u);
    if (u.contains("declared_pref") && !u.at("declared_pref").is_null()) {
      c.user.declared_pref = u.at("declared_pref").get<UiConfig>();
    }
  }
  if (j.contains("platform")) {
    const auto& p = j.at("platform");
    c.platform.screen_w_px = p.value("screen_w_px", c.platform.screen_w_px);
    c.platform.screen_h_px = p.value("screen_h_px", c.platform.screen_h_px);
    if (p.contains("input")) {
      c.platform.input =
          static_cast<InputKind>(find_name(kInputNames, p.at("input").get<std::string>(), "input"));
    }
  }
  if (j.contains("environment")) {
    const auto& e = j.at("environment");
    c.environment.ambient_light = e.value("ambient_light", c.environment.ambient_light);
    c.environment.noise_level = e.value("noise_level", c.environment.noise_level);
  }
  validate(c);
  v = c;
}

void to_json(nlohmann::json& j, const AdaptationAction& v) {
  if (v.is_noop()) {
    j = nlohmann::json{{"kind", "NoOp"}};
    return;
  }
  j = nlohmann::json{{"kind", "Assign"},
                     {"attribute", std::string(field_name(v.attribute()))},
                     {"value", std::string(value_name(v.attribute(), v.value()))}};
}

void from_json(const nlohmann::json& j, AdaptationAction& v) {
  const auto kind = j.at("kind").get<std::string>();
  if (iequals(kind, "NoOp")) {
    v = AdaptationAction::noop();
  } else if (iequals(kind, "Assign")) {
    const Attribute attr = parse_attribute(j.at("attribute").get<std::string>());
    v = AdaptationAction::assign(attr, parse_value(attr, j.at("value").get<std::string>()));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown action kind '" + kind + "'");
  }
}

}  // namespace adaptui
