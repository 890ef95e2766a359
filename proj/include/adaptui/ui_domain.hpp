#pragma once

// UI configuration space, context model and adaptation actions shared by every
// other module.
//
// Configurations are enumerated lexicographically in declared attribute order
// (layout, font_size, density, theme, widget) with widget varying fastest, so
// config_index((List, Small, Detailed, Light, ListMenu)) == 0.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace adaptui {

enum class Domain : std::uint8_t { Courses, Trips };

enum class Layout : std::uint8_t { List, Grid2, Grid3, Grid4, Grid5 };
enum class FontSize : std::uint8_t { Small, Medium, Large };
enum class Density : std::uint8_t { Detailed, Condensed };
enum class Theme : std::uint8_t { Light, Dark };
enum class Widget : std::uint8_t { ListMenu, Dropdown };

enum class Attribute : std::uint8_t { Layout, FontSize, Density, Theme, Widget };

inline constexpr std::size_t kNumAttributes = 5;
inline constexpr std::array<int, kNumAttributes> kAttributeCardinality{5, 3, 2, 2, 2};
inline constexpr std::array<Attribute, kNumAttributes> kAllAttributes{
    Attribute::Layout, Attribute::FontSize, Attribute::Density, Attribute::Theme,
    Attribute::Widget};
inline constexpr std::array<Domain, 2> kAllDomains{Domain::Courses, Domain::Trips};

inline constexpr int kNumDomains = 2;
inline constexpr int kNumConfigs = 5 * 3 * 2 * 2 * 2;
inline constexpr int kNumAssignActions = 5 + 3 + 2 + 2 + 2;
inline constexpr int kNumActions = kNumAssignActions + 1;
inline constexpr int kNoOpIndex = kNumAssignActions;
inline constexpr std::size_t kFeatureDim = kNumAssignActions + kNumDomains;

using FeatureVector = std::array<double, kFeatureDim>;

struct UiConfig {
  Layout layout = Layout::List;
  FontSize font_size = FontSize::Small;
  Density density = Density::Detailed;
  Theme theme = Theme::Light;
  Widget widget = Widget::ListMenu;

  // Value of one attribute as its ordinal within the attribute's value set.
  int get(Attribute attr) const noexcept;
  // Copy with one attribute replaced; `value` must be a valid ordinal.
  UiConfig with(Attribute attr, int value) const;

  friend bool operator==(const UiConfig&, const UiConfig&) = default;
};

// (List, Medium, Detailed, Light, ListMenu): the non-adaptive UI and the
// FixedDefault episode start.
inline constexpr UiConfig kDefaultConfig{Layout::List, FontSize::Medium, Density::Detailed,
                                         Theme::Light, Widget::ListMenu};

enum class AgeBand : std::uint8_t { Under25, From25To44, From45To64, Over64 };
enum class InputKind : std::uint8_t { Mouse, Touch };

struct UserContext {
  AgeBand age_band = AgeBand::From25To44;
  std::uint32_t interaction_count = 0;
  std::optional<UiConfig> declared_pref;

  friend bool operator==(const UserContext&, const UserContext&) = default;
};

struct PlatformContext {
  int screen_w_px = 1920;
  int screen_h_px = 1080;
  InputKind input = InputKind::Mouse;

  friend bool operator==(const PlatformContext&, const PlatformContext&) = default;
};

struct EnvironmentContext {
  double ambient_light = 0.7;  // [0,1]
  double noise_level = 0.2;    // [0,1]

  friend bool operator==(const EnvironmentContext&, const EnvironmentContext&) = default;
};

struct ContextModel {
  UserContext user;
  PlatformContext platform;
  EnvironmentContext environment;

  friend bool operator==(const ContextModel&, const ContextModel&) = default;
};

// Throws Error(kInvalidArgument) when a field is outside its documented range.
void validate(const ContextModel& ctx);

// Either "set attribute to value" or "leave the UI alone".
class AdaptationAction {
 public:
  AdaptationAction() = default;  // NoOp

  static AdaptationAction noop() noexcept { return AdaptationAction(); }
  static AdaptationAction assign(Attribute attr, int value);
  static AdaptationAction assign(Layout v) { return assign(Attribute::Layout, static_cast<int>(v)); }
  static AdaptationAction assign(FontSize v) { return assign(Attribute::FontSize, static_cast<int>(v)); }
  static AdaptationAction assign(Density v) { return assign(Attribute::Density, static_cast<int>(v)); }
  static AdaptationAction assign(Theme v) { return assign(Attribute::Theme, static_cast<int>(v)); }
  static AdaptationAction assign(Widget v) { return assign(Attribute::Widget, static_cast<int>(v)); }

  // Index in [0, kNumActions): assigns in attribute-block order, NoOp last.
  static AdaptationAction from_index(int index);
  int index() const noexcept;

  bool is_noop() const noexcept { return noop_; }
  Attribute attribute() const noexcept { return attr_; }
  int value() const noexcept { return value_; }

  friend bool operator==(const AdaptationAction&, const AdaptationAction&) = default;

 private:
  AdaptationAction(Attribute attr, int value) : noop_(false), attr_(attr), value_(value) {}

  bool noop_ = true;
  Attribute attr_ = Attribute::Layout;
  int value_ = 0;
};

UiConfig apply_action(const UiConfig& config, const AdaptationAction& action);

// All 120 configurations in lexicographic declared order.
const std::vector<UiConfig>& enumerate_configs();

int config_index(const UiConfig& config) noexcept;
UiConfig config_from_index(int index);

// One-hot blocks: layout(5) font(3) density(2) theme(2) widget(2) domain(2).
FeatureVector encode_state(const UiConfig& config, Domain domain) noexcept;

// Offset of an attribute's block inside the feature vector and the action list.
int attribute_offset(Attribute attr) noexcept;
int cardinality(Attribute attr) noexcept;

// Canonical string names ("Grid3", "Dark", "Courses", ...). Parsing is
// case-insensitive and throws Error(kInvalidArgument) on unknown names.
std::string_view to_string(Domain v) noexcept;
std::string_view to_string(Attribute v) noexcept;
std::string_view value_name(Attribute attr, int value);
std::string_view field_name(Attribute attr) noexcept;
Domain parse_domain(std::string_view s);
Attribute parse_attribute(std::string_view s);
int parse_value(Attribute attr, std::string_view s);

// Compact "Grid3,Large,Condensed,Dark,Dropdown" form, or a numeric index.
std::string to_compact_string(const UiConfig& config);
UiConfig parse_config(std::string_view s);

void to_json(nlohmann::json& j, Domain v);
void from_json(const nlohmann::json& j, Domain& v);
void to_json(nlohmann::json& j, const UiConfig& v);
void from_json(const nlohmann::json& j, UiConfig& v);
void to_json(nlohmann::json& j, const ContextModel& v);
void from_json(const nlohmann::json& j, ContextModel& v);
void to_json(nlohmann::json& j, const AdaptationAction& v);
void from_json(const nlohmann::json& j, AdaptationAction& v);

}  // namespace adaptui
