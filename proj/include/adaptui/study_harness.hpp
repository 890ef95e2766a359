#pragma once

// Crossover-study bookkeeping: group assignment, per-group session order,
// questionnaire scoring, reliability, descriptive statistics and a long-format
// CSV export for mixed-model analysis elsewhere.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptui/ui_domain.hpp"

namespace adaptui {

enum class Technique : std::uint8_t { Adaptive, NA };

std::string_view to_string(Technique t) noexcept;
Technique parse_technique(std::string_view s);

inline constexpr int kNumGroups = 4;

struct Participant {
  std::string id;
  int group = 1;
  std::map<std::string, std::string> demographic;
};

// Seeded shuffle, then groups 1..4 round-robin. Throws on duplicate ids.
std::vector<Participant> assign_groups(std::vector<std::string> ids, std::uint64_t seed);

// Group for the k-th participant (0-based) when ids arrive one at a time:
// every consecutive block of four gets its own seeded permutation of 1..4.
int block_group(std::size_t k, std::uint64_t seed);

struct Period {
  Technique technique = Technique::NA;
  Domain domain = Domain::Courses;

  friend bool operator==(const Period&, const Period&) = default;
};

struct SessionPlan {
  Period period1;
  Period period2;

  const Period& period(int p) const;  // p in {1, 2}

  friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

// Group 1: NA/Courses then Adaptive/Trips; 2: Adaptive/Trips then NA/Courses;
// 3: Adaptive/Courses then NA/Trips; 4: NA/Trips then Adaptive/Courses.
SessionPlan plan(int group);

enum class QuestionnaireKind : std::uint8_t { Quis, Ues };

std::string_view to_string(QuestionnaireKind k) noexcept;
QuestionnaireKind parse_questionnaire_kind(std::string_view s);

struct QuestionnaireItem {
  std::string id;
  int scale_min = 1;
  int scale_max = 10;
  std::string factor;  // QUIS factor or UES dimension
  bool reverse = false;
};

struct QuestionnaireDef {
  QuestionnaireKind kind = QuestionnaireKind::Quis;
  std::vector<QuestionnaireItem> items;
};

// QUIS: 10-point items over five factors (27 items in the default form).
QuestionnaireDef default_quis(int item_count = 27);
// UES: 31 five-point items over focused attention (7), perceived usability
// (8), aesthetic appeal (5), endurability (5), novelty (3), involvement (3).
QuestionnaireDef default_ues();

// {"kind": "QUIS"|"UES", "items": [{id, scale, factor|dimension, reverse}]}
// where scale is [min, max] or a max with min 1.
QuestionnaireDef load_questionnaire(const nlohmann::json& j);

// 1-based positions of items outside their scale, plus an arity mismatch
// flag; empty when the response is valid.
struct ResponseProblems {
  bool wrong_count = false;
  std::vector<std::size_t> out_of_range;

  bool ok() const noexcept { return !wrong_count && out_of_range.empty(); }
  std::string describe(std::size_t expected) const;
};

ResponseProblems check_response(std::span<const int> items, const QuestionnaireDef& def);

// Mean of the items. Throws Error(kInvalidArgument) listing offending items.
double quis_score(std::span<const int> items, int scale_max = 10);

struct UesScore {
  double overall = 0.0;
  std::map<std::string, double> per_dimension;
};

// Reverse-coded items map v -> (min + max) - v, i.e. 6 - v on a 1..5 scale.
UesScore ues_score(std::span<const int> items, const QuestionnaireDef& def = default_ues());

// alpha = k/(k-1) * (1 - sum_i var_i / var_total) with sample variances;
// rows are participants. Throws Error(kInvalidArgument, "degenerate
// responses") when the row sums have zero variance.
double cronbach_alpha(const std::vector<std::vector<double>>& rows);

struct DescriptiveStats {
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::optional<double> std_dev;  // sample (n - 1); absent when n < 2
};

DescriptiveStats descriptive(std::span<const double> values);

// "<label> & min & max & mean & median & std" with two decimals.
std::string format_stats_row(std::string_view label, const DescriptiveStats& s);

struct ResultRecord {
  std::string participant;
  int group = 1;
  int period = 1;
  Technique technique = Technique::NA;
  Domain domain = Domain::Courses;
  double satisfaction = 0.0;
  double engagement = 0.0;

  friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

// Header participant,group,period,technique,domain,satisfaction,engagement;
// rows sorted by (participant, period). Every participant must have exactly
// periods 1 and 2.
std::string export_results(std::vector<ResultRecord> records);
std::vector<ResultRecord> parse_results(std::string_view csv);

}  // namespace adaptui
