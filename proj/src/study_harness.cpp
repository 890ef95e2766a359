#include "adaptui/study_harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

Error invalid(const std::string& m) { return Error(ErrorCode::kInvalidArgument, m); }

double sample_variance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? line.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

constexpr std::string_view kResultsHeader =
    "participant,group,period,technique,domain,satisfaction,engagement";

}  // namespace

std::string_view to_string(Technique t) noexcept { return t == Technique::Adaptive ? "Adaptive" : "NA"; }

Technique parse_technique(std::string_view s) {
  if (s == "Adaptive" || s == "adaptive") return Technique::Adaptive;
  if (s == "NA" || s == "na") return Technique::NA;
  throw invalid("unknown technique '" + std::string(s) + "'");
}

std::vector<Participant> assign_groups(std::vector<std::string> ids, std::uint64_t seed) {
  if (ids.empty()) throw invalid("no participant ids");
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw invalid("duplicate participant id " + id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<Participant> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.push_back(Participant{std::move(ids[i]), static_cast<int>(i % kNumGroups) + 1, {}});
  }
  return out;
}

int block_group(std::size_t k, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k / kNumGroups)};
  std::mt19937_64 rng(seq);
  std::array<int, kNumGroups> groups{1, 2, 3, 4};
  std::shuffle(groups.begin(), groups.end(), rng);
  return groups[k % kNumGroups];
}

const Period& SessionPlan::period(int p) const {
  if (p == 1) return period1;
  if (p == 2) return period2;
  throw invalid("period must be 1 or 2");
}

SessionPlan plan(int group) {
  using T = Technique;
  using D = Domain;
  switch (group) {
    case 1: return {{T::NA, D::Courses}, {T::Adaptive, D::Trips}};
    case 2: return {{T::Adaptive, D::Trips}, {T::NA, D::Courses}};
    case 3: return {{T::Adaptive, D::Courses}, {T::NA, D::Trips}};
    case 4: return {{T::NA, D::Trips}, {T::Adaptive, D::Courses}};
    default: throw invalid("group must be in 1..4, got " + std::to_string(group));
  }
}

std::string_view to_string(QuestionnaireKind k) noexcept {
  return k == QuestionnaireKind::Quis ? "QUIS" : "UES";
}

QuestionnaireKind parse_questionnaire_kind(std::string_view s) {
  if (s == "QUIS" || s == "quis") return QuestionnaireKind::Quis;
  if (s == "UES" || s == "ues") return QuestionnaireKind::Ues;
  throw invalid("unknown questionnaire '" + std::string(s) + "'");
}

QuestionnaireDef default_quis(int item_count) {
  if (item_count < 1) throw invalid("QUIS needs at least one item");
  static constexpr std::array<std::pair<std::string_view, int>, 5> kFactors{{
      {"overall_reaction", 6},
      {"screen", 4},
      {"terminology", 6},
      {"learning", 6},
      {"system_capabilities", 5},
  }};
  QuestionnaireDef def;
  def.kind = QuestionnaireKind::Quis;
  std::vector<std::string> factors;
  if (item_count == 27) {
    for (const auto& [name, count] : kFactors) factors.insert(factors.end(), count, std::string(name));
  } else {
    for (int i = 0; i < item_count; ++i) factors.emplace_back(kFactors[static_cast<std::size_t>(i) % 5].first);
  }
  for (int i = 0; i < item_count; ++i) {
    def.items.push_back({"quis" + std::to_string(i + 1), 1, 10, factors[static_cast<std::size_t>(i)], false});
  }
  return def;
}

QuestionnaireDef default_ues() {
  static constexpr std::array<std::pair<std::string_view, int>, 6> kDims{{
      {"focused_attention", 7},
      {"perceived_usability", 8},
      {"aesthetic_appeal", 5},
      {"endurability", 5},
      {"novelty", 3},
      {"involvement", 3},
  }};
  QuestionnaireDef def;
  def.kind = QuestionnaireKind::Ues;
  int n = 0;
  for (const auto& [name, count] : kDims) {
    for (int i = 0; i < count; ++i) {
      def.items.push_back({"ues" + std::to_string(++n), 1, 5, std::string(name), false});
    }
  }
  return def;
}

QuestionnaireDef load_questionnaire(const nlohmann::json& j) {
  QuestionnaireDef def;
  def.kind = parse_questionnaire_kind(j.at("kind").get<std::string>());
  const int default_max = def.kind == QuestionnaireKind::Quis ? 10 : 5;
  for (const auto& it : j.at("items")) {
    QuestionnaireItem item;
    item.id = it.at("id").get<std::string>();
    item.scale_max = default_max;
    if (it.contains("scale")) {
      const auto& sc = it.at("scale");
      if (sc.is_array()) {
        item.scale_min = sc.at(0).get<int>();
        item.scale_max = sc.at(1).get<int>();
      } else {
        item.scale_max = sc.get<int>();
      }
    }
    if (item.scale_min >= item.scale_max) throw invalid("item " + item.id + " has an empty scale");
    item.factor = it.contains("factor") ? it.at("factor").get<std::string>()
                                        : it.value("dimension", std::string("overall"));
    item.reverse = it.value("reverse", false);
    def.items.push_back(std::move(item));
  }
  if (def.items.empty()) throw invalid("questionnaire has no items");
  if (def.kind == QuestionnaireKind::Ues && def.items.size() != 31) {
    throw invalid("UES definitions must have 31 items");
  }
  return def;
}

std::string ResponseProblems::describe(std::size_t expected) const {
  std::string msg;
  if (wrong_count) msg = "expected " + std::to_string(expected) + " items";
  if (!out_of_range.empty()) {
    if (!msg.empty()) msg += "; ";
    msg += "items out of range:";
    for (auto i : out_of_range) msg += " " + std::to_string(i);
  }
  return msg;
}

ResponseProblems check_response(std::span<const int> items, const QuestionnaireDef& def) {
  ResponseProblems p;
  p.wrong_count = items.size() != def.items.size();
  const std::size_t n = std::min(items.size(), def.items.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i] < def.items[i].scale_min || items[i] > def.items[i].scale_max) {
      p.out_of_range.push_back(i + 1);
    }
  }
  return p;
}

double quis_score(std::span<const int> items, int scale_max) {
  if (items.empty()) throw invalid("QUIS response has no items");
  ResponseProblems p;
  double sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 1 || items[i] > scale_max) p.out_of_range.push_back(i + 1);
    sum += items[i];
  }
  if (!p.ok()) throw invalid(p.describe(items.size()));
  return sum / static_cast<double>(items.size());
}

UesScore ues_score(std::span<const int> items, const QuestionnaireDef& def) {
  const auto problems = check_response(items, def);
  if (!problems.ok()) throw invalid(problems.describe(def.items.size()));
  UesScore score;
  std::map<std::string, std::pair<double, int>> dims;
  double total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = def.items[i];
    const double v = item.reverse ? item.scale_min + item.scale_max - items[i] : items[i];
    total += v;
    auto& [sum, count] = dims[item.factor];
    sum += v;
    ++count;
  }
  score.overall = total / static_cast<double>(items.size());
  for (const auto& [name, acc] : dims) score.per_dimension[name] = acc.first / acc.second;
  return score;
}

double cronbach_alpha(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw invalid("cronbach_alpha needs >= 2 participants");
  const std::size_t k = rows.front().size();
  if (k < 2) throw invalid("cronbach_alpha needs >= 2 items");
  for (const auto& r : rows) {
    if (r.size() != k) throw invalid("ragged item matrix");
  }
  std::vector<double> column(rows.size());
  double item_var_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t p = 0; p < rows.size(); ++p) column[p] = rows[p][i];
    item_var_sum += sample_variance(column);
  }
  for (std::size_t p = 0; p < rows.size(); ++p) {
    double s = 0.0;
    for (double v : rows[p]) s += v;
    column[p] = s;
  }
  const double total_var = sample_variance(column);
  if (total_var <= 0.0) throw invalid("degenerate responses");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var_sum / total_var);
}

DescriptiveStats descriptive(std::span<const double> values) {
  if (values.empty()) throw invalid("descriptive statistics need at least one value");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  DescriptiveStats s;
  s.n = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  const std::size_t mid = s.n / 2;
  s.median = s.n % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  if (s.n >= 2) s.std_dev = std::sqrt(sample_variance(sorted));
  return s;
}

std::string format_stats_row(std::string_view label, const DescriptiveStats& s) {
  char buf[160];
  if (s.std_dev) {
    std::snprintf(buf, sizeof buf, " & %.2f & %.2f & %.2f & %.2f & %.2f", s.min, s.max, s.mean,
                  s.median, *s.std_dev);
  } else {
    std::snprintf(buf, sizeof buf, " & %.2f & %.2f & %.2f & %.2f & --", s.min, s.max, s.mean, s.median);
  }
  return std::string(label) + buf;
}

std::string export_results(std::vector<ResultRecord> records) {
  std::map<std::string, std::set<int>> periods;
  for (const auto& r : records) {
    if (r.participant.find_first_of(",\"\n") != std::string::npos) {
      throw invalid("participant id '" + r.participant + "' is not CSV-safe");
    }
    if (r.period != 1 && r.period != 2) throw invalid("period must be 1 or 2");
    if (!periods[r.participant].insert(r.period).second) {
      throw invalid("duplicate period " + std::to_string(r.period) + " for " + r.participant);
    }
  }
  for (const auto& [id, ps] : periods) {
    if (ps.size() != 2) throw invalid("participant " + id + " is missing a period");
  }
  std::sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return std::tie(a.participant, a.period) < std::tie(b.participant, b.period);
  });
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.participant + ',' + std::to_string(r.group) + ',' + std::to_string(r.period) + ',' +
           std::string(to_string(r.technique)) + ',' + std::string(to_string(r.domain)) + ',' +
           fmt_double(r.satisfaction) + ',' + fmt_double(r.engagement) + '\n';
  }
  return out;
}

std::vector<ResultRecord> parse_results(std::string_view csv) {
  std::vector<ResultRecord> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw invalid("unexpected results header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw invalid("results row needs 7 fields");
    ResultRecord r;
    r.participant = std::string(f[0]);
    r.group = std::stoi(std::string(f[1]));
    r.period = std::stoi(std::string(f[2]));
    r.technique = parse_technique(f[3]);
    r.domain = parse_domain(f[4]);
    r.satisfaction = std::stod(std::string(f[5]));
    r.engagement = std::stod(std::string(f[6]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace adaptui
