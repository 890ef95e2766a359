#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "adaptui/error.hpp"
#include "adaptui/study_harness.hpp"
#include "doctest.h"

using namespace adaptui;

namespace {

std::vector<std::string> ids(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("P" + std::to_string(i + 1));
  return out;
}

std::vector<ResultRecord> records_for(int participants, std::uint64_t seed) {
  std::vector<ResultRecord> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sat(1, 10);
  std::uniform_real_distribution<double> eng(1, 5);
  for (const auto& p : assign_groups(ids(participants), seed)) {
    const SessionPlan sp = plan(p.group);
    for (int period : {1, 2}) {
      const Period& per = sp.period(period);
      out.push_back(ResultRecord{p.id, p.group, period, per.technique, per.domain, sat(rng), eng(rng)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("group assignment") {
  const auto a = assign_groups(ids(33), 5);
  std::map<int, int> sizes;
  for (const auto& p : a) ++sizes[p.group];
  std::vector<int> counts;
  for (const auto& [g, n] : sizes) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  CHECK(counts == std::vector<int>{8, 8, 8, 9});

  std::set<int> four;
  for (const auto& p : assign_groups(ids(4), 1)) four.insert(p.group);
  CHECK(four == std::set<int>{1, 2, 3, 4});

  const auto b = assign_groups(ids(33), 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].group == b[i].group);
  }
  CHECK_THROWS_AS(assign_groups({"x", "x"}, 0), Error);
  CHECK_THROWS_AS(assign_groups({}, 0), Error);
}

TEST_CASE("online block assignment balances every block of four") {
  for (std::uint64_t seed : {0u, 1u, 9u}) {
    for (std::size_t block = 0; block < 5; ++block) {
      std::set<int> groups;
      for (std::size_t k = 0; k < 4; ++k) groups.insert(block_group(block * 4 + k, seed));
      CHECK(groups == std::set<int>{1, 2, 3, 4});
    }
    CHECK(block_group(6, seed) == block_group(6, seed));
  }
}

TEST_CASE("plans reproduce the crossover table") {
  using T = Technique;
  using D = Domain;
  CHECK(plan(1) == SessionPlan{{T::NA, D::Courses}, {T::Adaptive, D::Trips}});
  CHECK(plan(2) == SessionPlan{{T::Adaptive, D::Trips}, {T::NA, D::Courses}});
  CHECK(plan(3) == SessionPlan{{T::Adaptive, D::Courses}, {T::NA, D::Trips}});
  CHECK(plan(4) == SessionPlan{{T::NA, D::Trips}, {T::Adaptive, D::Courses}});
  for (int g = 1; g <= 4; ++g) {
    CHECK(plan(g).period1.technique != plan(g).period2.technique);
    CHECK(plan(g).period1.domain != plan(g).period2.domain);
    CHECK(plan(g).period(1) == plan(g).period1);
  }
  CHECK_THROWS_AS(plan(0), Error);
  CHECK_THROWS_AS(plan(5), Error);
  CHECK_THROWS_AS(plan(1).period(3), Error);
}

TEST_CASE("QUIS scoring") {
  const std::vector<int> sevens(27, 7);
  CHECK(quis_score(sevens) == 7.0);
  CHECK(quis_score(std::vector<int>{4, 6}) == 5.0);
  std::vector<int> items{1, 9, 3, 10, 4, 4, 8};
  const double s = quis_score(items);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(items.begin(), items.end(), rng);
    CHECK(quis_score(items) == doctest::Approx(s).epsilon(1e-15));
  }
  try {
    quis_score(std::vector<int>{5, 11, 0});
    FAIL("expected a range error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("2 3") != std::string::npos);
  }
  CHECK_THROWS_AS(quis_score(std::vector<int>{}), Error);

  const auto def = default_quis();
  CHECK(def.items.size() == 27);
  std::set<std::string> factors;
  for (const auto& it : def.items) {
    factors.insert(it.factor);
    CHECK(it.scale_max == 10);
  }
  CHECK(factors.size() == 5);
  CHECK(default_quis(12).items.size() == 12);
}

TEST_CASE("UES scoring") {
  const auto def = default_ues();
  REQUIRE(def.items.size() == 31);
  std::map<std::string, int> dims;
  for (const auto& it : def.items) ++dims[it.factor];
  CHECK(dims.size() == 6);

  const std::vector<int> threes(31, 3);
  const auto s = ues_score(threes, def);
  CHECK(s.overall == 3.0);
  for (const auto& [d, v] : s.per_dimension) CHECK(v == 3.0);

  QuestionnaireDef rev = def;
  rev.items[0].reverse = true;
  std::vector<int> one_low = threes;
  one_low[0] = 1;
  CHECK(ues_score(one_low, rev).overall == doctest::Approx((30 * 3 + 5) / 31.0));
  CHECK(ues_score(one_low, def).overall == doctest::Approx((30 * 3 + 1) / 31.0));

  std::mt19937_64 rng(8);
  std::vector<int> items(31);
  for (auto& v : items) v = 1 + static_cast<int>(rng() % 5);
  const auto mixed = ues_score(items, rev);
  double weighted = 0.0;
  for (const auto& [d, mean] : mixed.per_dimension) weighted += mean * dims[d];
  CHECK(weighted / 31.0 == doctest::Approx(mixed.overall).epsilon(1e-12));

  // Swapping two items of the same dimension leaves everything unchanged.
  std::size_t i = 1;
  std::size_t j = 2;
  REQUIRE(def.items[i].factor == def.items[j].factor);
  std::swap(items[i], items[j]);
  const auto swapped = ues_score(items, def);
  std::swap(items[i], items[j]);
  CHECK(swapped.overall == doctest::Approx(ues_score(items, def).overall));

  CHECK_THROWS_AS(ues_score(std::vector<int>(30, 3), def), Error);
  std::vector<int> bad = threes;
  bad[4] = 6;
  CHECK_THROWS_AS(ues_score(bad, def), Error);
  const auto problems = check_response(bad, def);
  CHECK(problems.out_of_range == std::vector<std::size_t>{5});
}

TEST_CASE("questionnaire definitions load from JSON") {
  nlohmann::json j = {{"kind", "QUIS"},
                      {"items",
                       {{{"id", "a"}, {"scale", {1, 7}}, {"factor", "screen"}},
                        {{"id", "b"}, {"scale", 9}, {"factor", "learning"}, {"reverse", true}}}}};
  const auto def = load_questionnaire(j);
  REQUIRE(def.items.size() == 2);
  CHECK(def.items[0].scale_max == 7);
  CHECK(def.items[1].scale_min == 1);
  CHECK(def.items[1].scale_max == 9);
  CHECK(def.items[1].reverse);

  nlohmann::json ues = {{"kind", "UES"}, {"items", nlohmann::json::array()}};
  for (int i = 0; i < 30; ++i)
    ues["items"].push_back({{"id", "u" + std::to_string(i)}, {"scale", 5}, {"dimension", "novelty"}});
  CHECK_THROWS_AS(load_questionnaire(ues), Error);
  ues["items"].push_back({{"id", "u30"}, {"scale", 5}, {"dimension", "novelty"}});
  CHECK(load_questionnaire(ues).items.size() == 31);
}

TEST_CASE("Cronbach's alpha") {
  CHECK(cronbach_alpha({{1, 1}, {2, 2}, {5, 5}, {3, 3}}) == doctest::Approx(1.0).epsilon(1e-12));

  // Items c1 = (1,2,4), c2 = (2,3,4), c3 = (3,5,4):
  // var c1 = 7/3, var c2 = 1, var c3 = 1, row sums (6,10,12) with variance 28/3,
  // alpha = 3/2 * (1 - (13/3) / (28/3)) = 45/56.
  const std::vector<std::vector<double>> fixture{{1, 2, 3}, {2, 3, 5}, {4, 4, 4}};
  CHECK(std::abs(cronbach_alpha(fixture) - 45.0 / 56.0) < 1e-12);

  auto shifted = fixture;
  for (auto& row : shifted)
    for (auto& v : row) v += 17.0;
  CHECK(std::abs(cronbach_alpha(shifted) - 45.0 / 56.0) < 1e-12);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> indep(10000, std::vector<double>(2));
  for (auto& row : indep)
    for (auto& v : row) v = u(rng);
  CHECK(std::abs(cronbach_alpha(indep)) < 0.15);

  try {
    cronbach_alpha({{2, 3}, {3, 2}});
    FAIL("expected degenerate");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "degenerate responses");
  }
  CHECK_THROWS_AS(cronbach_alpha({{1, 2}}), Error);
  CHECK_THROWS_AS(cronbach_alpha({{1}, {2}}), Error);
}

TEST_CASE("descriptive statistics") {
  const auto s = descriptive(std::vector<double>{3, 1, 2});
  CHECK(s.n == 3);
  CHECK(s.min == 1);
  CHECK(s.max == 3);
  CHECK(s.mean == 2);
  CHECK(s.median == 2);
  REQUIRE(s.std_dev);
  CHECK(*s.std_dev == doctest::Approx(1.0));
  CHECK(descriptive(std::vector<double>{4, 1, 3, 2}).median == 2.5);

  const auto one = descriptive(std::vector<double>{5});
  CHECK_FALSE(one.std_dev.has_value());
  CHECK(format_stats_row("x", one) == "x & 5.00 & 5.00 & 5.00 & 5.00 & --");
  CHECK_THROWS_AS(descriptive(std::vector<double>{}), Error);

  DescriptiveStats row;
  row.min = 4.61;
  row.max = 8.98;
  row.mean = 6.90;
  row.median = 7.02;
  row.std_dev = 1.11;
  CHECK(format_stats_row("Adaptive", row) == "Adaptive & 4.61 & 8.98 & 6.90 & 7.02 & 1.11");
}

TEST_CASE("results export") {
  const auto recs = records_for(33, 2);
  const std::string csv = export_results(recs);
  std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == 67);
  CHECK(csv.rfind("participant,group,period,technique,domain,satisfaction,engagement\n", 0) == 0);

  auto sorted = recs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.participant, a.period) < std::tie(b.participant, b.period);
  });
  CHECK(parse_results(csv) == sorted);

  auto shuffled = recs;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(export_results(shuffled) == csv);

  CHECK(export_results({}) == "participant,group,period,technique,domain,satisfaction,engagement\n");
  auto missing = recs;
  missing.pop_back();
  CHECK_THROWS_AS(export_results(missing), Error);
}
