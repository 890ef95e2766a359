#include "adaptui/feedback_rank.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <set>

#include "adaptui/error.hpp"

namespace adaptui {

RankSession RankSession::create(std::string participant, Domain domain,
                                std::vector<std::string> clip_ids, std::uint64_t seed) {
  if (clip_ids.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a ranking session needs at least 2 clips");
  }
  std::set<std::string> seen;
  for (const auto& id : clip_ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate clip id " + id);
  }

  RankSession s;
  s.participant_ = std::move(participant);
  s.domain_ = domain;
  s.seed_ = seed;
  std::mt19937_64 rng(seed);
  std::shuffle(clip_ids.begin(), clip_ids.end(), rng);
  s.order_ = std::move(clip_ids);

  s.tree_.insert_root(Bucket{s.order_.front()});
  s.placed_ = 1;
  s.queue_.assign(s.order_.begin() + 1, s.order_.end());
  s.advance();
  return s;
}

RankSession RankSession::create(std::string participant, Domain domain,
                                const std::vector<ClipSegment>& clips, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(clips.size());
  for (const auto& c : clips) {
    if (c.domain != domain) {
      throw Error(ErrorCode::kInvalidArgument, "clip " + c.id + " is not in domain " +
                                                   std::string(to_string(domain)));
    }
    ids.push_back(c.id);
  }
  return create(std::move(participant), domain, std::move(ids), seed);
}

std::optional<ComparisonQuery> RankSession::next_query() const {
  if (!pending_) return std::nullopt;
  return ComparisonQuery{"q" + std::to_string(log_.size()), *pending_,
                         tree_.value(cursor_).front()};
}

void RankSession::submit(std::string_view query_id, PreferenceLabel label, std::int64_t t_ms) {
  const auto query = next_query();
  if (!query || query->query_id != query_id) {
    throw Error(ErrorCode::kConflict, "query mismatch");
  }
  log_.push_back(LogEntry{*query, label, t_ms});

  switch (label) {
    case PreferenceLabel::Left:
    case PreferenceLabel::Right: {
      ++answered_;
      const Side side = label == PreferenceLabel::Left ? Side::Left : Side::Right;
      const auto next = tree_.child(cursor_, side);
      if (next == Tree::kNil) {
        insert_pending(side);
      } else {
        cursor_ = next;
      }
      break;
    }
    case PreferenceLabel::Equal:
      ++answered_;
      tree_.value(cursor_).push_back(*pending_);
      ++placed_;
      pending_.reset();
      advance();
      break;
    case PreferenceLabel::Skip:
      queue_.push_back(*pending_);
      pending_.reset();
      advance();
      break;
  }
}

void RankSession::insert_pending(Side side) {
  tree_.insert_child(cursor_, side, Bucket{*pending_});
  ++placed_;
  pending_.reset();
  advance();
}

void RankSession::advance() {
  cursor_ = tree_.root();
  if (queue_.empty()) return;
  pending_ = std::move(queue_.front());
  queue_.pop_front();
}

std::vector<Bucket> RankSession::ranking() const {
  if (!complete()) throw Error(ErrorCode::kFailedPrecondition, "ranking unavailable");
  std::vector<Bucket> out;
  tree_.for_each_in_order([&](Tree::NodeId, const Bucket& b) { out.push_back(b); });
  return out;
}

std::vector<PreferencePair> RankSession::training_pairs(bool closure) const {
  std::vector<PreferencePair> pairs;
  if (!closure) {
    for (const auto& e : log_) {
      if (e.label == PreferenceLabel::Skip) continue;
      pairs.push_back(make_pair(e.query.left, e.query.right, e.label));
    }
    return pairs;
  }
  std::vector<Bucket> buckets;
  tree_.for_each_in_order([&](Tree::NodeId, const Bucket& b) { buckets.push_back(b); });
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto& bi = buckets[i];
    for (std::size_t a = 0; a < bi.size(); ++a) {
      for (std::size_t b = a + 1; b < bi.size(); ++b) {
        pairs.push_back(make_pair(bi[a], bi[b], PreferenceLabel::Equal));
      }
    }
    for (std::size_t j = i + 1; j < buckets.size(); ++j) {
      for (const auto& better : bi) {
        for (const auto& worse : buckets[j]) {
          pairs.push_back(make_pair(better, worse, PreferenceLabel::Left));
        }
      }
    }
  }
  return pairs;
}

void to_json(nlohmann::json& j, const LogEntry& v) {
  j = nlohmann::json{{"query_id", v.query.query_id},
                     {"left", v.query.left},
                     {"right", v.query.right},
                     {"label", v.label},
                     {"t", v.t_ms}};
}

void from_json(const nlohmann::json& j, LogEntry& v) {
  v.query.query_id = j.at("query_id").get<std::string>();
  v.query.left = j.at("left").get<std::string>();
  v.query.right = j.at("right").get<std::string>();
  v.label = j.at("label").get<PreferenceLabel>();
  v.t_ms = j.value("t", std::int64_t{0});
}

void write_log_line(std::ostream& out, const LogEntry& entry) {
  out << nlohmann::json(entry).dump() << '\n';
}

std::vector<LogEntry> read_log(std::istream& in) {
  std::vector<LogEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(nlohmann::json::parse(line).get<LogEntry>());
  }
  return entries;
}

}  // namespace adaptui
