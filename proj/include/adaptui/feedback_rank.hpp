#pragma once

// Active pairwise-comparison ranking.
//
// Clips are inserted one at a time into a red-black tree of buckets. Each
// insertion walks from the root: the pending clip is compared with the
// representative (first member) of the bucket at the cursor. Left means the
// pending clip is preferred and the walk continues into the better (left)
// subtree; Right continues into the worse (right) subtree; Equal joins the
// bucket. Reaching an empty slot attaches a new bucket there. In-order
// traversal lists buckets best first.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaptui/adapt_env.hpp"
#include "adaptui/preference.hpp"
#include "adaptui/rb_tree.hpp"

namespace adaptui {

struct ComparisonQuery {
  std::string query_id;
  std::string left;   // pending clip
  std::string right;  // bucket representative

  friend bool operator==(const ComparisonQuery&, const ComparisonQuery&) = default;
};

struct LogEntry {
  ComparisonQuery query;
  PreferenceLabel label = PreferenceLabel::Skip;
  std::int64_t t_ms = 0;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

using Bucket = std::vector<std::string>;

class RankSession {
 public:
  using Tree = RedBlackTree<Bucket>;

  // Needs >= 2 distinct ids. The insertion order is a seeded shuffle; the
  // first clip seeds the tree without a query.
  static RankSession create(std::string participant, Domain domain,
                            std::vector<std::string> clip_ids, std::uint64_t seed);
  // Same, after checking that every clip belongs to `domain`.
  static RankSession create(std::string participant, Domain domain,
                            const std::vector<ClipSegment>& clips, std::uint64_t seed);

  // Current comparison, or nullopt once every clip is placed. Calling it
  // repeatedly without submitting returns the same query.
  std::optional<ComparisonQuery> next_query() const;

  // Throws Error(kConflict, "query mismatch") unless query_id names the
  // current query; the session is unchanged in that case.
  void submit(std::string_view query_id, PreferenceLabel label, std::int64_t t_ms = 0);

  // Re-applies a logged answer (same checks as submit).
  void apply(const LogEntry& entry) { submit(entry.query.query_id, entry.label, entry.t_ms); }

  bool complete() const noexcept { return !pending_.has_value(); }

  // Buckets best first. Throws Error(kFailedPrecondition, "ranking
  // unavailable") while clips are still unplaced.
  std::vector<Bucket> ranking() const;

  // One pair per non-Skip answer, oriented (left, right) as asked. With
  // `closure`, instead every pair implied by the buckets placed so far:
  // (better, worse) with mu (1,0) across buckets and (0.5,0.5) within one.
  std::vector<PreferencePair> training_pairs(bool closure = false) const;

  const std::string& participant() const noexcept { return participant_; }
  Domain domain() const noexcept { return domain_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<std::string>& insertion_order() const noexcept { return order_; }
  const std::vector<LogEntry>& log() const noexcept { return log_; }
  const Tree& tree() const noexcept { return tree_; }
  const std::deque<std::string>& queue() const noexcept { return queue_; }
  const std::optional<std::string>& pending() const noexcept { return pending_; }

  std::size_t total_clips() const noexcept { return order_.size(); }
  std::size_t placed_clips() const noexcept { return placed_; }
  std::size_t answered_queries() const noexcept { return answered_; }

 private:
  RankSession() = default;

  void insert_pending(Side side);
  void advance();

  std::string participant_;
  Domain domain_ = Domain::Courses;
  std::uint64_t seed_ = 0;
  std::vector<std::string> order_;
  Tree tree_;
  std::optional<std::string> pending_;
  Tree::NodeId cursor_ = Tree::kNil;
  std::deque<std::string> queue_;
  std::vector<LogEntry> log_;
  std::size_t placed_ = 0;
  std::size_t answered_ = 0;
};

void to_json(nlohmann::json& j, const LogEntry& v);
void from_json(const nlohmann::json& j, LogEntry& v);

// Line-delimited {query_id, left, right, label, t}.
void write_log_line(std::ostream& out, const LogEntry& entry);
std::vector<LogEntry> read_log(std::istream& in);

}  // namespace adaptui
