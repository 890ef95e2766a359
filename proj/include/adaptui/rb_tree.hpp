#pragma once

// Red-black tree whose descent is driven from outside.
//
// Ordinary red-black trees compare keys themselves. Here a comparison is a
// question put to a person, answered at some later time, so the caller walks
// the tree one node at a time and finally asks for a new node to be attached
// at an empty child slot. Rebalancing after attachment is the usual
// recolor/rotate fixup.
//
// Nodes live in a vector and refer to each other by index, which keeps the
// tree a copyable value.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adaptui {

enum class Side : std::uint8_t { Left, Right };

template <typename T>
class RedBlackTree {
 public:
  using NodeId = std::int32_t;
  static constexpr NodeId kNil = -1;

  struct AuditResult {
    bool ok = true;
    std::string violation;
    int black_height = 0;
  };

  bool empty() const noexcept { return root_ == kNil; }
  std::size_t size() const noexcept { return nodes_.size(); }
  NodeId root() const noexcept { return root_; }

  NodeId left(NodeId n) const { return node(n).left; }
  NodeId right(NodeId n) const { return node(n).right; }
  NodeId child(NodeId n, Side side) const { return side == Side::Left ? left(n) : right(n); }
  NodeId parent(NodeId n) const { return node(n).parent; }
  bool is_red(NodeId n) const { return n != kNil && node(n).red; }

  const T& value(NodeId n) const { return node(n).value; }
  T& value(NodeId n) { return node(n).value; }

  NodeId insert_root(T value) {
    if (!empty()) throw std::logic_error("insert_root on non-empty tree");
    root_ = push(std::move(value), kNil);
    node(root_).red = false;
    return root_;
  }

  // Attaches a new node in the empty `side` slot of `parent` and rebalances.
  // Returns the new node's id (ids are stable across rotations).
  NodeId insert_child(NodeId parent_id, Side side, T value) {
    if (child(parent_id, side) != kNil) throw std::logic_error("child slot occupied");
    const NodeId z = push(std::move(value), parent_id);
    (side == Side::Left ? node(parent_id).left : node(parent_id).right) = z;
    insert_fixup(z);
    return z;
  }

  template <typename Fn>
  void for_each_in_order(Fn&& fn) const {
    std::vector<NodeId> stack;
    NodeId cur = root_;
    while (cur != kNil || !stack.empty()) {
      while (cur != kNil) {
        stack.push_back(cur);
        cur = left(cur);
      }
      cur = stack.back();
      stack.pop_back();
      fn(cur, value(cur));
      cur = right(cur);
    }
  }

  // Number of nodes on the longest root-to-leaf path (0 when empty).
  int height() const { return height_from(root_); }

  // Checks root colour, red-red adjacency, black height and parent links.
  AuditResult audit() const {
    AuditResult result;
    if (root_ == kNil) return result;
    if (node(root_).red) return fail("root is red");
    if (parent(root_) != kNil) return fail("root has a parent");
    int bh = 0;
    std::string why;
    if (!audit_from(root_, bh, why)) return fail(why);
    result.black_height = bh;
    return result;
  }

 private:
  struct Node {
    T value;
    NodeId parent = kNil;
    NodeId left = kNil;
    NodeId right = kNil;
    bool red = true;
  };

  static AuditResult fail(std::string why) {
    AuditResult r;
    r.ok = false;
    r.violation = std::move(why);
    return r;
  }

  const Node& node(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)); }
  Node& node(NodeId n) { return nodes_.at(static_cast<std::size_t>(n)); }

  NodeId push(T value, NodeId parent_id) {
    nodes_.push_back(Node{std::move(value), parent_id, kNil, kNil, true});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void replace_child(NodeId parent_id, NodeId old_child, NodeId new_child) {
    if (parent_id == kNil) {
      root_ = new_child;
    } else if (node(parent_id).left == old_child) {
      node(parent_id).left = new_child;
    } else {
      node(parent_id).right = new_child;
    }
    if (new_child != kNil) node(new_child).parent = parent_id;
  }

  void rotate_left(NodeId x) {
    const NodeId y = node(x).right;
    node(x).right = node(y).left;
    if (node(y).left != kNil) node(node(y).left).parent = x;
    replace_child(node(x).parent, x, y);
    node(y).left = x;
    node(x).parent = y;
  }

  void rotate_right(NodeId x) {
    const NodeId y = node(x).left;
    node(x).left = node(y).right;
    if (node(y).right != kNil) node(node(y).right).parent = x;
    replace_child(node(x).parent, x, y);
    node(y).right = x;
    node(x).parent = y;
  }

  void insert_fixup(NodeId z) {
    while (z != root_ && is_red(parent(z))) {
      NodeId p = parent(z);
      const NodeId g = parent(p);
      const bool parent_is_left = node(g).left == p;
      const NodeId uncle = parent_is_left ? node(g).right : node(g).left;
      if (is_red(uncle)) {
        node(p).red = false;
        node(uncle).red = false;
        node(g).red = true;
        z = g;
        continue;
      }
      if (parent_is_left) {
        if (z == node(p).right) {
          z = p;
          rotate_left(z);
          p = parent(z);
        }
        node(p).red = false;
        node(g).red = true;
        rotate_right(g);
      } else {
        if (z == node(p).left) {
          z = p;
          rotate_right(z);
          p = parent(z);
        }
        node(p).red = false;
        node(g).red = true;
        rotate_left(g);
      }
    }
    node(root_).red = false;
  }

  int height_from(NodeId n) const {
    if (n == kNil) return 0;
    return 1 + std::max(height_from(left(n)), height_from(right(n)));
  }

  bool audit_from(NodeId n, int& black_height, std::string& why) const {
    if (n == kNil) {
      black_height = 1;
      return true;
    }
    const Node& cur = node(n);
    for (NodeId c : {cur.left, cur.right}) {
      if (c == kNil) continue;
      if (node(c).parent != n) {
        why = "broken parent link at node " + std::to_string(c);
        return false;
      }
      if (cur.red && node(c).red) {
        why = "red node " + std::to_string(n) + " has red child " + std::to_string(c);
        return false;
      }
    }
    int lh = 0;
    int rh = 0;
    if (!audit_from(cur.left, lh, why) || !audit_from(cur.right, rh, why)) return false;
    if (lh != rh) {
      why = "unequal black height below node " + std::to_string(n);
      return false;
    }
    black_height = lh + (cur.red ? 0 : 1);
    return true;
  }

  std::vector<Node> nodes_;
  NodeId root_ = kNil;
};

}  // namespace adaptui
