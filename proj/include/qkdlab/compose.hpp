#pragma once

// Composition budgets: pairwise composition, totals over a protocol tree,
// and the repeated-key-exchange chain in which each round authenticates
// with key from the previous one.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qkdlab/errors.hpp"

namespace qkdlab {

/// Compensated sum; the result does not depend on the order of `xs`
/// beyond rounding of the final correction, and is exact for small lists
/// of decimal budgets.
inline double neumaier_sum(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

inline double compose_pair(double eps_parent, double eps_sub) {
  if (!(eps_parent >= 0.0) || !(eps_sub >= 0.0) || !std::isfinite(eps_parent) || !std::isfinite(eps_sub)) {
    throw ValidationError("compose_pair needs finite non-negative epsilons");
  }
  return eps_parent + eps_sub;
}

struct TreeNodeSpec {
  std::string id;
  std::string name;
  double eps = 0.0;
  std::optional<std::string> parent;
};

class CompositionTree {
 public:
  struct Node {
    std::string name;
    double eps;
    std::vector<std::string> children;
  };

  /// Builds from parent references. Children keep input order.
  static CompositionTree from_parents(const std::vector<TreeNodeSpec>& specs) {
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& s : specs) {
      if (s.parent) children[*s.parent].push_back(s.id);
    }
    std::vector<std::pair<TreeNodeSpec, std::vector<std::string>>> full;
    for (const auto& s : specs) full.push_back({s, children[s.id]});
    for (const auto& [parent, kids] : children) {
      const bool known = std::any_of(specs.begin(), specs.end(), [&](const auto& s) { return s.id == parent; });
      if (!known) throw TreeError("node '" + kids.front() + "' names unknown parent '" + parent + "'");
    }
    return build(full);
  }

  /// Builds from explicit child lists; a node listed under two parents is a DAG and is rejected.
  static CompositionTree from_children(const std::vector<TreeNodeSpec>& specs,
                                       const std::map<std::string, std::vector<std::string>>& children) {
    std::vector<std::pair<TreeNodeSpec, std::vector<std::string>>> full;
    for (const auto& s : specs) {
      auto it = children.find(s.id);
      full.push_back({s, it == children.end() ? std::vector<std::string>{} : it->second});
    }
    return build(full);
  }

  const std::string& root() const { return root_; }
  const std::map<std::string, Node>& nodes() const { return nodes_; }
  const Node& node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw TreeError("unknown node '" + id + "'");
    return it->second;
  }
  std::size_t size() const { return nodes_.size(); }

  /// Same tree with the children of `id` in the given order.
  CompositionTree with_children_order(const std::string& id, std::vector<std::string> order) const {
    CompositionTree t = *this;
    auto& kids = t.nodes_.at(id).children;
    if (std::multiset<std::string>(order.begin(), order.end()) != std::multiset<std::string>(kids.begin(), kids.end())) {
      throw TreeError("reordering of '" + id + "' is not a permutation of its children");
    }
    kids = std::move(order);
    return t;
  }

  std::optional<std::string> parent_of(const std::string& id) const {
    for (const auto& [pid, n] : nodes_) {
      if (std::find(n.children.begin(), n.children.end(), id) != n.children.end()) return pid;
    }
    return std::nullopt;
  }

 private:
  static CompositionTree build(const std::vector<std::pair<TreeNodeSpec, std::vector<std::string>>>& full) {
    if (full.empty()) throw TreeError("empty composition tree");
    CompositionTree t;
    for (const auto& [s, kids] : full) {
      if (s.id.empty()) throw TreeError("node with empty id");
      if (!std::isfinite(s.eps) || s.eps < 0.0) throw TreeError("node '" + s.id + "' has invalid epsilon");
      if (!t.nodes_.emplace(s.id, Node{s.name.empty() ? s.id : s.name, s.eps, kids}).second) {
        throw TreeError("duplicate node id '" + s.id + "'");
      }
    }
    std::map<std::string, int> indegree;
    for (const auto& [id, n] : t.nodes_) {
      for (const auto& c : n.children) {
        if (!t.nodes_.count(c)) throw TreeError("node '" + id + "' lists unknown child '" + c + "'");
        if (++indegree[c] > 1) throw TreeError("node '" + c + "' has several parents; DAG inputs are not supported");
      }
    }
    std::vector<std::string> roots;
    for (const auto& [id, n] : t.nodes_) {
      if (!indegree.count(id)) roots.push_back(id);
    }
    if (roots.empty()) throw TreeError("composition structure is cyclic (no root)");
    if (roots.size() > 1) throw TreeError("composition structure has several roots: '" + roots[0] + "', '" + roots[1] + "'");
    t.root_ = roots.front();
    std::set<std::string> seen;
    std::vector<std::string> stack{t.root_};
    while (!stack.empty()) {
      const std::string id = stack.back();
      stack.pop_back();
      seen.insert(id);
      for (const auto& c : t.nodes_.at(id).children) stack.push_back(c);
    }
    if (seen.size() != t.nodes_.size()) {
      for (const auto& [id, n] : t.nodes_) {
        if (!seen.count(id)) throw TreeError("node '" + id + "' lies on a dependency cycle");
      }
    }
    return t;
  }

  std::map<std::string, Node> nodes_;
  std::string root_;
};

/// Sum of eps over all nodes.
inline double tree_total(const CompositionTree& t) {
  std::vector<double> xs;
  for (const auto& [id, n] : t.nodes()) xs.push_back(n.eps);
  return neumaier_sum(std::move(xs));
}

/// Folds leaves into their parents with compose_pair in the given order
/// until only the root is left. Every node except the root must appear
/// exactly once, and only when it has become a leaf.
inline double replacement_total(const CompositionTree& t, const std::vector<std::string>& schedule) {
  std::map<std::string, double> eps;
  std::map<std::string, std::size_t> open_children;
  for (const auto& [id, n] : t.nodes()) {
    eps[id] = n.eps;
    open_children[id] = n.children.size();
  }
  if (schedule.size() + 1 != t.size()) throw TreeError("replacement schedule must name every non-root node once");
  std::set<std::string> done;
  for (const auto& id : schedule) {
    if (id == t.root() || !done.insert(id).second) throw TreeError("invalid replacement of '" + id + "'");
    if (open_children.at(id) != 0) throw TreeError("node '" + id + "' replaced before its subprotocols");
    const auto parent = *t.parent_of(id);
    eps[parent] = compose_pair(eps[parent], eps[id]);
    --open_children[parent];
  }
  return eps.at(t.root());
}

struct RepeatedQkdBudget {
  double total;
  CompositionTree tree;
};

/// t rounds: kappa_i (eps_kappa) authenticates with alpha_i (eps_alpha),
/// which consumes key from kappa_{i-1}; kappa_0 is the initially shared key.
inline RepeatedQkdBudget repeated_qkd(int t, double eps_kappa, double eps_alpha) {
  if (t < 1) throw ValidationError("repeated_qkd needs t >= 1");
  if (!std::isfinite(eps_kappa) || !std::isfinite(eps_alpha) || eps_kappa < 0.0 || eps_alpha < 0.0) {
    throw ValidationError("repeated_qkd needs finite non-negative epsilons");
  }
  std::vector<TreeNodeSpec> specs;
  specs.push_back({"kappa_" + std::to_string(t), "QKD round " + std::to_string(t), eps_kappa, std::nullopt});
  for (int i = t; i >= 1; --i) {
    const std::string k = "kappa_" + std::to_string(i);
    const std::string a = "alpha_" + std::to_string(i);
    specs.push_back({a, "authentication " + std::to_string(i), eps_alpha, k});
    const std::string below = "kappa_" + std::to_string(i - 1);
    if (i > 1) {
      specs.push_back({below, "QKD round " + std::to_string(i - 1), eps_kappa, a});
    } else {
      specs.push_back({below, "initial shared key", 0.0, a});
    }
  }
  auto tree = CompositionTree::from_parents(specs);
  const double closed = t * (eps_kappa + eps_alpha);
  const double total = tree_total(tree);
  if (std::abs(total - closed) > 1e-12 * std::max(1.0, closed)) {
    throw NumericalError("repeated-QKD tree total disagrees with t(eps_kappa + eps_alpha)");
  }
  return {closed, std::move(tree)};
}

}  // namespace qkdlab
