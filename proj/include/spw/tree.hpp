#pragma once

// Depth-k truncations of the infinite tree rooted at a variable, and
// boundary-condition experiments on them.
//
// Every tree node maps to an instance variable. A node at depth d < k gets one
// clause replica per clause of its variable other than the one it hangs from,
// and each replica brings K-1 fresh child nodes. Signs are copied from the
// original clause, so the neighbourhood of every expanded node looks exactly
// like that of its variable.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spw/instance.hpp"
#include "spw/survey.hpp"

namespace spw {

using NodeId = std::uint32_t;
using ReplicaId = std::uint32_t;

inline constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct TreeNode {
  VarId mapped_var = 0;
  /// Clause replica this node hangs from; kNone for the root.
  ReplicaId parent = kNone;
  std::uint32_t depth = 0;
  /// Child replicas occupy [first_child, first_child + n_children).
  ReplicaId first_child = 0;
  std::uint32_t n_children = 0;
};

struct ClauseReplica {
  ClauseId original = 0;
  NodeId parent = 0;
  /// Slot of the parent node in the original clause.
  std::uint32_t parent_slot = 0;
  /// The K-1 child nodes, in slot order with parent_slot skipped.
  NodeId first_child = 0;
};

class RootedTree {
 public:
  const Instance& instance() const noexcept { return *instance_; }
  VarId root_var() const noexcept { return nodes_.front().mapped_var; }
  std::size_t k_max() const noexcept { return k_max_; }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  std::span<const ClauseReplica> replicas() const noexcept { return replicas_; }
  const TreeNode& node(NodeId id) const { return nodes_[id]; }
  const ClauseReplica& replica(ReplicaId id) const { return replicas_[id]; }
  /// Nodes of depth d occupy [shell_begin(d), shell_begin(d + 1)).
  NodeId shell_begin(std::size_t depth) const { return shells_[depth]; }
  std::size_t shell_size(std::size_t depth) const { return shells_[depth + 1] - shells_[depth]; }

  /// Number of clauses of `node`'s variable other than its parent's original.
  std::size_t open_clauses(NodeId node) const;
  /// Nodes at `depth` (1 <= depth <= k_max) whose variable has clauses the
  /// truncation cuts off. Their survey towards the parent is the boundary.
  std::vector<NodeId> hanging_nodes(std::size_t depth) const;

 private:
  friend RootedTree unroll(const Instance&, VarId, std::size_t, std::size_t);

  const Instance* instance_ = nullptr;
  std::size_t k_max_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<ClauseReplica> replicas_;
  std::vector<NodeId> shells_;
};

inline constexpr std::size_t kDefaultNodeCap = 10'000'000;

/// Exact node count per depth 0..k_max, computed by counting non-backtracking
/// walks on the factor graph (as doubles, so huge depths do not overflow).
std::vector<double> unrolled_shell_sizes(const Instance& instance, VarId root, std::size_t k_max);

/// Throws ResourceLimit (with the node count) above `node_cap`. The instance
/// must outlive the tree.
RootedTree unroll(const Instance& instance, VarId root, std::size_t k_max,
                  std::size_t node_cap = kDefaultNodeCap);

/// One survey per hanging node of the truncation depth, in hanging_nodes order.
struct BoundaryCondition {
  std::vector<Survey> surveys;
};

BoundaryCondition uniform_boundary(const RootedTree& tree, std::size_t depth, Survey value);
BoundaryCondition random_boundary(const RootedTree& tree, std::size_t depth, Rng& rng);

struct InwardResult {
  Survey root;
  /// Survey each node sends to its parent replica (entry 0 is the root's
  /// local survey). Nodes deeper than the truncation hold kUnfrozen.
  std::vector<Survey> node_surveys;
  /// Messages computed; equals K times the replicas within the truncation.
  std::size_t edge_touches = 0;
};

/// Single leaf-to-root pass on the tree truncated at `depth` (<= k_max).
/// Throws ContradictionError naming the node's variable and original clause.
InwardResult propagate_inward(const RootedTree& tree, const BoundaryCondition& boundary,
                              std::size_t depth);
InwardResult propagate_inward(const RootedTree& tree, const BoundaryCondition& boundary);

struct DispersionRow {
  std::size_t k = 0;
  /// Pairwise L1 distances between root surveys of successful boundaries.
  double mean_dist = 0.0;
  double max_dist = 0.0;
  std::size_t n_boundaries = 0;
  std::size_t contradictions = 0;
  /// Component-wise average of the root surveys.
  Survey mean_root;
};

struct ProbeResult {
  std::vector<DispersionRow> rows;
};

/// Boundary b at depth k is drawn from make_rng(boundary_seeds[b], boundary, k),
/// so equal seeds give equal boundaries.
ProbeResult uniqueness_probe(const RootedTree& tree, std::span<const std::uint64_t> boundary_seeds);
/// Seeds are derived from `seed`; n_boundaries >= 2.
ProbeResult uniqueness_probe(const RootedTree& tree, std::size_t n_boundaries, std::uint64_t seed);

struct ComparisonRow {
  std::size_t k = 0;
  double distance = 0.0;
};

/// L1 distance between each row's mean root survey and local_survey(root) of
/// a converged instance solution.
std::vector<ComparisonRow> compare_with_instance(const ProbeResult& probe, const SpResult& sp,
                                                 VarId root);

struct IsomorphismReport {
  bool ok = true;
  std::string detail;
};

/// Every node at depth < k_max sees the same multiset of (clause, slot) pairs
/// as its variable, and replicas carry their original's variables slot by slot.
IsomorphismReport check_local_isomorphism(const RootedTree& tree);

/// For an acyclic instance: every variable and clause of the root's component
/// appears exactly once and the tree is fully expanded.
IsomorphismReport check_instance_isomorphism(const RootedTree& tree);

/// One JSON object per line: {"node", "mapped_var", "parent_clause", "depth"}.
void write_tree_jsonl(std::ostream& out, const RootedTree& tree);
/// k,mean_dist,max_dist,n_boundaries
void write_dispersion_csv(std::ostream& out, const ProbeResult& probe);

}  // namespace spw
