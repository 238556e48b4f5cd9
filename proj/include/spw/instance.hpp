#pragma once

// Random K-SAT formulas and their factor graphs.
//
// Clauses are stored flat: clause c occupies literal slots [c*K, c*K + K).
// The same index doubles as the id of the directed edge between the clause
// and the variable in that slot, so every per-edge message array in the
// solvers is indexed by `EdgeId = c*K + slot`.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace spw {

using VarId = std::uint32_t;
using ClauseId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Literal {
  VarId var = 0;
  /// True when the literal is the negation of `var`; the clause is then
  /// satisfied by var = false.
  bool negated = false;

  bool satisfied_by(bool value) const noexcept { return value != negated; }
  friend bool operator==(const Literal&, const Literal&) = default;
};

using Clause = std::span<const Literal>;

/// Adjacency of the bipartite variable/clause graph in CSR form.
class FactorGraph {
 public:
  FactorGraph() = default;
  FactorGraph(std::size_t n_vars, std::span<const Literal> literals);

  /// Edges incident to `v`, in increasing clause order.
  std::span<const EdgeId> edges_of(VarId v) const {
    return {edges_.data() + offsets_[v], edges_.data() + offsets_[v + 1]};
  }
  std::size_t degree(VarId v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<EdgeId> edges_;
};

/// N variables and M clauses of exactly K literals over distinct variables.
class Instance {
 public:
  Instance() : Instance(0, 3, std::vector<Literal>{}) {}
  /// Throws InvalidParameters when a clause has the wrong arity, an out of
  /// range variable, or a repeated variable.
  Instance(std::size_t n_vars, std::size_t arity, std::vector<Literal> literals);
  Instance(std::size_t n_vars, std::size_t arity,
           const std::vector<std::vector<Literal>>& clauses);

  std::size_t n_vars() const noexcept { return n_vars_; }
  std::size_t n_clauses() const noexcept { return literals_.size() / arity_; }
  std::size_t arity() const noexcept { return arity_; }
  double alpha() const noexcept {
    return n_vars_ == 0 ? 0.0 : static_cast<double>(n_clauses()) / static_cast<double>(n_vars_);
  }

  Clause clause(ClauseId c) const { return {literals_.data() + c * arity_, arity_}; }
  std::span<const Literal> literals() const noexcept { return literals_; }
  const Literal& literal(EdgeId e) const { return literals_[e]; }

  static ClauseId clause_of(EdgeId e, std::size_t arity) {
    return static_cast<ClauseId>(e / arity);
  }
  ClauseId clause_of(EdgeId e) const { return clause_of(e, arity_); }
  std::size_t slot_of(EdgeId e) const { return e % arity_; }
  EdgeId edge(ClauseId c, std::size_t slot) const {
    return static_cast<EdgeId>(c * arity_ + slot);
  }

  const FactorGraph& graph() const noexcept { return graph_; }

  /// Same formula with variable `v` complemented in every clause.
  Instance with_flipped_variable(VarId v) const;

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n_vars_ == b.n_vars_ && a.arity_ == b.arity_ && a.literals_ == b.literals_;
  }

 private:
  std::size_t n_vars_;
  std::size_t arity_;
  std::vector<Literal> literals_;
  FactorGraph graph_;
};

struct Assignment {
  std::vector<bool> values;
};

/// M = round(alpha * n_vars) clauses; within a clause the variables are drawn
/// uniformly without replacement and each sign is a fair coin.
Instance generate_random_instance(std::size_t n_vars, double alpha, std::size_t arity,
                                  std::uint64_t seed);

/// A random instance whose factor graph is a forest: every new clause joins
/// K distinct connected components. Requires n_clauses*(arity-1) < n_vars.
Instance generate_random_acyclic(std::size_t n_vars, std::size_t n_clauses, std::size_t arity,
                                 std::uint64_t seed);

Instance parse_dimacs(std::istream& in);
Instance parse_dimacs(std::string_view text);
void write_dimacs(std::ostream& out, const Instance& instance);
std::string write_dimacs(const Instance& instance);

/// Number of clauses violated by `assignment`.
std::size_t evaluate(const Instance& instance, const Assignment& assignment);

/// Breadth-first layers of the variable graph (two variables adjacent iff
/// they share a clause). Element d-1 holds the variables at distance d.
std::vector<std::vector<VarId>> shells(const Instance& instance, VarId node, std::size_t depth);

/// Largest finite variable-to-variable distance over all pairs.
std::size_t variable_diameter(const Instance& instance);

struct CycleNode {
  bool is_clause = false;
  std::uint32_t id = 0;
  friend bool operator==(const CycleNode&, const CycleNode&) = default;
};

struct AcyclicityReport {
  bool acyclic = true;
  /// Alternating variable/clause nodes of one cycle; empty when acyclic.
  std::vector<CycleNode> cycle;
};

AcyclicityReport is_acyclic(const Instance& instance);

nlohmann::json summary_json(const Instance& instance, std::optional<std::uint64_t> seed);

}  // namespace spw
