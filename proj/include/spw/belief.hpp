#pragma once

// Belief propagation on the factor graph of a K-SAT instance.
//
// A belief is the cavity probability (p_T, p_F) that a variable is true or
// false once one of its clauses is removed; a warning is what a single clause
// tells one of its variables given the cavity beliefs of the other K-1.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "spw/instance.hpp"

namespace spw {

/// Unnormalized (T, F) weights. The product is componentwise, the norm the
/// component sum.
struct Vec2 {
  double t = 0.0;
  double f = 0.0;

  double norm() const noexcept { return t + f; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

Vec2 belief_product(Vec2 a, Vec2 b) noexcept;

struct Belief {
  double t = 0.5;
  double f = 0.5;

  /// Probability that the variable takes the value violating `lit`.
  double violating(const Literal& lit) const noexcept { return lit.negated ? t : f; }
  Vec2 vec() const noexcept { return {t, f}; }
  friend bool operator==(const Belief&, const Belief&) = default;
};

struct BeliefWarning {
  double t = 0.5;
  double f = 0.5;

  Vec2 vec() const noexcept { return {t, f}; }
  friend bool operator==(const BeliefWarning&, const BeliefWarning&) = default;
};

/// How a clause turns K-1 cavity beliefs into a warning. With q the
/// probability that every sender sits on its violating value:
///   paper            weight (1+q)/2 on the receiver's satisfying value, (1-q)/2 on the other
///   uniform_measure  weight 1 on the satisfying value, 1-q on the other, normalized
/// The second is the sum-product rule for the uniform measure over solutions;
/// the two coincide whenever q is 0 or 1.
enum class BpMode { paper, uniform_measure };

enum class Schedule { synchronous, random_sequential };

/// `cavity` holds the beliefs of the clause's other slots in slot order.
/// Throws InvalidParameters if `cavity.size() != clause.size() - 1`.
BeliefWarning clause_message(BpMode mode, Clause clause, std::size_t slot,
                             std::span<const Belief> cavity);

/// One belief per directed (variable, clause) edge, indexed by EdgeId.
/// Holds a reference to the instance, which must outlive the state.
class BeliefState {
 public:
  BeliefState(const Instance& instance, BpMode mode);

  const Instance& instance() const noexcept { return *instance_; }
  BpMode mode() const noexcept { return mode_; }

  std::span<const Belief> messages() const noexcept { return messages_; }
  std::span<Belief> messages() noexcept { return messages_; }
  const Belief& operator[](EdgeId e) const { return messages_[e]; }
  Belief& operator[](EdgeId e) { return messages_[e]; }

  std::size_t sweeps = 0;

 private:
  const Instance* instance_;
  BpMode mode_;
  std::vector<Belief> messages_;
};

/// Warning sent along edge `e` by its clause, computed from the state.
BeliefWarning incoming_warning(const BeliefState& state, EdgeId e);

/// Recomputed cavity belief for edge `e` from the warnings of the variable's
/// other clauses. Throws ContradictionError on a zero normalizer.
Belief edge_update(const BeliefState& state, EdgeId e);

/// Full marginal of `v` over all of its clauses.
Belief marginal(const BeliefState& state, VarId v);

struct BpOptions {
  BpMode mode = BpMode::paper;
  Schedule schedule = Schedule::random_sequential;
  double epsilon = 1e-6;
  std::size_t max_sweeps = 1000;
  /// new = damping * old + (1 - damping) * update.
  double damping = 0.0;
  std::uint64_t seed = 0;
};

struct BpResult {
  BeliefState state;
  bool converged = false;
  std::size_t sweeps = 0;
  /// Max |delta p_T| over edges, one entry per sweep.
  std::vector<double> residuals;
};

/// Iterates from i.i.d. uniform p_T drawn from the seed's init stream.
BpResult solve(const Instance& instance, const BpOptions& options);
/// Iterates from `initial`, which must belong to `instance` and share its mode.
BpResult solve(const Instance& instance, const BpOptions& options, BeliefState initial);

/// Per-instance entropy from a converged uniform_measure state:
///   S = sum_i log Z(i) - (K-1) sum_c log Z(c)
/// Z(i) is the norm of the product over all clauses of i of the warnings
/// scaled so the satisfying value has weight 1 (that is (1, 1-q)); Z(c) is
/// 1 - prod_j p_viol(j, c) over the cavity beliefs of the clause. With this
/// normalization S = log(#solutions) exactly on forests.
struct EntropyReport {
  double entropy = 0.0;
  std::vector<double> site_log_z;
  std::vector<double> clause_log_z;
};

EntropyReport entropy(const Instance& instance, const BeliefState& state);

/// One JSON object per line: {"variable", "clause", "p_T"}.
void write_messages_jsonl(std::ostream& out, const BeliefState& state);
/// Header `sweep,max_change`.
void write_residuals_csv(std::ostream& out, std::span<const double> residuals);

}  // namespace spw
