#pragma once

// Survey propagation.
//
// A survey (s_T, s_I, s_F) is the probability, over clusters of solutions,
// that the cavity belief on a directed edge is frozen true, unfrozen, or
// frozen false. Clauses send warnings (u_T, u_I, u_F) with u_T * u_F == 0:
// a clause can only ever force its receiver towards the value that satisfies
// it.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spw/belief.hpp"
#include "spw/error.hpp"
#include "spw/instance.hpp"
#include "spw/rng.hpp"

namespace spw {

/// Unnormalized (T, I, F) weights.
struct Triple {
  double t = 0.0;
  double i = 0.0;
  double f = 0.0;

  /// Summed as (t + f) + i so that swapping t and f leaves it bit-identical.
  double norm() const noexcept { return (t + f) + i; }
  friend bool operator==(const Triple&, const Triple&) = default;
};

/// (a_T b_T + a_I b_T + a_T b_I, a_I b_I, a_F b_F + a_I b_F + a_F b_I).
/// Mixed T/F mass is dropped; (0, 1, 0) is the identity.
inline Triple survey_product(const Triple& a, const Triple& b) noexcept {
  return {a.t * b.t + a.i * b.t + a.t * b.i, a.i * b.i, a.f * b.f + a.i * b.f + a.f * b.i};
}

struct Survey {
  double t = 0.0;
  double i = 1.0;
  double f = 0.0;

  Triple vec() const noexcept { return {t, i, f}; }
  double frozen() const noexcept { return t + f; }
  /// Probability of being frozen onto the value that violates `lit`.
  double violating(const Literal& lit) const noexcept {
    // Signs are typically coin flips; indexing avoids a mispredicted branch.
    const double by_sign[2] = {f, t};
    return by_sign[lit.negated];
  }
  friend bool operator==(const Survey&, const Survey&) = default;
};

struct SurveyWarning {
  double t = 0.0;
  double i = 1.0;
  double f = 0.0;

  Triple vec() const noexcept { return {t, i, f}; }
  friend bool operator==(const SurveyWarning&, const SurveyWarning&) = default;
};

inline constexpr Survey kUnfrozen{0.0, 1.0, 0.0};

/// Throws ContradictionError when the norm is zero. `var`/`clause` only
/// label the error.
Survey normalize(const Triple& v, std::size_t var = ContradictionError::npos,
                 std::size_t clause = ContradictionError::npos);

/// Warning for a receiver whose literal is `receiver`, given the product `w`
/// of the senders' frozen-violating probabilities.
/// (w, 1-w, 0) for a positive receiver, (0, 1-w, w) for a negated one.
inline SurveyWarning survey_warning(const Literal& receiver, double w) noexcept {
  const double neg = receiver.negated ? 1.0 : 0.0;
  return {w * (1.0 - neg), 1.0 - w, w * neg};
}

/// `cavity` holds the surveys of the clause's other slots in slot order.
SurveyWarning clause_survey(Clause clause, std::size_t slot, std::span<const Survey> cavity);

/// One survey per directed edge. References the instance, which must outlive it.
class SurveyState {
 public:
  explicit SurveyState(const Instance& instance);

  const Instance& instance() const noexcept { return *instance_; }
  std::span<const Survey> surveys() const noexcept { return surveys_; }
  std::span<Survey> surveys() noexcept { return surveys_; }
  const Survey& operator[](EdgeId e) const { return surveys_[e]; }
  Survey& operator[](EdgeId e) { return surveys_[e]; }

  std::size_t sweeps = 0;
  std::vector<double> residuals;

 private:
  const Instance* instance_;
  std::vector<Survey> surveys_;
};

/// A uniform point on the simplex, from two sorted uniforms.
Survey random_simplex_survey(Rng& rng);

/// Uniform-simplex surveys from the seed's init stream.
SurveyState random_survey_state(const Instance& instance, std::uint64_t seed);

SurveyWarning incoming_survey_warning(const SurveyState& state, EdgeId e);
Survey edge_update(const SurveyState& state, EdgeId e);
Survey local_survey(const SurveyState& state, VarId v);

enum class SpClass { trivial, nontrivial, non_convergent };
std::string to_string(SpClass c);

struct SpOptions {
  Schedule schedule = Schedule::random_sequential;
  /// Convergence: max over edges of the L1 change of the survey in a sweep.
  double epsilon = 1e-3;
  std::size_t max_sweeps = 1000;
  double damping = 0.0;
  std::uint64_t seed = 0;
  /// A converged state is trivial when every edge has s_T + s_F below this.
  /// Defaults to epsilon when zero.
  double trivial_threshold = 0.0;
};

struct SpResult {
  SpClass classification = SpClass::non_convergent;
  SurveyState state;
  std::size_t sweeps = 0;
  /// Fraction of edges with s_T + s_F at or above the trivial threshold.
  double frozen_fraction = 0.0;
  double max_frozen = 0.0;
};

SpResult solve(const Instance& instance, const SpOptions& options);
SpResult solve(const Instance& instance, const SpOptions& options, SurveyState initial);

/// Sigma = sum_i log Z(i) - (K-1) sum_c log Z(c), with Z(i) the norm of the
/// product of all warnings at i and Z(c) = |s(i,c) . u(i,c)| for a variable i
/// of c. The latter equals 1 - prod_j s_viol(j,c) whichever i is picked, so
/// `clause_spread` (max over clauses of the spread between the K choices) is
/// a rounding-level consistency check.
struct ComplexityReport {
  double sigma = 0.0;
  double sigma_per_var = 0.0;
  std::vector<double> site_log_z;
  std::vector<double> clause_log_z;
  double clause_spread = 0.0;
};

ComplexityReport complexity(const Instance& instance, const SurveyState& state);

/// One JSON object per line: {"variable", "clause", "s_T", "s_I", "s_F"}.
void write_surveys_jsonl(std::ostream& out, const SurveyState& state);

nlohmann::json solve_report_json(const SpResult& result, const ComplexityReport* sigma);

}  // namespace spw
