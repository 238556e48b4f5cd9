#include "spw/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "cavity.hpp"
#include "spw/error.hpp"
#include "spw/rng.hpp"

namespace spw {

Vec2 belief_product(Vec2 a, Vec2 b) noexcept { return {a.t * b.t, a.f * b.f}; }

namespace {

/// Warning from the product q of sender violation probabilities, oriented by
/// the receiving literal.
BeliefWarning warning_from_q(BpMode mode, const Literal& receiver, double q) {
  double sat = 0.0;
  double other = 0.0;
  if (mode == BpMode::paper) {
    sat = (1.0 + q) / 2.0;
    other = (1.0 - q) / 2.0;
  } else {
    const double z = 2.0 - q;
    sat = 1.0 / z;
    other = (1.0 - q) / z;
  }
  return receiver.negated ? BeliefWarning{other, sat} : BeliefWarning{sat, other};
}

/// q for the clause of edge `e`: product over the other slots of the
/// probability of sitting on the violating value.
double violation_product(const BeliefState& state, EdgeId e) {
  const auto& inst = state.instance();
  const auto c = inst.clause_of(e);
  const auto slot = inst.slot_of(e);
  double q = 1.0;
  for (std::size_t k = 0; k < inst.arity(); ++k) {
    if (k == slot) continue;
    const auto other = inst.edge(c, k);
    q *= state[other].violating(inst.literal(other));
  }
  return q;
}

Belief normalize_belief(Vec2 v, VarId var, std::size_t clause) {
  const double z = v.norm();
  if (!(z > 0.0)) {
    throw ContradictionError(var, clause,
                             "zero-norm belief product at variable " + std::to_string(var));
  }
  return {v.t / z, v.f / z};
}

}  // namespace

BeliefWarning clause_message(BpMode mode, Clause clause, std::size_t slot,
                             std::span<const Belief> cavity) {
  if (slot >= clause.size()) throw InvalidParameters("slot out of range");
  if (cavity.size() + 1 != clause.size()) {
    throw InvalidParameters("expected " + std::to_string(clause.size() - 1) +
                            " cavity beliefs, got " + std::to_string(cavity.size()));
  }
  double q = 1.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < clause.size(); ++k) {
    if (k == slot) continue;
    q *= cavity[next++].violating(clause[k]);
  }
  return warning_from_q(mode, clause[slot], q);
}

BeliefState::BeliefState(const Instance& instance, BpMode mode)
    : instance_(&instance), mode_(mode), messages_(instance.literals().size()) {}

BeliefWarning incoming_warning(const BeliefState& state, EdgeId e) {
  return warning_from_q(state.mode(), state.instance().literal(e), violation_product(state, e));
}

Belief edge_update(const BeliefState& state, EdgeId e) {
  const auto& inst = state.instance();
  const auto var = inst.literal(e).var;
  Vec2 acc{1.0, 1.0};
  for (auto d : inst.graph().edges_of(var)) {
    if (d == e) continue;
    acc = belief_product(acc, incoming_warning(state, d).vec());
  }
  return normalize_belief(acc, var, inst.clause_of(e));
}

Belief marginal(const BeliefState& state, VarId v) {
  Vec2 acc{1.0, 1.0};
  for (auto d : state.instance().graph().edges_of(v)) {
    acc = belief_product(acc, incoming_warning(state, d).vec());
  }
  return normalize_belief(acc, v, ContradictionError::npos);
}

BpResult solve(const Instance& instance, const BpOptions& options) {
  BeliefState init(instance, options.mode);
  auto rng = make_rng(options.seed, Stream::init);
  for (auto& m : init.messages()) {
    m.t = uniform01(rng);
    m.f = 1.0 - m.t;
  }
  return solve(instance, options, std::move(init));
}

BpResult solve(const Instance& instance, const BpOptions& options, BeliefState initial) {
  if (!(options.epsilon > 0.0)) throw InvalidParameters("epsilon must be positive");
  if (!(options.damping >= 0.0 && options.damping < 1.0)) {
    throw InvalidParameters("damping must lie in [0, 1)");
  }
  if (&initial.instance() != &instance || initial.mode() != options.mode) {
    throw InvalidParameters("initial state does not match the instance or mode");
  }

  BpResult result{std::move(initial), false, 0, {}};
  auto& state = result.state;
  const std::size_t n = instance.n_vars();
  std::vector<VarId> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto schedule_rng = make_rng(options.seed, Stream::schedule);

  // Synchronous sweeps read from a frozen copy of the previous sweep.
  BeliefState previous = state;
  std::vector<Vec2> warnings, prefix, cavity;

  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const bool sync = options.schedule == Schedule::synchronous;
    if (sync) {
      previous = state;
    } else {
      std::shuffle(order.begin(), order.end(), schedule_rng);
    }
    const BeliefState& source = sync ? previous : state;
    double residual = 0.0;

    for (auto var : order) {
      const auto edges = instance.graph().edges_of(var);
      warnings.clear();
      for (auto d : edges) warnings.push_back(incoming_warning(source, d).vec());
      detail::leave_one_out<Vec2>(warnings, Vec2{1.0, 1.0}, belief_product, prefix, cavity);
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto e = edges[k];
        auto updated = normalize_belief(cavity[k], var, instance.clause_of(e));
        auto& slot = state[e];
        if (options.damping > 0.0) {
          updated.t = options.damping * slot.t + (1.0 - options.damping) * updated.t;
          updated.f = 1.0 - updated.t;
        }
        residual = std::max(residual, std::abs(updated.t - slot.t));
        slot = updated;
      }
    }
    ++state.sweeps;
    result.sweeps = sweep;
    result.residuals.push_back(residual);
    if (residual < options.epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

EntropyReport entropy(const Instance& instance, const BeliefState& state) {
  if (state.mode() != BpMode::uniform_measure) {
    throw InvalidParameters("entropy requires a uniform_measure state");
  }
  EntropyReport report;
  report.site_log_z.resize(instance.n_vars());
  report.clause_log_z.resize(instance.n_clauses());
  double site_sum = 0.0;
  for (VarId v = 0; v < instance.n_vars(); ++v) {
    Vec2 acc{1.0, 1.0};
    for (auto d : instance.graph().edges_of(v)) {
      const double q = violation_product(state, d);
      const Vec2 u = instance.literal(d).negated ? Vec2{1.0 - q, 1.0} : Vec2{1.0, 1.0 - q};
      acc = belief_product(acc, u);
    }
    const double z = acc.norm();
    if (!(z > 0.0)) {
      throw ContradictionError(v, ContradictionError::npos, "site norm Z(i) is zero");
    }
    report.site_log_z[v] = std::log(z);
    site_sum += report.site_log_z[v];
  }
  double clause_sum = 0.0;
  for (ClauseId c = 0; c < instance.n_clauses(); ++c) {
    double q = 1.0;
    for (std::size_t k = 0; k < instance.arity(); ++k) {
      const auto e = instance.edge(c, k);
      q *= state[e].violating(instance.literal(e));
    }
    const double z = 1.0 - q;
    if (!(z > 0.0)) {
      throw ContradictionError(instance.clause(c)[0].var, c, "clause norm Z(c) is zero");
    }
    report.clause_log_z[c] = std::log(z);
    clause_sum += report.clause_log_z[c];
  }
  report.entropy = site_sum - static_cast<double>(instance.arity() - 1) * clause_sum;
  return report;
}

void write_messages_jsonl(std::ostream& out, const BeliefState& state) {
  const auto& inst = state.instance();
  for (EdgeId e = 0; e < state.messages().size(); ++e) {
    out << nlohmann::json{{"variable", inst.literal(e).var},
                          {"clause", inst.clause_of(e)},
                          {"p_T", state[e].t}}
               .dump()
        << '\n';
  }
}

void write_residuals_csv(std::ostream& out, std::span<const double> residuals) {
  out << "sweep,max_change\n";
  char buf[64];
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", residuals[k]);
    out << k + 1 << ',' << buf << '\n';
  }
}

}  // namespace spw
