#include "spw/survey.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "cavity.hpp"
#include "spw/error.hpp"
#include "spw/rng.hpp"

namespace spw {

Survey normalize(const Triple& v, std::size_t var, std::size_t clause) {
  const double z = v.norm();
  if (!(z > 0.0)) {
    throw ContradictionError(var, clause,
                             var == ContradictionError::npos
                                 ? std::string("zero-norm survey product")
                                 : "zero-norm survey product at variable " + std::to_string(var));
  }
  return {v.t / z, v.i / z, v.f / z};
}

SurveyWarning clause_survey(Clause clause, std::size_t slot, std::span<const Survey> cavity) {
  if (slot >= clause.size()) throw InvalidParameters("slot out of range");
  if (cavity.size() + 1 != clause.size()) {
    throw InvalidParameters("expected " + std::to_string(clause.size() - 1) +
                            " cavity surveys, got " + std::to_string(cavity.size()));
  }
  double w = 1.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < clause.size(); ++k) {
    if (k == slot) continue;
    w *= cavity[next++].violating(clause[k]);
  }
  return survey_warning(clause[slot], w);
}

SurveyState::SurveyState(const Instance& instance)
    : instance_(&instance), surveys_(instance.literals().size(), kUnfrozen) {}

Survey random_simplex_survey(Rng& rng) {
  double a = uniform01(rng);
  double b = uniform01(rng);
  if (a > b) std::swap(a, b);
  return {a, b - a, 1.0 - b};
}

SurveyState random_survey_state(const Instance& instance, std::uint64_t seed) {
  SurveyState state(instance);
  auto rng = make_rng(seed, Stream::init);
  for (auto& s : state.surveys()) s = random_simplex_survey(rng);
  return state;
}

SurveyWarning incoming_survey_warning(const SurveyState& state, EdgeId e) {
  const auto& inst = state.instance();
  const std::size_t k = inst.arity();
  const EdgeId first = e - e % static_cast<EdgeId>(k);
  double w = 1.0;
  for (EdgeId other = first; other < first + k; ++other) {
    w *= other == e ? 1.0 : state[other].violating(inst.literal(other));
  }
  return survey_warning(inst.literal(e), w);
}

Survey edge_update(const SurveyState& state, EdgeId e) {
  const auto& inst = state.instance();
  const auto var = inst.literal(e).var;
  Triple acc = kUnfrozen.vec();
  for (auto d : inst.graph().edges_of(var)) {
    if (d == e) continue;
    acc = survey_product(acc, incoming_survey_warning(state, d).vec());
  }
  return normalize(acc, var, inst.clause_of(e));
}

Survey local_survey(const SurveyState& state, VarId v) {
  Triple acc = kUnfrozen.vec();
  for (auto d : state.instance().graph().edges_of(v)) {
    acc = survey_product(acc, incoming_survey_warning(state, d).vec());
  }
  return normalize(acc, v);
}

std::string to_string(SpClass c) {
  switch (c) {
    case SpClass::trivial:
      return "trivial";
    case SpClass::nontrivial:
      return "nontrivial";
    case SpClass::non_convergent:
      return "non-convergent";
  }
  return "unknown";
}

namespace {

// Sweeps visit variables in random order, so the clauses they touch are
// scattered; fetching a few variables ahead hides most of the latency.
constexpr std::size_t kLookahead = 8;

void prefetch_variable(const Instance& instance, const SurveyState& state, VarId var) {
  for (auto e : instance.graph().edges_of(var)) {
    const auto first = instance.edge(instance.clause_of(e), 0);
    // A clause's surveys span 72 bytes, which may straddle two cache lines.
    __builtin_prefetch(&state[first]);
    __builtin_prefetch(&state[first + 2]);
    __builtin_prefetch(&instance.literal(first));
  }
}

struct Workspace {
  std::vector<Triple> warnings, prefix, cavity;
};

/// One pass over `order`, reading from `source` and writing to `target` (the
/// same object for sequential sweeps). Returns the largest L1 change.
/// Surveys leaving one variable depend only on other variables' surveys, so
/// updating all edges of a variable at once is a valid sequential order.
/// Arity is a template parameter for the common K = 3; 0 means runtime.
template <std::size_t Arity>
double sweep_variables(const Instance& instance, std::span<const VarId> order,
                       const SurveyState& source, SurveyState& target, double damping,
                       Workspace& ws) {
  const auto k = static_cast<EdgeId>(Arity == 0 ? instance.arity() : Arity);
  const auto product = [](const Triple& a, const Triple& b) { return survey_product(a, b); };
  const auto literals = instance.literals();
  double residual = 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos + kLookahead < order.size()) prefetch_variable(instance, source, order[pos + kLookahead]);
    const auto var = order[pos];
    const auto edges = instance.graph().edges_of(var);
    ws.warnings.clear();
    for (auto d : edges) {
      const EdgeId first = d - d % k;
      double w = 1.0;
      for (EdgeId other = first; other < first + k; ++other) {
        w *= other == d ? 1.0 : source[other].violating(literals[other]);
      }
      ws.warnings.push_back(survey_warning(literals[d], w).vec());
    }
    detail::leave_one_out<Triple>(ws.warnings, kUnfrozen.vec(), product, ws.prefix, ws.cavity);
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const auto e = edges[j];
      const Triple& c = ws.cavity[j];
      const double z = c.norm();
      if (!(z > 0.0)) normalize(c, var, instance.clause_of(e));  // throws
      Survey updated{c.t / z, c.i / z, c.f / z};
      auto& slot = target[e];
      if (damping > 0.0) {
        updated = normalize({damping * slot.t + (1.0 - damping) * updated.t,
                             damping * slot.i + (1.0 - damping) * updated.i,
                             damping * slot.f + (1.0 - damping) * updated.f});
      }
      const double change = (std::abs(updated.t - slot.t) + std::abs(updated.f - slot.f)) +
                            std::abs(updated.i - slot.i);
      residual = std::max(residual, change);
      slot = updated;
    }
  }
  return residual;
}

}  // namespace

SpResult solve(const Instance& instance, const SpOptions& options) {
  return solve(instance, options, random_survey_state(instance, options.seed));
}

SpResult solve(const Instance& instance, const SpOptions& options, SurveyState initial) {
  if (!(options.epsilon > 0.0)) throw InvalidParameters("epsilon must be positive");
  if (!(options.damping >= 0.0 && options.damping < 1.0)) {
    throw InvalidParameters("damping must lie in [0, 1)");
  }
  if (&initial.instance() != &instance) {
    throw InvalidParameters("initial state belongs to a different instance");
  }

  SpResult result{SpClass::non_convergent, std::move(initial), 0, 0.0, 0.0};
  auto& state = result.state;
  std::vector<VarId> order(instance.n_vars());
  std::iota(order.begin(), order.end(), 0);
  auto schedule_rng = make_rng(options.seed, Stream::schedule);
  const bool sync = options.schedule == Schedule::synchronous;
  SurveyState previous = sync ? state : SurveyState(instance);
  Workspace ws;
  bool converged = false;

  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    if (sync) {
      std::copy(state.surveys().begin(), state.surveys().end(), previous.surveys().begin());
    } else {
      std::shuffle(order.begin(), order.end(), schedule_rng);
    }
    const SurveyState& source = sync ? previous : state;

    const double residual = instance.arity() == 3
                                ? sweep_variables<3>(instance, order, source, state, options.damping, ws)
                                : sweep_variables<0>(instance, order, source, state, options.damping, ws);
    ++state.sweeps;
    state.residuals.push_back(residual);
    result.sweeps = sweep;
    if (residual < options.epsilon) {
      converged = true;
      break;
    }
  }

  const double threshold =
      options.trivial_threshold > 0.0 ? options.trivial_threshold : options.epsilon;
  std::size_t frozen_edges = 0;
  for (const auto& s : state.surveys()) {
    result.max_frozen = std::max(result.max_frozen, s.frozen());
    if (s.frozen() >= threshold) ++frozen_edges;
  }
  result.frozen_fraction =
      state.surveys().empty()
          ? 0.0
          : static_cast<double>(frozen_edges) / static_cast<double>(state.surveys().size());
  if (converged) {
    result.classification =
        result.max_frozen < threshold ? SpClass::trivial : SpClass::nontrivial;
  }
  return result;
}

ComplexityReport complexity(const Instance& instance, const SurveyState& state) {
  ComplexityReport report;
  report.site_log_z.resize(instance.n_vars());
  report.clause_log_z.resize(instance.n_clauses());

  double site_sum = 0.0;
  for (VarId v = 0; v < instance.n_vars(); ++v) {
    Triple acc = kUnfrozen.vec();
    for (auto d : instance.graph().edges_of(v)) {
      acc = survey_product(acc, incoming_survey_warning(state, d).vec());
    }
    const double z = acc.norm();
    if (!(z > 0.0)) throw ContradictionError(v, ContradictionError::npos, "site norm Z(i) is zero");
    report.site_log_z[v] = std::log(z);
    site_sum += report.site_log_z[v];
  }

  double clause_sum = 0.0;
  for (ClauseId c = 0; c < instance.n_clauses(); ++c) {
    double lo = 0.0, hi = 0.0, first = 0.0;
    for (std::size_t k = 0; k < instance.arity(); ++k) {
      const auto e = instance.edge(c, k);
      const double z = survey_product(state[e].vec(), incoming_survey_warning(state, e).vec()).norm();
      if (!(z > 0.0)) {
        throw ContradictionError(instance.literal(e).var, c, "clause norm Z(c) is zero");
      }
      if (k == 0) {
        first = lo = hi = z;
      } else {
        lo = std::min(lo, z);
        hi = std::max(hi, z);
      }
    }
    report.clause_spread = std::max(report.clause_spread, hi - lo);
    report.clause_log_z[c] = std::log(first);
    clause_sum += report.clause_log_z[c];
  }

  report.sigma = site_sum - static_cast<double>(instance.arity() - 1) * clause_sum;
  report.sigma_per_var =
      instance.n_vars() == 0 ? 0.0 : report.sigma / static_cast<double>(instance.n_vars());
  return report;
}

void write_surveys_jsonl(std::ostream& out, const SurveyState& state) {
  const auto& inst = state.instance();
  for (EdgeId e = 0; e < state.surveys().size(); ++e) {
    const auto& s = state[e];
    out << nlohmann::json{{"variable", inst.literal(e).var},
                          {"clause", inst.clause_of(e)},
                          {"s_T", s.t},
                          {"s_I", s.i},
                          {"s_F", s.f}}
               .dump()
        << '\n';
  }
}

nlohmann::json solve_report_json(const SpResult& result, const ComplexityReport* sigma) {
  nlohmann::json j{{"classification", to_string(result.classification)},
                   {"sweeps", result.sweeps},
                   {"residuals", result.state.residuals},
                   {"frozen_fraction", result.frozen_fraction},
                   {"max_frozen", result.max_frozen}};
  if (sigma != nullptr) {
    j["Sigma"] = sigma->sigma;
    j["Sigma_per_N"] = sigma->sigma_per_var;
    j["clause_spread"] = sigma->clause_spread;
  } else {
    j["Sigma"] = nullptr;
    j["Sigma_per_N"] = nullptr;
  }
  return j;
}

}  // namespace spw
