#pragma once

// T <-> F relabelling of a subset of variables, applied to an instance and to
// a survey state on it.

#include <vector>

#include "spw/instance.hpp"
#include "spw/survey.hpp"

namespace gauge {

inline spw::Instance flip(const spw::Instance& inst, const std::vector<bool>& flipped) {
  std::vector<spw::Literal> lits(inst.literals().begin(), inst.literals().end());
  for (auto& lit : lits) lit.negated = lit.negated != flipped[lit.var];
  return spw::Instance(inst.n_vars(), inst.arity(), std::move(lits));
}

/// Copies `from` into a state on `target`, swapping s_T and s_F on flipped variables.
inline spw::SurveyState flip(const spw::SurveyState& from, const spw::Instance& target,
                             const std::vector<bool>& flipped) {
  spw::SurveyState out(target);
  for (spw::EdgeId e = 0; e < from.surveys().size(); ++e) {
    const auto& s = from[e];
    out[e] = flipped[target.literal(e).var] ? spw::Survey{s.f, s.i, s.t} : s;
  }
  return out;
}

}  // namespace gauge
