#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gauge.hpp"
#include "oracles.hpp"
#include "spw/survey.hpp"

using namespace spw;

namespace {

Triple random_triple(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

void expect_near(const Triple& a, const Triple& b, double tol) {
  EXPECT_NEAR(a.t, b.t, tol);
  EXPECT_NEAR(a.i, b.i, tol);
  EXPECT_NEAR(a.f, b.f, tol);
}

SurveyState copy_state(const SurveyState& s) {
  SurveyState out(s.instance());
  std::copy(s.surveys().begin(), s.surveys().end(), out.surveys().begin());
  return out;
}

}  // namespace

TEST(SurveyAlgebra, ProductLaws) {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 10000; ++n) {
    const auto a = random_triple(rng), b = random_triple(rng), c = random_triple(rng);
    expect_near(survey_product(a, b), survey_product(b, a), 1e-12);
    expect_near(survey_product(survey_product(a, b), c), survey_product(a, survey_product(b, c)),
                1e-12);
    EXPECT_EQ(survey_product(a, kUnfrozen.vec()), a);
    EXPECT_EQ(survey_product(kUnfrozen.vec(), a), a);
  }
}

TEST(SurveyAlgebra, ClosedFormForAlignedWarnings) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    Triple acc = kUnfrozen.vec();
    double open = 1.0, only_i = 1.0;
    for (int k = 0; k < 1 + n % 9; ++k) {
      const auto w = survey_warning(Literal{0, false}, u(rng));
      acc = survey_product(acc, w.vec());
      open *= w.t + w.i;
      only_i *= w.i;
    }
    EXPECT_NEAR(acc.t, open - only_i, 1e-12);
    EXPECT_NEAR(acc.i, only_i, 1e-12);
    EXPECT_EQ(acc.f, 0.0);
  }
}

TEST(SurveyAlgebra, ClosedFormForMixedWarnings) {
  // T mass = prod_pos(u_T + u_I) prod_neg(u_I) - prod(u_I), and symmetrically for F.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 1000; ++n) {
    Triple acc = kUnfrozen.vec();
    double pos_open = 1.0, pos_i = 1.0, neg_open = 1.0, neg_i = 1.0;
    for (int k = 0; k < 1 + n % 7; ++k) {
      const bool negated = u(rng) < 0.5;
      const auto w = survey_warning(Literal{0, negated}, u(rng));
      acc = survey_product(acc, w.vec());
      if (negated) {
        neg_open *= w.f + w.i;
        neg_i *= w.i;
      } else {
        pos_open *= w.t + w.i;
        pos_i *= w.i;
      }
    }
    const double all_i = pos_i * neg_i;
    EXPECT_NEAR(acc.t, pos_open * neg_i - all_i, 1e-12);
    EXPECT_NEAR(acc.f, neg_open * pos_i - all_i, 1e-12);
    EXPECT_NEAR(acc.i, all_i, 1e-12);
  }
}

TEST(SurveyAlgebra, WarningsNeverMixTrueAndFalse) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 10000; ++n) {
    const auto w = survey_warning(Literal{0, n % 2 == 1}, u(rng));
    EXPECT_EQ(w.t * w.f, 0.0);
  }
  const auto inst = generate_random_instance(500, 4.2, 3, 1);
  const auto state = random_survey_state(inst, 2);
  for (EdgeId e = 0; e < inst.literals().size(); ++e) {
    const auto w = incoming_survey_warning(state, e);
    EXPECT_EQ(w.t * w.f, 0.0);
    EXPECT_NEAR(w.t + w.i + w.f, 1.0, 1e-15);
  }
}

TEST(SurveyAlgebra, ClauseSurveyHandComputed) {
  const std::vector<Literal> lits{{0, true}, {1, false}, {2, true}};
  const std::vector<Survey> cavity{{0.2, 0.5, 0.3}, {0.6, 0.3, 0.1}};
  const auto w = clause_survey(Clause(lits), 0, cavity);
  // Slot 1 positive, violated when frozen false; slot 2 negated, violated when frozen true.
  EXPECT_DOUBLE_EQ(w.f, 0.3 * 0.6);
  EXPECT_EQ(w.t, 0.0);
  EXPECT_DOUBLE_EQ(w.i, 1.0 - 0.3 * 0.6);
}

TEST(SurveyAlgebra, NormalizeRejectsZero) {
  EXPECT_THROW(normalize(Triple{0.0, 0.0, 0.0}, 4, 7), ContradictionError);
  try {
    normalize(Triple{0.0, 0.0, 0.0}, 4, 7);
  } catch (const ContradictionError& e) {
    EXPECT_EQ(e.variable(), 4u);
    EXPECT_EQ(e.clause(), 7u);
  }
  const auto s = normalize(Triple{1.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(s.i, 0.5);
}

TEST(SurveyAlgebra, RandomSimplexIsUniform) {
  auto rng = make_rng(1, Stream::init);
  double mean_t = 0.0, below = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const auto s = random_simplex_survey(rng);
    ASSERT_GE(s.t, 0.0);
    ASSERT_GE(s.i, 0.0);
    ASSERT_GE(s.f, 0.0);
    ASSERT_NEAR(s.t + s.i + s.f, 1.0, 1e-15);
    mean_t += s.t;
    below += s.i < 0.5;
  }
  // Marginal of a uniform simplex point is Beta(1, 2): mean 1/3, P(< 1/2) = 3/4.
  EXPECT_NEAR(mean_t / n, 1.0 / 3.0, 0.004);
  EXPECT_NEAR(below / n, 0.75, 0.004);
}

TEST(Sp, UnfrozenStateIsFixedPoint) {
  const auto inst = generate_random_instance(2000, 4.2, 3, 3);
  SurveyState init(inst);
  SpOptions o;
  o.seed = 1;
  const auto r = solve(inst, o, std::move(init));
  EXPECT_EQ(r.classification, SpClass::trivial);
  EXPECT_EQ(r.sweeps, 1u);
  EXPECT_EQ(r.state.residuals.front(), 0.0);
  for (const auto& s : r.state.surveys()) EXPECT_EQ(s, kUnfrozen);
}

TEST(Sp, LowDensityIsTrivial) {
  const auto inst = generate_random_instance(5000, 3.0, 3, 4);
  SpOptions o;
  o.seed = 4;
  o.epsilon = 1e-6;
  const auto r = solve(inst, o);
  EXPECT_EQ(r.classification, SpClass::trivial);
  EXPECT_LT(r.max_frozen, 1e-6);
  EXPECT_NEAR(complexity(inst, r.state).sigma_per_var, 0.0, 1e-9);
}

TEST(Sp, DeterministicForSeed) {
  const auto inst = generate_random_instance(2000, 4.2, 3, 6);
  SpOptions o;
  o.seed = 9;
  o.max_sweeps = 30;
  const auto a = solve(inst, o);
  const auto b = solve(inst, o);
  EXPECT_EQ(a.state.residuals, b.state.residuals);
  for (EdgeId e = 0; e < inst.literals().size(); ++e) ASSERT_EQ(a.state[e], b.state[e]);
}

TEST(Sp, MatchesTreeRecursionOnForests) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t k = 2 + seed % 3;
    const std::size_t n = 60;
    const auto inst = generate_random_acyclic(n, (n - 1) / (k - 1), k, seed);
    const auto exact = oracle::tree_surveys(inst);
    const auto diameter = variable_diameter(inst);
    for (auto schedule : {Schedule::synchronous, Schedule::random_sequential}) {
      SpOptions o;
      o.schedule = schedule;
      o.seed = seed;
      o.max_sweeps = diameter;
      o.epsilon = 1e-300;
      const auto r = solve(inst, o);
      for (EdgeId e = 0; e < exact.size(); ++e) {
        ASSERT_LT(oracle::l1(r.state[e], exact[e]), 1e-12) << "seed " << seed << " edge " << e;
      }
      // One more sweep changes nothing.
      o.max_sweeps = 1;
      const auto again = solve(inst, o, copy_state(r.state));
      EXPECT_EQ(again.state.residuals.front(), 0.0);
    }
  }
}

TEST(Sp, GaugeFlipIsEquivariant) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = generate_random_instance(1000, 4.2, 3, seed);
    std::mt19937_64 rng(seed);
    std::vector<bool> flipped(inst.n_vars());
    for (std::size_t v = 0; v < flipped.size(); ++v) flipped[v] = rng() & 1u;
    const auto other = gauge::flip(inst, flipped);
    const auto init = random_survey_state(inst, seed);
    SpOptions o;
    o.seed = seed;
    o.max_sweeps = 100;
    const auto a = solve(inst, o, copy_state(init));
    const auto b = solve(other, o, gauge::flip(init, other, flipped));
    EXPECT_EQ(a.state.residuals, b.state.residuals);
    EXPECT_EQ(a.classification, b.classification);
    const auto flipped_back = gauge::flip(b.state, inst, flipped);
    for (EdgeId e = 0; e < inst.literals().size(); ++e) ASSERT_EQ(a.state[e], flipped_back[e]);
    EXPECT_EQ(complexity(inst, a.state).sigma, complexity(other, b.state).sigma);
  }
}

TEST(Sp, ClauseNormAgreesAcrossMembers) {
  const auto inst = generate_random_instance(3000, 4.2, 3, 12);
  SpOptions o;
  o.seed = 12;
  const auto r = solve(inst, o);
  ASSERT_EQ(r.classification, SpClass::nontrivial);
  const auto report = complexity(inst, r.state);
  EXPECT_LT(report.clause_spread, 1e-14);
  EXPECT_GT(report.sigma_per_var, 0.0);
}

TEST(Sp, ValidatesOptions) {
  const auto inst = generate_random_instance(50, 3.0, 3, 1);
  SpOptions o;
  o.epsilon = 0.0;
  EXPECT_THROW(solve(inst, o), InvalidParameters);
  o.epsilon = 1e-3;
  o.damping = 1.0;
  EXPECT_THROW(solve(inst, o), InvalidParameters);
  const auto other = generate_random_instance(50, 3.0, 3, 2);
  o.damping = 0.0;
  EXPECT_THROW(solve(inst, o, SurveyState(other)), InvalidParameters);
}

TEST(Sp, ReportJson) {
  const auto inst = generate_random_instance(100, 2.0, 3, 1);
  SpOptions o;
  const auto r = solve(inst, o);
  const auto j = solve_report_json(r, nullptr);
  EXPECT_EQ(j["classification"], "trivial");
  EXPECT_TRUE(j["Sigma"].is_null());
  std::ostringstream out;
  write_surveys_jsonl(out, r.state);
  const auto line = out.str().substr(0, out.str().find('\n'));
  const auto parsed = nlohmann::json::parse(line);
  EXPECT_TRUE(parsed.contains("s_I"));
}
