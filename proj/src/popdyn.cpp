#include "spw/popdyn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "spw/error.hpp"

namespace spw {

DrawTape draw_tape(Rng& rng, std::size_t population_size, std::size_t members, double alpha,
                   std::size_t arity) {
  DrawTape tape;
  draw_tape(rng, population_size, members, alpha, arity, tape);
  return tape;
}

void draw_tape(Rng& rng, std::size_t population_size, std::size_t members, double alpha,
               std::size_t arity, DrawTape& tape) {
  tape.arity = arity;
  tape.offsets.assign(1, 0);
  tape.senders.clear();
  tape.signs.clear();
  tape.offsets.reserve(members + 1);
  const double mean_degree = static_cast<double>(arity) * alpha;
  const auto expected = static_cast<std::size_t>(mean_degree * static_cast<double>(members) * 1.05) + 16;
  tape.senders.reserve(expected * (arity - 1));
  tape.signs.reserve(expected * arity);
  boost::random::poisson_distribution<std::uint32_t, double> degree(mean_degree > 0.0 ? mean_degree : 1.0);
  // Sign bits are peeled off one 64-bit draw at a time.
  std::uint64_t bits = 0;
  unsigned bits_left = 0;
  for (std::size_t m = 0; m < members; ++m) {
    const std::uint32_t z = mean_degree > 0.0 ? degree(rng) : 0;
    for (std::uint32_t c = 0; c < z; ++c) {
      for (std::size_t k = 1; k < arity; ++k) tape.senders.push_back(static_cast<std::uint32_t>(bounded(rng, population_size)));
      for (std::size_t k = 0; k < arity; ++k) {
        if (bits_left == 0) {
          bits = rng();
          bits_left = 64;
        }
        tape.signs.push_back(static_cast<std::uint8_t>(bits & 1u));
        bits >>= 1;
        --bits_left;
      }
    }
    tape.offsets.push_back(tape.offsets.back() + z);
  }
}

bool build_member(std::span<const Survey> old, const DrawTape& tape, std::size_t m, Survey& out) {
  constexpr std::uint32_t kPrefetchAhead = 6;
  const std::size_t k_minus = tape.arity - 1;
  const std::uint32_t total = tape.offsets.back();
  Triple acc = kUnfrozen.vec();
  for (std::uint32_t c = tape.offsets[m]; c < tape.offsets[m + 1]; ++c) {
    if (c + kPrefetchAhead < total) {
      const std::uint32_t* ahead = tape.senders.data() + static_cast<std::size_t>(c + kPrefetchAhead) * k_minus;
      for (std::size_t k = 0; k < k_minus; ++k) __builtin_prefetch(&old[ahead[k]]);
    }
    const std::uint32_t* senders = tape.senders.data() + static_cast<std::size_t>(c) * k_minus;
    const std::uint8_t* signs = tape.signs.data() + static_cast<std::size_t>(c) * tape.arity;
    double w = 1.0;
    for (std::size_t k = 0; k < k_minus; ++k) {
      w *= old[senders[k]].violating(Literal{0, signs[k + 1] != 0});
    }
    acc = survey_product(acc, survey_warning(Literal{0, signs[0] != 0}, w).vec());
  }
  const double z = acc.norm();
  if (!(z > 0.0)) return false;
  out = {acc.t / z, acc.i / z, acc.f / z};
  return true;
}

Population::Population(std::vector<Survey> members, double alpha, std::size_t arity,
                       std::uint64_t seed)
    : members_(std::move(members)),
      scratch_(members_.size()),
      alpha_(alpha),
      arity_(arity),
      seed_(seed),
      tape_rng_(make_rng(seed, Stream::tape)),
      redraw_rng_(make_rng(seed, Stream::redraw)) {
  if (members_.empty()) throw InvalidParameters("population must have at least one member");
  if (arity_ < 2) throw InvalidParameters("arity must be at least 2");
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) throw InvalidParameters("alpha must be >= 0");
}

const DrawTape& Population::next_tape() {
  draw_tape(tape_rng_, members_.size(), members_.size(), alpha_, arity_, tape_);
  return tape_;
}

void Population::apply(const DrawTape& tape) {
  if (tape.members() != members_.size() || tape.arity != arity_) {
    throw InvalidParameters("draw tape does not match the population");
  }
  for (std::size_t m = 0; m < members_.size(); ++m) {
    if (build_member(members_, tape, m, scratch_[m])) continue;
    bool ok = false;
    while (!ok) {
      ++contradictions_;
      const auto redraw = draw_tape(redraw_rng_, members_.size(), 1, alpha_, arity_);
      ok = build_member(members_, redraw, 0, scratch_[m]);
    }
  }
  members_.swap(scratch_);
  ++generation_;
}

Population init_population(std::size_t L, InitMode mode, double alpha, std::uint64_t seed,
                           std::size_t arity, std::span<const Survey> custom) {
  std::vector<Survey> members;
  switch (mode) {
    case InitMode::uniform_simplex: {
      if (L == 0) throw InvalidParameters("L must be at least 1");
      auto rng = make_rng(seed, Stream::init);
      members.resize(L);
      for (auto& s : members) s = random_simplex_survey(rng);
      break;
    }
    case InitMode::all_unfrozen:
      if (L == 0) throw InvalidParameters("L must be at least 1");
      members.assign(L, kUnfrozen);
      break;
    case InitMode::custom:
      members.assign(custom.begin(), custom.end());
      break;
  }
  return Population(std::move(members), alpha, arity, seed);
}

GenerationStats population_stats(std::span<const Survey> members) {
  GenerationStats stats;
  if (members.empty()) return stats;
  double unfrozen = 0.0, frozen = 0.0;
  for (const auto& s : members) {
    unfrozen += s.i;
    frozen += s.frozen();
  }
  const auto n = static_cast<double>(members.size());
  stats.mean_unfrozen = unfrozen / n;
  stats.frozen_fraction = frozen / n;
  return stats;
}

double replica_distance(std::span<const Survey> a, std::span<const Survey> b) {
  if (a.size() != b.size()) throw InvalidParameters("replicas differ in size");
  double sum = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double dt = a[m].t - b[m].t;
    const double di = a[m].i - b[m].i;
    const double df = a[m].f - b[m].f;
    sum += dt * dt + di * di + df * df;
  }
  return a.empty() ? 0.0 : sum / static_cast<double>(a.size());
}

ReplicaPair::ReplicaPair(Population first, Population second)
    : first_(std::move(first)), second_(std::move(second)) {
  if (first_.size() != second_.size() || first_.arity() != second_.arity() ||
      first_.alpha() != second_.alpha()) {
    throw InvalidParameters("replicas must share L, alpha and arity");
  }
}

void ReplicaPair::step() {
  const auto& tape = first_.next_tape();
  auto& a = first_;
  auto& b = second_;
  for (std::size_t m = 0; m < a.members_.size(); ++m) {
    bool ok_a = build_member(a.members_, tape, m, a.scratch_[m]);
    bool ok_b = build_member(b.members_, tape, m, b.scratch_[m]);
    while (!(ok_a && ok_b)) {
      ++a.contradictions_;
      ++b.contradictions_;
      const auto redraw = draw_tape(a.redraw_rng_, a.members_.size(), 1, a.alpha_, a.arity_);
      ok_a = build_member(a.members_, redraw, 0, a.scratch_[m]);
      ok_b = build_member(b.members_, redraw, 0, b.scratch_[m]);
    }
  }
  a.members_.swap(a.scratch_);
  b.members_.swap(b.scratch_);
  ++a.generation_;
  ++b.generation_;
}

TrajectoryRecord replica_run(ReplicaPair& pair, const ReplicaRunOptions& options) {
  TrajectoryRecord record;
  record.rows.reserve(options.t_max + 1);
  const auto snapshot = [&](std::uint64_t t) {
    const auto stats = population_stats(pair.first().members());
    TrajectoryRow row{t, replica_distance(pair.first().members(), pair.second().members()),
                      stats.mean_unfrozen, stats.frozen_fraction,
                      std::numeric_limits<double>::quiet_NaN()};
    if (options.sigma_every > 0 && t % options.sigma_every == 0) {
      row.sigma_per_var = population_complexity(pair.first(), options.sigma_samples,
                                                pair.first().seed() ^ (t * 0x9e3779b97f4a7c15ULL))
                              .sigma_per_var;
    }
    record.rows.push_back(row);
  };
  snapshot(0);
  for (std::size_t t = 1; t <= options.t_max; ++t) {
    pair.step();
    snapshot(t);
  }
  record.contradictions = pair.first().contradictions();
  return record;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit fit;
  fit.points = x.size();
  if (x.size() != y.size() || x.size() < 2) return fit;
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {

double student_half_width(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return std::numeric_limits<double>::infinity();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd /
         std::sqrt(static_cast<double>(n));
}

}  // namespace

LyapunovEstimate lyapunov(const LyapunovOptions& options) {
  const std::size_t t_end = options.t_end.value_or(options.t_max);
  if (options.seeds.empty()) throw InvalidParameters("at least one seed is required");
  if (options.t_burn >= t_end || t_end > options.t_max) {
    throw InvalidParameters("fit window must satisfy t_burn < t_end <= t_max");
  }
  LyapunovEstimate estimate;
  std::vector<double> lambdas;
  for (auto seed : options.seeds) {
    // Distinct init substreams give two independent starting populations.
    auto first = init_population(options.L, InitMode::uniform_simplex, options.alpha, seed,
                                 options.arity);
    auto second = init_population(options.L, InitMode::uniform_simplex, options.alpha,
                                  seed ^ 0x5bd1e995'00000000ULL, options.arity);
    ReplicaPair pair(std::move(first), std::move(second));
    LyapunovRun run;
    run.seed = seed;
    run.trajectory = replica_run(pair, {options.t_max, 0, 0});

    std::vector<double> xs, ys;
    for (std::size_t t = options.t_burn; t <= t_end; ++t) {
      const double d = run.trajectory.rows[t].distance;
      if (!(d > options.underflow)) {
        run.truncated = true;
        break;
      }
      xs.push_back(static_cast<double>(t));
      ys.push_back(std::log(d));
    }
    run.fit = fit_line(xs, ys);
    run.lambda = -run.fit.slope;
    run.non_exponential = run.fit.points < 2 || run.fit.r2 < options.min_r2;
    run.final_members.assign(pair.first().members().begin(), pair.first().members().end());
    estimate.flagged = estimate.flagged || run.truncated || run.non_exponential;
    lambdas.push_back(run.lambda);
    estimate.runs.push_back(std::move(run));
  }
  estimate.lambda = std::accumulate(lambdas.begin(), lambdas.end(), 0.0) /
                    static_cast<double>(lambdas.size());
  estimate.ci = student_half_width(lambdas);
  return estimate;
}

ComplexityEstimate population_complexity(std::span<const Survey> members, double alpha,
                                         std::size_t arity, std::size_t n_samples,
                                         std::uint64_t seed) {
  if (members.empty() || n_samples < 2) {
    throw InvalidParameters("need a nonempty population and at least two samples");
  }
  auto rng = make_rng(seed, Stream::sampling);
  ComplexityEstimate est;
  const auto pick = [&]() -> const Survey& { return members[bounded(rng, members.size())]; };
  const double mean_degree = static_cast<double>(arity) * alpha;
  boost::random::poisson_distribution<std::uint32_t, double> degree(mean_degree > 0.0 ? mean_degree : 1.0);

  // Welford accumulators for the site and clause log-norms.
  double site_mean = 0.0, site_m2 = 0.0, clause_mean = 0.0, clause_m2 = 0.0;
  for (std::size_t n = 1; n <= n_samples; ++n) {
    double log_site = 0.0;
    for (;;) {
      const std::uint32_t z = mean_degree > 0.0 ? degree(rng) : 0;
      Triple acc = kUnfrozen.vec();
      for (std::uint32_t c = 0; c < z; ++c) {
        double w = 1.0;
        for (std::size_t k = 0; k + 1 < arity; ++k) w *= pick().violating({0, coin(rng)});
        acc = survey_product(acc, survey_warning({0, coin(rng)}, w).vec());
      }
      const double norm = acc.norm();
      if (norm > 0.0) {
        log_site = std::log(norm);
        break;
      }
      ++est.contradictions;
    }
    double log_clause = 0.0;
    for (;;) {
      double prod = 1.0;
      for (std::size_t k = 0; k < arity; ++k) prod *= pick().violating({0, coin(rng)});
      const double z = 1.0 - prod;
      if (z > 0.0) {
        log_clause = std::log(z);
        break;
      }
      ++est.contradictions;
    }
    const auto nd = static_cast<double>(n);
    double delta = log_site - site_mean;
    site_mean += delta / nd;
    site_m2 += delta * (log_site - site_mean);
    delta = log_clause - clause_mean;
    clause_mean += delta / nd;
    clause_m2 += delta * (log_clause - clause_mean);
  }
  const auto n = static_cast<double>(n_samples);
  const double weight = static_cast<double>(arity - 1) * alpha;
  est.site_mean = site_mean;
  est.clause_mean = clause_mean;
  est.sigma_per_var = site_mean - weight * clause_mean;
  const double var_site = site_m2 / (n - 1.0);
  const double var_clause = clause_m2 / (n - 1.0);
  est.standard_error = std::sqrt(var_site / n + weight * weight * var_clause / n);
  return est;
}

ComplexityEstimate population_complexity(const Population& population, std::size_t n_samples,
                                         std::uint64_t seed) {
  return population_complexity(population.members(), population.alpha(), population.arity(),
                               n_samples, seed);
}

DriftResult finite_l_drift(const DriftOptions& options) {
  if (options.sizes.size() < 3) throw InvalidParameters("need at least three population sizes");
  if (options.generations < 2) throw InvalidParameters("need at least two generations");
  std::vector<std::vector<double>> means;
  for (std::size_t k = 0; k < options.sizes.size(); ++k) {
    auto pop = init_population(options.sizes[k], InitMode::uniform_simplex, options.alpha,
                               options.seed + k, options.arity);
    for (std::size_t t = 0; t < options.burn; ++t) pop.step();
    auto& m = means.emplace_back();
    m.reserve(options.generations);
    for (std::size_t t = 0; t < options.generations; ++t) {
      pop.step();
      m.push_back(population_stats(pop.members()).mean_unfrozen);
    }
  }
  DriftResult result;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k + 1 < means.size(); ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < options.generations; ++t) {
      const double d = means[k][t] - means[k + 1][t];
      acc += d * d;
    }
    const double ms = acc / static_cast<double>(options.generations);
    result.sizes.push_back(options.sizes[k]);
    result.mean_square.push_back(ms);
    xs.push_back(std::log(static_cast<double>(options.sizes[k])));
    ys.push_back(std::log(ms));
  }
  result.fit = fit_line(xs, ys);
  return result;
}

Threshold detect_alpha_l(std::span<const ScanRow> rows, double frozen_threshold) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].frozen_fraction > frozen_threshold) {
      if (k == 0) return {std::nullopt, "below grid"};
      return {rows[k].alpha, ""};
    }
  }
  return {std::nullopt, "above grid"};
}

Threshold detect_sign_change(std::span<const double> alphas, std::span<const double> values) {
  if (alphas.empty()) return {std::nullopt, "empty grid"};
  if (!(values[0] > 0.0)) return {std::nullopt, "below grid"};
  for (std::size_t k = 1; k < alphas.size(); ++k) {
    if (!(values[k] > 0.0)) {
      const double a0 = alphas[k - 1], a1 = alphas[k];
      const double v0 = values[k - 1], v1 = values[k];
      return {a0 + (a1 - a0) * v0 / (v0 - v1), ""};
    }
  }
  return {std::nullopt, "above grid"};
}

ScanResult scan_alpha(const ScanOptions& options) {
  if (options.alphas.empty()) throw InvalidParameters("alpha grid is empty");
  if (!std::is_sorted(options.alphas.begin(), options.alphas.end())) {
    throw InvalidParameters("alpha grid must be ascending");
  }
  ScanResult scan;
  for (double alpha : options.alphas) {
    LyapunovOptions lo;
    lo.alpha = alpha;
    lo.arity = options.arity;
    lo.L = options.L;
    lo.t_max = options.t_max;
    lo.t_burn = options.t_burn;
    lo.seeds = options.seeds;
    const auto est = lyapunov(lo);

    ScanRow row;
    row.alpha = alpha;
    row.lambda = est.lambda;
    row.lambda_ci = est.ci;
    row.lambda_flagged = est.flagged;

    // Complexity and frozen fraction from each seed's final population, pooled.
    std::vector<double> sigmas;
    double var_sum = 0.0, frozen_sum = 0.0;
    for (const auto& run : est.runs) {
      const auto sigma = population_complexity(run.final_members, alpha, options.arity,
                                               options.sigma_samples, run.seed);
      sigmas.push_back(sigma.sigma_per_var);
      var_sum += sigma.standard_error * sigma.standard_error;
      // Stationary frozen fraction: average over the second half of the run.
      const auto& rows = run.trajectory.rows;
      double f = 0.0;
      const std::size_t from = rows.size() / 2;
      for (std::size_t t = from; t < rows.size(); ++t) f += rows[t].frozen_fraction;
      frozen_sum += f / static_cast<double>(rows.size() - from);
    }
    const auto n = static_cast<double>(est.runs.size());
    row.sigma_per_var = std::accumulate(sigmas.begin(), sigmas.end(), 0.0) / n;
    double spread = 0.0;
    for (double v : sigmas) spread += (v - row.sigma_per_var) * (v - row.sigma_per_var);
    const double between = sigmas.size() > 1 ? std::sqrt(spread / (n - 1.0) / n) : 0.0;
    row.sigma_se = std::max(std::sqrt(var_sum) / n, between);
    row.frozen_fraction = frozen_sum / n;
    scan.rows.push_back(row);
  }

  scan.alpha_l = detect_alpha_l(scan.rows, options.frozen_threshold);
  // Sign changes are only meaningful on the nontrivial part of the grid.
  std::vector<double> alphas, sigmas, lambdas;
  for (const auto& row : scan.rows) {
    if (row.frozen_fraction <= options.frozen_threshold) continue;
    alphas.push_back(row.alpha);
    sigmas.push_back(row.sigma_per_var);
    lambdas.push_back(row.lambda);
  }
  if (alphas.empty()) {
    scan.alpha_star = {std::nullopt, "no nontrivial grid point"};
    scan.alpha_u = {std::nullopt, "no nontrivial grid point"};
  } else {
    scan.alpha_star = detect_sign_change(alphas, sigmas);
    scan.alpha_u = detect_sign_change(alphas, lambdas);
  }
  return scan;
}

namespace {

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  out << "t,D,mean_s_I,frozen_fraction,Sigma_per_N\n";
  for (const auto& row : record.rows) {
    out << row.t << ',' << sci(row.distance) << ',' << fixed(row.mean_unfrozen) << ','
        << fixed(row.frozen_fraction) << ','
        << (std::isnan(row.sigma_per_var) ? std::string("nan") : sci(row.sigma_per_var)) << '\n';
  }
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "alpha,lambda,lambda_ci,Sigma_per_N,Sigma_se,frozen_fraction\n";
  for (const auto& row : scan.rows) {
    out << fixed(row.alpha) << ',' << sci(row.lambda) << ',' << sci(row.lambda_ci) << ','
        << sci(row.sigma_per_var) << ',' << sci(row.sigma_se) << ',' << fixed(row.frozen_fraction)
        << '\n';
  }
}

nlohmann::json scan_json(const ScanResult& scan) {
  const auto threshold = [](const Threshold& t) {
    return t.value ? nlohmann::json{{"value", *t.value}}
                   : nlohmann::json{{"value", nullptr}, {"note", t.note}};
  };
  auto rows = nlohmann::json::array();
  for (const auto& r : scan.rows) {
    rows.push_back({{"alpha", r.alpha},
                    {"lambda", r.lambda},
                    {"lambda_ci", r.lambda_ci},
                    {"lambda_flagged", r.lambda_flagged},
                    {"Sigma_per_N", r.sigma_per_var},
                    {"Sigma_se", r.sigma_se},
                    {"frozen_fraction", r.frozen_fraction}});
  }
  return {{"alpha_L", threshold(scan.alpha_l)},
          {"alpha_star", threshold(scan.alpha_star)},
          {"alpha_U", threshold(scan.alpha_u)},
          {"rows", std::move(rows)}};
}

}  // namespace spw
