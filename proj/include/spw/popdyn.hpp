#pragma once

// Population dynamics for the distribution of surveys on the infinite random
// tree, coupled-replica distance D(t), its decay rate, and complexity.
//
// A population of L surveys stands for the distribution P(s). One generation
// builds L new members: member m gets z ~ Poisson(K alpha) clauses, each with
// K-1 senders picked uniformly from the old population and K fresh sign bits;
// the K-1 senders give a warning as on a finite instance, and the warnings are
// folded with survey_product and normalized.
//
// All randomness of a generation is materialized first as a DrawTape. Two
// replicas fed the same tape consume identical draws by construction.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spw/rng.hpp"
#include "spw/survey.hpp"

namespace spw {

/// Draws for one generation. Member m uses clauses [offsets[m], offsets[m+1]).
/// Clause c uses senders[c*(K-1) .. c*(K-1)+K-2] and signs[c*K .. c*K+K-1],
/// with signs[c*K] the receiving literal's sign.
struct DrawTape {
  std::size_t arity = 3;
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> senders;
  std::vector<std::uint8_t> signs;

  std::size_t members() const noexcept { return offsets.size() - 1; }
  std::size_t clauses() const noexcept { return offsets.back(); }
};

DrawTape draw_tape(Rng& rng, std::size_t population_size, std::size_t members, double alpha,
                   std::size_t arity);
/// Same draws, refilling `tape` so its buffers are reused across generations.
void draw_tape(Rng& rng, std::size_t population_size, std::size_t members, double alpha,
               std::size_t arity, DrawTape& tape);

/// Builds new member m of the tape from `old`. Returns false (leaving `out`
/// untouched) when the fold has zero norm.
bool build_member(std::span<const Survey> old, const DrawTape& tape, std::size_t m, Survey& out);

enum class InitMode { uniform_simplex, all_unfrozen, custom };

class Population {
 public:
  Population(std::vector<Survey> members, double alpha, std::size_t arity, std::uint64_t seed);

  std::span<const Survey> members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  double alpha() const noexcept { return alpha_; }
  std::size_t arity() const noexcept { return arity_; }
  std::uint64_t generation() const noexcept { return generation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Zero-norm draws that were redrawn, summed over all generations.
  std::uint64_t contradictions() const noexcept { return contradictions_; }

  /// Draws the next generation's tape from this population's tape stream
  /// into an internal buffer, valid until the next call.
  const DrawTape& next_tape();
  /// Replaces the members with the generation built from `tape`. Zero-norm
  /// members are redrawn from the redraw stream and counted.
  void apply(const DrawTape& tape);
  void step() { apply(next_tape()); }

 private:
  friend class ReplicaPair;

  std::vector<Survey> members_;
  std::vector<Survey> scratch_;
  DrawTape tape_;
  double alpha_;
  std::size_t arity_;
  std::uint64_t seed_;
  std::uint64_t generation_ = 0;
  std::uint64_t contradictions_ = 0;
  Rng tape_rng_;
  Rng redraw_rng_;
};

/// `custom` is used only when mode == custom; its size overrides L.
Population init_population(std::size_t L, InitMode mode, double alpha, std::uint64_t seed,
                           std::size_t arity = 3, std::span<const Survey> custom = {});

struct GenerationStats {
  double mean_unfrozen = 0.0;
  /// Mean of s_T + s_F over members.
  double frozen_fraction = 0.0;
};

GenerationStats population_stats(std::span<const Survey> members);

/// Mean squared Euclidean distance between corresponding members.
double replica_distance(std::span<const Survey> a, std::span<const Survey> b);

/// Two populations driven by one draw stream: the first population's seed
/// drives the tape; a contradiction in either replica redraws that member in
/// both.
class ReplicaPair {
 public:
  ReplicaPair(Population first, Population second);

  const Population& first() const noexcept { return first_; }
  const Population& second() const noexcept { return second_; }
  std::uint64_t generation() const noexcept { return first_.generation_; }
  void step();

 private:
  Population first_;
  Population second_;
};

struct TrajectoryRow {
  std::uint64_t t = 0;
  double distance = 0.0;
  double mean_unfrozen = 0.0;
  double frozen_fraction = 0.0;
  /// NaN on generations where it was not sampled.
  double sigma_per_var = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  std::uint64_t contradictions = 0;
};

struct ReplicaRunOptions {
  std::size_t t_max = 100;
  /// Sample the complexity of the first replica every this many generations (0: never).
  std::size_t sigma_every = 0;
  std::size_t sigma_samples = 10000;
};

/// Row t holds D(t) after the t-th coupled step; row 0 is the initial pair.
TrajectoryRecord replica_run(ReplicaPair& pair, const ReplicaRunOptions& options);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct LyapunovOptions {
  double alpha = 4.0;
  std::size_t arity = 3;
  std::size_t L = 100000;
  std::size_t t_max = 200;
  /// Fit window [t_burn, t_end]; t_end defaults to t_max.
  std::size_t t_burn = 20;
  std::optional<std::size_t> t_end;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Fits with R^2 below this are flagged as non-exponential.
  double min_r2 = 0.8;
  /// D(t) at or below this ends the fit window.
  double underflow = 1e-300;
};

struct LyapunovRun {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  LineFit fit;
  bool truncated = false;
  bool non_exponential = false;
  TrajectoryRecord trajectory;
  /// Replica one after the last generation.
  std::vector<Survey> final_members;
};

struct LyapunovEstimate {
  double lambda = 0.0;
  /// Half width of the 95% Student-t interval over seeds.
  double ci = 0.0;
  bool flagged = false;
  std::vector<LyapunovRun> runs;
};

/// Each seed runs a replica pair from two independent uniform-simplex
/// populations and fits log D(t) = c - lambda t on the window.
LyapunovEstimate lyapunov(const LyapunovOptions& options);

struct ComplexityEstimate {
  double sigma_per_var = 0.0;
  double standard_error = 0.0;
  double site_mean = 0.0;
  double clause_mean = 0.0;
  std::uint64_t contradictions = 0;
};

/// Monte Carlo estimate of Sigma/N = E[log Z(i)] - (K-1) alpha E[log Z(c)]:
/// Z(i) folds the warnings of z ~ Poisson(K alpha) random clauses, Z(c) is
/// 1 - prod of K random members' violating components.
ComplexityEstimate population_complexity(std::span<const Survey> members, double alpha,
                                         std::size_t arity, std::size_t n_samples,
                                         std::uint64_t seed);
ComplexityEstimate population_complexity(const Population& population, std::size_t n_samples,
                                         std::uint64_t seed);

struct DriftOptions {
  double alpha = 4.0;
  std::size_t arity = 3;
  /// Each size is compared with the next; sizes[k+1] is normally 2 sizes[k].
  std::vector<std::size_t> sizes{10000, 20000, 40000};
  std::size_t burn = 50;
  std::size_t generations = 2000;
  std::uint64_t seed = 1;
};

struct DriftResult {
  std::vector<std::size_t> sizes;
  /// Time average of (m_L(t) - m_L'(t))^2 with m the mean s_I of independent
  /// runs at consecutive sizes L, L'.
  std::vector<double> mean_square;
  /// log mean_square against log L.
  LineFit fit;
};

/// Finite-population correction of the mean unfrozen component.
DriftResult finite_l_drift(const DriftOptions& options);

struct ScanOptions {
  std::vector<double> alphas;
  std::size_t arity = 3;
  std::size_t L = 100000;
  std::size_t t_max = 200;
  std::size_t t_burn = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t sigma_samples = 1000000;
  /// Stationary frozen fraction above which a grid point is nontrivial.
  double frozen_threshold = 1e-3;
};

struct ScanRow {
  double alpha = 0.0;
  double lambda = 0.0;
  double lambda_ci = 0.0;
  double sigma_per_var = 0.0;
  /// Larger of the pooled sampling error and the spread between seeds.
  double sigma_se = 0.0;
  double frozen_fraction = 0.0;
  bool lambda_flagged = false;
};

struct Threshold {
  std::optional<double> value;
  /// Why no value was found, e.g. "below grid".
  std::string note;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  Threshold alpha_l;
  Threshold alpha_star;
  Threshold alpha_u;
};

ScanResult scan_alpha(const ScanOptions& options);

/// Threshold detection on an existing table (ascending alpha).
Threshold detect_alpha_l(std::span<const ScanRow> rows, double frozen_threshold);
Threshold detect_sign_change(std::span<const double> alphas, std::span<const double> values);

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);
void write_scan_csv(std::ostream& out, const ScanResult& scan);
nlohmann::json scan_json(const ScanResult& scan);

}  // namespace spw
