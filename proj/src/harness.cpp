#include "spw/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "spw/belief.hpp"
#include "spw/error.hpp"
#include "spw/instance.hpp"
#include "spw/survey.hpp"
#include "spw/tree.hpp"

#ifndef SPW_VERSION
#define SPW_VERSION "unknown"
#endif

namespace spw {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidParameters("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return value;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_number<T>(key, text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ',';
    out += format(values[k]);
  }
  return out;
}

struct Field {
  std::string_view key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <class T>
Field number_field(std::string_view key, T ExperimentConfig::*member) {
  return {key,
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          },
          [member, key](ExperimentConfig& c, std::string_view v) {
            c.*member = parse_number<T>(key, v);
          }};
}

Field string_field(std::string_view key, std::string ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return c.*member; },
          [member](ExperimentConfig& c, std::string_view v) { c.*member = std::string(trim(v)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      string_field("subcommand", &ExperimentConfig::subcommand),
      number_field("n", &ExperimentConfig::n_vars),
      number_field("alpha", &ExperimentConfig::alpha),
      {"alphas",
       [](const ExperimentConfig& c) { return join(c.alphas, format_double); },
       [](ExperimentConfig& c, std::string_view v) { c.alphas = parse_list<double>("alphas", v); }},
      number_field("arity", &ExperimentConfig::arity),
      number_field("L", &ExperimentConfig::L),
      number_field("epsilon", &ExperimentConfig::epsilon),
      number_field("max_sweeps", &ExperimentConfig::max_sweeps),
      number_field("damping", &ExperimentConfig::damping),
      string_field("schedule", &ExperimentConfig::schedule),
      string_field("bp_mode", &ExperimentConfig::bp_mode),
      number_field("root", &ExperimentConfig::root),
      number_field("k_max", &ExperimentConfig::k_max),
      number_field("n_boundaries", &ExperimentConfig::n_boundaries),
      number_field("t_max", &ExperimentConfig::t_max),
      number_field("t_burn", &ExperimentConfig::t_burn),
      number_field("sigma_samples", &ExperimentConfig::sigma_samples),
      {"seeds",
       [](const ExperimentConfig& c) {
         return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
       },
       [](ExperimentConfig& c, std::string_view v) {
         c.seeds = parse_list<std::uint64_t>("seeds", v);
       }},
      string_field("input", &ExperimentConfig::input),
      string_field("output_dir", &ExperimentConfig::output_dir),
  };
  return table;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const auto fail = [](const std::string& what) { throw InvalidParameters(what); };
  if (std::find(std::begin(kSubcommands), std::end(kSubcommands), c.subcommand) ==
      std::end(kSubcommands)) {
    fail("unknown subcommand '" + c.subcommand + "'");
  }
  if (c.input.empty() && c.n_vars == 0) fail("n must be at least 1");
  if (!std::isfinite(c.alpha) || c.alpha < 0.0) fail("alpha must be a finite value >= 0");
  if (c.arity < 2) fail("arity must be at least 2");
  if (c.L == 0) fail("L must be at least 1");
  if (!(c.epsilon > 0.0)) fail("epsilon must be positive");
  if (c.max_sweeps == 0) fail("max_sweeps must be at least 1");
  if (!(c.damping >= 0.0 && c.damping < 1.0)) fail("damping must lie in [0, 1)");
  if (c.schedule != "random-sequential" && c.schedule != "synchronous") {
    fail("schedule must be random-sequential or synchronous");
  }
  if (c.bp_mode != "uniform" && c.bp_mode != "paper") fail("bp_mode must be uniform or paper");
  if (c.n_boundaries < 2) fail("n_boundaries must be at least 2");
  if (c.t_max == 0 || c.t_burn >= c.t_max) fail("need 0 <= t_burn < t_max");
  if (c.sigma_samples < 2) fail("sigma_samples must be at least 2");
  if (c.seeds.empty()) fail("at least one seed is required");
  if (c.subcommand == "scan") {
    if (c.alphas.empty()) fail("scan needs an alpha grid");
    if (!std::is_sorted(c.alphas.begin(), c.alphas.end())) fail("alpha grid must be ascending");
    for (double a : c.alphas) {
      if (!std::isfinite(a) || a < 0.0) fail("alpha grid values must be finite and >= 0");
    }
  }
}

std::string to_key_value(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

ExperimentConfig parse_key_value(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidParameters("config line " + std::to_string(line_no) + " has no '='");
    }
    const auto key = trim(line.substr(0, eq));
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) throw InvalidParameters("unknown config key '" + std::string(key) + "'");
    it->set(config, line.substr(eq + 1));
  }
  return config;
}

std::vector<double> alpha_grid(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from) || !std::isfinite(from) || !std::isfinite(to)) {
    throw InvalidParameters("alpha grid needs step > 0 and to >= from");
  }
  std::vector<double> grid;
  // Indexing from `from` avoids accumulating rounding in the step.
  for (std::size_t k = 0;; ++k) {
    const double a = from + static_cast<double>(k) * step;
    if (a > to + 0.5 * step) break;
    grid.push_back(std::round(a * 1e12) / 1e12);
  }
  return grid;
}

nlohmann::json config_json(const ExperimentConfig& c) {
  return {{"subcommand", c.subcommand},
          {"n", c.n_vars},
          {"alpha", c.alpha},
          {"alphas", c.alphas},
          {"arity", c.arity},
          {"L", c.L},
          {"epsilon", c.epsilon},
          {"max_sweeps", c.max_sweeps},
          {"damping", c.damping},
          {"schedule", c.schedule},
          {"bp_mode", c.bp_mode},
          {"root", c.root},
          {"k_max", c.k_max},
          {"n_boundaries", c.n_boundaries},
          {"t_max", c.t_max},
          {"t_burn", c.t_burn},
          {"sigma_samples", c.sigma_samples},
          {"seeds", c.seeds},
          {"input", c.input},
          {"output_dir", c.output_dir}};
}

nlohmann::json manifest_json(const RunManifest& m) {
  auto stages = nlohmann::json::array();
  for (const auto& s : m.stages) stages.push_back({{"name", s.name}, {"seconds", s.seconds}});
  auto digests = nlohmann::json::array();
  for (const auto& [file, digest] : m.digests) digests.push_back({{"file", file}, {"sha256", digest}});
  return {{"config", config_json(m.config)},
          {"config_text", to_key_value(m.config)},
          {"version", m.version},
          {"wall_seconds", m.wall_seconds},
          {"stages", stages},
          {"artifacts", digests},
          {"exit_code", static_cast<int>(m.exit_code)},
          {"message", m.message}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

std::filesystem::path output_directory(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("SPW_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "spw-out";
}

namespace {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Collects artifacts and stage timings for one run.
class Recorder {
 public:
  Recorder(std::filesystem::path dir, RunManifest& manifest, std::ostream& log)
      : dir_(std::move(dir)), manifest_(manifest), log_(log) {}

  template <class F>
  void artifact(const std::string& name, F&& write) {
    std::ostringstream buffer;
    write(buffer);
    const auto bytes = buffer.str();
    std::ofstream out(dir_ / name, std::ios::binary);
    out << bytes;
    out.close();
    if (!out) throw IoError("cannot write " + (dir_ / name).string());
    manifest_.digests.emplace_back(name, sha256_hex(bytes));
    log_ << "wrote " << (dir_ / name).string() << '\n';
  }

  template <class F>
  auto stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish(name, t0);
    } else {
      auto value = body();
      finish(name, t0);
      return value;
    }
  }

 private:
  void finish(const std::string& name, std::chrono::steady_clock::time_point t0) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.stages.push_back({name, s});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    log_ << name << ": " << buf << " s\n";
  }

  std::filesystem::path dir_;
  RunManifest& manifest_;
  std::ostream& log_;
};

Schedule schedule_of(const ExperimentConfig& c) {
  return c.schedule == "synchronous" ? Schedule::synchronous : Schedule::random_sequential;
}

Instance load_instance(const ExperimentConfig& c) {
  if (c.input.empty()) return generate_random_instance(c.n_vars, c.alpha, c.arity, c.seeds.front());
  std::ifstream in(c.input);
  if (!in) throw IoError("cannot read " + c.input);
  return parse_dimacs(in);
}

std::optional<std::uint64_t> instance_seed(const ExperimentConfig& c) {
  if (c.input.empty()) return c.seeds.front();
  return std::nullopt;
}

ExitCode run_gen(const ExperimentConfig& c, Recorder& rec) {
  const auto inst = rec.stage("generate", [&] { return load_instance(c); });
  rec.artifact("instance.cnf", [&](std::ostream& o) { write_dimacs(o, inst); });
  rec.artifact("instance.json",
               [&](std::ostream& o) { o << summary_json(inst, instance_seed(c)).dump(2) << '\n'; });
  return ExitCode::ok;
}

ExitCode run_bp(const ExperimentConfig& c, Recorder& rec) {
  const auto inst = rec.stage("instance", [&] { return load_instance(c); });
  BpOptions o;
  o.mode = c.bp_mode == "paper" ? BpMode::paper : BpMode::uniform_measure;
  o.schedule = schedule_of(c);
  o.epsilon = c.epsilon;
  o.max_sweeps = c.max_sweeps;
  o.damping = c.damping;
  o.seed = c.seeds.front();
  const auto result = rec.stage("solve", [&] { return solve(inst, o); });
  nlohmann::json report{{"converged", result.converged},
                        {"sweeps", result.sweeps},
                        {"mode", c.bp_mode},
                        {"entropy", nullptr}};
  if (result.converged && o.mode == BpMode::uniform_measure) {
    report["entropy"] = rec.stage("entropy", [&] { return entropy(inst, result.state); }).entropy;
  }
  rec.artifact("messages.jsonl", [&](std::ostream& out) { write_messages_jsonl(out, result.state); });
  rec.artifact("residuals.csv",
               [&](std::ostream& out) { write_residuals_csv(out, result.residuals); });
  rec.artifact("bp.json", [&](std::ostream& out) { out << report.dump(2) << '\n'; });
  return result.converged ? ExitCode::ok : ExitCode::non_convergence;
}

SpResult solve_sp(const ExperimentConfig& c, const Instance& inst) {
  SpOptions o;
  o.schedule = schedule_of(c);
  o.epsilon = c.epsilon;
  o.max_sweeps = c.max_sweeps;
  o.damping = c.damping;
  o.seed = c.seeds.front();
  return solve(inst, o);
}

ExitCode run_sp(const ExperimentConfig& c, Recorder& rec) {
  const auto inst = rec.stage("instance", [&] { return load_instance(c); });
  const auto result = rec.stage("solve", [&] { return solve_sp(c, inst); });
  std::optional<ComplexityReport> sigma;
  if (result.classification != SpClass::non_convergent) {
    sigma = rec.stage("complexity", [&] { return complexity(inst, result.state); });
  }
  rec.artifact("surveys.jsonl", [&](std::ostream& o) { write_surveys_jsonl(o, result.state); });
  rec.artifact("residuals.csv",
               [&](std::ostream& o) { write_residuals_csv(o, result.state.residuals); });
  rec.artifact("sp.json", [&](std::ostream& o) {
    o << solve_report_json(result, sigma ? &*sigma : nullptr).dump(2) << '\n';
  });
  return result.classification == SpClass::non_convergent ? ExitCode::non_convergence
                                                           : ExitCode::ok;
}

ExitCode run_unroll(const ExperimentConfig& c, Recorder& rec) {
  const auto inst = rec.stage("instance", [&] { return load_instance(c); });
  if (c.root >= inst.n_vars()) throw InvalidParameters("root variable out of range");
  const auto tree = rec.stage("unroll", [&] { return unroll(inst, c.root, c.k_max); });
  std::vector<std::size_t> shells;
  for (std::size_t d = 0; d <= tree.k_max(); ++d) shells.push_back(tree.shell_size(d));
  const auto iso = check_local_isomorphism(tree);
  rec.artifact("tree.jsonl", [&](std::ostream& o) { write_tree_jsonl(o, tree); });
  rec.artifact("tree.json", [&](std::ostream& o) {
    o << nlohmann::json{{"root", c.root},
                        {"k_max", tree.k_max()},
                        {"nodes", tree.nodes().size()},
                        {"shell_sizes", shells},
                        {"local_isomorphism", iso.ok}}
             .dump(2)
      << '\n';
  });
  return ExitCode::ok;
}

ExitCode run_probe(const ExperimentConfig& c, Recorder& rec) {
  const auto inst = rec.stage("instance", [&] { return load_instance(c); });
  if (c.root >= inst.n_vars()) throw InvalidParameters("root variable out of range");
  const auto tree = rec.stage("unroll", [&] { return unroll(inst, c.root, c.k_max); });
  const auto probe =
      rec.stage("probe", [&] { return uniqueness_probe(tree, c.n_boundaries, c.seeds.front()); });
  rec.artifact("dispersion.csv", [&](std::ostream& o) { write_dispersion_csv(o, probe); });
  const auto sp = rec.stage("solve", [&] { return solve_sp(c, inst); });
  if (sp.classification != SpClass::non_convergent) {
    const auto rows = compare_with_instance(probe, sp, c.root);
    rec.artifact("comparison.csv", [&](std::ostream& o) {
      o << "k,distance\n";
      for (const auto& r : rows) o << r.k << ',' << format_double(r.distance) << '\n';
    });
  }
  return ExitCode::ok;
}

ExitCode run_popdyn(const ExperimentConfig& c, Recorder& rec) {
  auto pop = init_population(c.L, InitMode::uniform_simplex, c.alpha, c.seeds.front(), c.arity);
  PlotTable table{{"t", {}, false}, {"mean_s_I", {}, false}, {"frozen_fraction", {}, false}};
  rec.stage("evolve", [&] {
    for (std::size_t t = 0; t <= c.t_max; ++t) {
      if (t > 0) pop.step();
      const auto stats = population_stats(pop.members());
      table[0].values.push_back(static_cast<double>(t));
      table[1].values.push_back(stats.mean_unfrozen);
      table[2].values.push_back(stats.frozen_fraction);
    }
  });
  const auto sigma = rec.stage("complexity", [&] {
    return population_complexity(pop, c.sigma_samples, c.seeds.front());
  });
  const std::vector<std::string> columns{"t", "mean_s_I", "frozen_fraction"};
  rec.artifact("popdyn.csv", [&](std::ostream& o) { emit_plot_data(o, table, columns); });
  rec.artifact("population.json", [&](std::ostream& o) {
    o << nlohmann::json{{"alpha", c.alpha},
                        {"L", c.L},
                        {"generations", c.t_max},
                        {"contradictions", pop.contradictions()},
                        {"Sigma_per_N", sigma.sigma_per_var},
                        {"Sigma_se", sigma.standard_error},
                        {"site_mean", sigma.site_mean},
                        {"clause_mean", sigma.clause_mean}}
             .dump(2)
      << '\n';
  });
  return ExitCode::ok;
}

ExitCode run_lyapunov(const ExperimentConfig& c, Recorder& rec) {
  LyapunovOptions o;
  o.alpha = c.alpha;
  o.arity = c.arity;
  o.L = c.L;
  o.t_max = c.t_max;
  o.t_burn = c.t_burn;
  o.seeds = c.seeds;
  const auto est = rec.stage("lyapunov", [&] { return lyapunov(o); });
  auto runs = nlohmann::json::array();
  for (const auto& run : est.runs) {
    const auto suffix = "_seed" + std::to_string(run.seed) + ".csv";
    rec.artifact("trajectory" + suffix,
                 [&](std::ostream& out) { write_trajectory_csv(out, run.trajectory); });
    const std::vector<std::string> columns{"t", "D"};
    rec.artifact("D" + suffix, [&](std::ostream& out) {
      emit_plot_data(out, trajectory_table(run.trajectory), columns);
    });
    runs.push_back({{"seed", run.seed},
                    {"lambda", run.lambda},
                    {"r2", run.fit.r2},
                    {"fit_points", run.fit.points},
                    {"truncated", run.truncated},
                    {"non_exponential", run.non_exponential},
                    {"contradictions", run.trajectory.contradictions}});
  }
  rec.artifact("lyapunov.json", [&](std::ostream& out) {
    out << nlohmann::json{{"alpha", c.alpha},
                          {"lambda", est.lambda},
                          {"lambda_ci95", est.ci},
                          {"flagged", est.flagged},
                          {"runs", runs}}
               .dump(2)
        << '\n';
  });
  return ExitCode::ok;
}

ExitCode run_scan(const ExperimentConfig& c, Recorder& rec) {
  ScanOptions o;
  o.alphas = c.alphas;
  o.arity = c.arity;
  o.L = c.L;
  o.t_max = c.t_max;
  o.t_burn = c.t_burn;
  o.seeds = c.seeds;
  o.sigma_samples = c.sigma_samples;
  const auto scan = rec.stage("scan", [&] { return scan_alpha(o); });
  rec.artifact("scan.csv", [&](std::ostream& out) { write_scan_csv(out, scan); });
  const std::vector<std::string> columns{"alpha", "lambda"};
  rec.artifact("lambda.csv",
               [&](std::ostream& out) { emit_plot_data(out, scan_table(scan), columns); });
  rec.artifact("scan.json", [&](std::ostream& out) { out << scan_json(scan).dump(2) << '\n'; });
  return ExitCode::ok;
}

ExitCode dispatch(const ExperimentConfig& c, Recorder& rec) {
  const auto& s = c.subcommand;
  if (s == "gen") return run_gen(c, rec);
  if (s == "bp") return run_bp(c, rec);
  if (s == "sp") return run_sp(c, rec);
  if (s == "unroll") return run_unroll(c, rec);
  if (s == "probe") return run_probe(c, rec);
  if (s == "popdyn") return run_popdyn(c, rec);
  if (s == "lyapunov") return run_lyapunov(c, rec);
  return run_scan(c, rec);
}

}  // namespace

RunManifest run(const ExperimentConfig& config, std::ostream& log) {
  RunManifest manifest;
  manifest.config = config;
  manifest.version = SPW_VERSION;
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = output_directory(config);
  const auto fail = [&](ExitCode code, const std::string& message) {
    manifest.exit_code = code;
    manifest.message = message;
    log << "error: " << message << '\n';
  };

  try {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    validate(config);
    Recorder rec(dir, manifest, log);
    manifest.exit_code = dispatch(config, rec);
    if (manifest.exit_code == ExitCode::non_convergence) {
      manifest.message = "did not converge";
      log << "did not converge\n";
    }
  } catch (const InvalidParameters& e) {
    fail(ExitCode::invalid_parameters, e.what());
  } catch (const ParseError& e) {
    fail(ExitCode::invalid_parameters, std::string("malformed input: ") + e.what());
  } catch (const ContradictionError& e) {
    fail(ExitCode::contradiction, e.what());
  } catch (const ResourceLimit& e) {
    fail(ExitCode::resource_limit, e.what());
  } catch (const IoError& e) {
    fail(ExitCode::io_error, e.what());
  } catch (const std::exception& e) {
    fail(ExitCode::internal_error, e.what());
  }
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // The manifest is written whenever the directory exists.
  if (std::filesystem::is_directory(dir)) {
    std::ofstream(dir / "config.txt") << to_key_value(config);
    std::ofstream out(dir / "manifest.json");
    out << manifest_json(manifest).dump(2) << '\n';
    if (!out && manifest.exit_code == ExitCode::ok) {
      fail(ExitCode::io_error, "cannot write " + (dir / "manifest.json").string());
    }
  }
  return manifest;
}

PlotTable scan_table(const ScanResult& scan) {
  PlotTable t{{"alpha", {}, false},           {"lambda", {}, true},
              {"lambda_ci", {}, true},         {"Sigma_per_N", {}, true},
              {"Sigma_se", {}, true},          {"frozen_fraction", {}, false}};
  for (const auto& r : scan.rows) {
    t[0].values.push_back(r.alpha);
    t[1].values.push_back(r.lambda);
    t[2].values.push_back(r.lambda_ci);
    t[3].values.push_back(r.sigma_per_var);
    t[4].values.push_back(r.sigma_se);
    t[5].values.push_back(r.frozen_fraction);
  }
  return t;
}

PlotTable trajectory_table(const TrajectoryRecord& record) {
  PlotTable t{{"t", {}, false},
              {"D", {}, true},
              {"mean_s_I", {}, false},
              {"frozen_fraction", {}, false},
              {"Sigma_per_N", {}, true}};
  for (const auto& r : record.rows) {
    t[0].values.push_back(static_cast<double>(r.t));
    t[1].values.push_back(r.distance);
    t[2].values.push_back(r.mean_unfrozen);
    t[3].values.push_back(r.frozen_fraction);
    t[4].values.push_back(r.sigma_per_var);
  }
  return t;
}

void emit_plot_data(std::ostream& out, const PlotTable& table,
                    std::span<const std::string> columns) {
  if (table.empty() || columns.empty()) throw InvalidParameters("nothing to emit");
  std::vector<const PlotColumn*> picked;
  for (const auto& name : columns) {
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const PlotColumn& c) { return c.name == name; });
    if (it == table.end()) throw InvalidParameters("unknown column '" + name + "'");
    picked.push_back(&*it);
  }
  const auto rows = picked.front()->values.size();
  for (const auto* c : picked) {
    if (c->values.size() != rows) throw InvalidParameters("columns have different lengths");
  }
  for (std::size_t k = 0; k < picked.size(); ++k) out << (k ? "," : "") << picked[k]->name;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < picked.size(); ++k) {
      const double v = picked[k]->values[r];
      if (std::isnan(v)) {
        std::snprintf(buf, sizeof buf, "nan");
      } else {
        std::snprintf(buf, sizeof buf, picked[k]->scientific ? "%.10e" : "%.17g", v);
      }
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace spw
