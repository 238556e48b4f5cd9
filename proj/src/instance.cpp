#include "spw/instance.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "spw/error.hpp"
#include "spw/rng.hpp"

namespace spw {

FactorGraph::FactorGraph(std::size_t n_vars, std::span<const Literal> literals)
    : offsets_(n_vars + 1, 0), edges_(literals.size()) {
  for (const auto& lit : literals) ++offsets_[lit.var + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < literals.size(); ++e) {
    edges_[fill[literals[e].var]++] = static_cast<EdgeId>(e);
  }
}

Instance::Instance(std::size_t n_vars, std::size_t arity, std::vector<Literal> literals)
    : n_vars_(n_vars), arity_(arity), literals_(std::move(literals)) {
  if (arity_ < 2) throw InvalidParameters("arity must be at least 2");
  if (literals_.size() % arity_ != 0) {
    throw InvalidParameters("literal count is not a multiple of the arity");
  }
  for (std::size_t c = 0; c < n_clauses(); ++c) {
    auto cl = clause(static_cast<ClauseId>(c));
    for (std::size_t a = 0; a < arity_; ++a) {
      if (cl[a].var >= n_vars_) {
        throw InvalidParameters("clause " + std::to_string(c) + " references variable " +
                                std::to_string(cl[a].var) + " >= n_vars");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (cl[a].var == cl[b].var) {
          throw InvalidParameters("clause " + std::to_string(c) + " repeats variable " +
                                  std::to_string(cl[a].var));
        }
      }
    }
  }
  graph_ = FactorGraph(n_vars_, literals_);
}

Instance::Instance(std::size_t n_vars, std::size_t arity,
                   const std::vector<std::vector<Literal>>& clauses)
    : Instance(n_vars, arity, [&] {
        std::vector<Literal> flat;
        flat.reserve(clauses.size() * arity);
        for (const auto& c : clauses) {
          if (c.size() != arity) throw InvalidParameters("clause arity mismatch");
          flat.insert(flat.end(), c.begin(), c.end());
        }
        return flat;
      }()) {}

Instance Instance::with_flipped_variable(VarId v) const {
  auto lits = literals_;
  for (auto& lit : lits) {
    if (lit.var == v) lit.negated = !lit.negated;
  }
  return Instance(n_vars_, arity_, std::move(lits));
}

Instance generate_random_instance(std::size_t n_vars, double alpha, std::size_t arity,
                                  std::uint64_t seed) {
  if (arity < 2) throw InvalidParameters("arity must be at least 2");
  if (n_vars < arity) throw InvalidParameters("n_vars must be at least the arity");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameters("alpha must be positive");

  const auto m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n_vars)));
  auto rng = make_rng(seed, Stream::instance);
  std::vector<Literal> lits;
  lits.reserve(m * arity);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t begin = lits.size();
    while (lits.size() - begin < arity) {
      const auto v = static_cast<VarId>(uniform_index(rng, n_vars));
      const bool repeat = std::any_of(lits.begin() + static_cast<std::ptrdiff_t>(begin), lits.end(),
                                      [v](const Literal& l) { return l.var == v; });
      if (!repeat) lits.push_back({v, false});
    }
    for (std::size_t a = begin; a < lits.size(); ++a) lits[a].negated = coin(rng);
  }
  return Instance(n_vars, arity, std::move(lits));
}

Instance generate_random_acyclic(std::size_t n_vars, std::size_t n_clauses, std::size_t arity,
                                 std::uint64_t seed) {
  if (arity < 2) throw InvalidParameters("arity must be at least 2");
  if (n_clauses > 0 && n_clauses * (arity - 1) >= n_vars) {
    throw InvalidParameters("too many clauses for a forest on n_vars variables");
  }
  auto rng = make_rng(seed, Stream::instance);
  std::vector<std::size_t> parent(n_vars);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<Literal> lits;
  lits.reserve(n_clauses * arity);
  for (std::size_t c = 0; c < n_clauses; ++c) {
    std::vector<std::size_t> roots;
    std::vector<VarId> vars;
    while (vars.size() < arity) {
      const auto v = static_cast<VarId>(uniform_index(rng, n_vars));
      const auto r = find(v);
      if (std::find(roots.begin(), roots.end(), r) != roots.end()) continue;
      roots.push_back(r);
      vars.push_back(v);
    }
    for (std::size_t a = 1; a < roots.size(); ++a) parent[find(roots[a])] = find(roots[0]);
    for (auto v : vars) lits.push_back({v, coin(rng)});
  }
  return Instance(n_vars, arity, std::move(lits));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Instance parse_dimacs(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t n_vars = 0;
  std::size_t n_declared = 0;
  std::size_t arity = 0;
  std::vector<Literal> lits;
  std::vector<Literal> current;
  std::size_t clauses = 0;

  auto close_clause = [&] {
    if (arity == 0) arity = current.size();
    if (current.size() != arity) {
      throw ParseError(lineno, "clause has " + std::to_string(current.size()) +
                                   " literals, expected " + std::to_string(arity));
    }
    for (std::size_t a = 0; a < current.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        if (current[a].var == current[b].var) {
          throw ParseError(lineno, "variable " + std::to_string(current[a].var + 1) +
                                       " repeated within a clause");
        }
      }
    }
    lits.insert(lits.end(), current.begin(), current.end());
    current.clear();
    ++clauses;
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == 'c') continue;
    if (t[0] == '%') break;  // SATLIB trailer
    if (t[0] == 'p') {
      if (have_header) throw ParseError(lineno, "duplicate header");
      std::istringstream hs(t);
      std::string p, fmt;
      long long nv = -1, nc = -1;
      std::string extra;
      if (!(hs >> p >> fmt >> nv >> nc) || p != "p" || fmt != "cnf" || nv < 0 || nc < 0 ||
          (hs >> extra)) {
        throw ParseError(lineno, "malformed header, expected 'p cnf <vars> <clauses>'");
      }
      n_vars = static_cast<std::size_t>(nv);
      n_declared = static_cast<std::size_t>(nc);
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(lineno, "clause before 'p cnf' header");
    std::istringstream ls(t);
    std::string tok;
    while (ls >> tok) {
      long long v = 0;
      std::size_t used = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError(lineno, "unexpected token '" + tok + "'");
      if (v == 0) {
        close_clause();
        continue;
      }
      const auto mag = static_cast<std::size_t>(v < 0 ? -v : v);
      if (mag > n_vars) {
        throw ParseError(lineno, "variable " + std::to_string(mag) + " out of range 1.." +
                                     std::to_string(n_vars));
      }
      current.push_back({static_cast<VarId>(mag - 1), v < 0});
    }
  }
  if (!have_header) throw ParseError(std::max<std::size_t>(lineno, 1), "missing 'p cnf' header");
  if (!current.empty()) throw ParseError(lineno, "last clause not terminated by 0");
  if (clauses != n_declared) {
    throw ParseError(lineno, "header declares " + std::to_string(n_declared) + " clauses, found " +
                                 std::to_string(clauses));
  }
  if (arity == 0) arity = 3;
  if (arity < 2) throw ParseError(lineno, "clause arity must be at least 2");
  return Instance(n_vars, arity, std::move(lits));
}

Instance parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

void write_dimacs(std::ostream& out, const Instance& instance) {
  out << "p cnf " << instance.n_vars() << ' ' << instance.n_clauses() << '\n';
  for (std::size_t c = 0; c < instance.n_clauses(); ++c) {
    for (const auto& lit : instance.clause(static_cast<ClauseId>(c))) {
      out << (lit.negated ? "-" : "") << lit.var + 1 << ' ';
    }
    out << "0\n";
  }
}

std::string write_dimacs(const Instance& instance) {
  std::ostringstream out;
  write_dimacs(out, instance);
  return out.str();
}

std::size_t evaluate(const Instance& instance, const Assignment& assignment) {
  if (assignment.values.size() != instance.n_vars()) {
    throw InvalidParameters("assignment length " + std::to_string(assignment.values.size()) +
                            " != n_vars " + std::to_string(instance.n_vars()));
  }
  std::size_t violated = 0;
  for (std::size_t c = 0; c < instance.n_clauses(); ++c) {
    const auto cl = instance.clause(static_cast<ClauseId>(c));
    const bool sat = std::any_of(cl.begin(), cl.end(), [&](const Literal& l) {
      return l.satisfied_by(assignment.values[l.var]);
    });
    if (!sat) ++violated;
  }
  return violated;
}

namespace {

/// BFS distances in the variable graph; unreachable = SIZE_MAX.
std::vector<std::size_t> bfs_distances(const Instance& instance, VarId source, std::size_t limit) {
  constexpr auto kInf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(instance.n_vars(), kInf);
  std::queue<VarId> queue;
  dist[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop();
    if (dist[v] >= limit) continue;
    for (auto e : instance.graph().edges_of(v)) {
      for (const auto& lit : instance.clause(instance.clause_of(e))) {
        if (dist[lit.var] == kInf) {
          dist[lit.var] = dist[v] + 1;
          queue.push(lit.var);
        }
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::vector<VarId>> shells(const Instance& instance, VarId node, std::size_t depth) {
  if (node >= instance.n_vars()) throw InvalidParameters("node out of range");
  std::vector<std::vector<VarId>> out(depth);
  const auto dist = bfs_distances(instance, node, depth);
  for (VarId v = 0; v < instance.n_vars(); ++v) {
    if (dist[v] >= 1 && dist[v] <= depth) out[dist[v] - 1].push_back(v);
  }
  return out;
}

std::size_t variable_diameter(const Instance& instance) {
  std::size_t best = 0;
  for (VarId v = 0; v < instance.n_vars(); ++v) {
    for (auto d : bfs_distances(instance, v, static_cast<std::size_t>(-1))) {
      if (d != static_cast<std::size_t>(-1)) best = std::max(best, d);
    }
  }
  return best;
}

AcyclicityReport is_acyclic(const Instance& instance) {
  // Nodes 0..N-1 are variables, N..N+M-1 clauses.
  const std::size_t n = instance.n_vars();
  const std::size_t total = n + instance.n_clauses();
  std::vector<std::size_t> parent(total);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<std::size_t>> forest(total);

  for (EdgeId e = 0; e < instance.literals().size(); ++e) {
    const std::size_t a = instance.literal(e).var;
    const std::size_t b = n + instance.clause_of(e);
    const auto ra = find(a);
    const auto rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      forest[a].push_back(b);
      forest[b].push_back(a);
      continue;
    }
    // Path b -> a in the forest closes the cycle with edge (a, b).
    std::vector<std::size_t> prev(total, total);
    std::queue<std::size_t> queue;
    prev[b] = b;
    queue.push(b);
    while (!queue.empty() && prev[a] == total) {
      const auto x = queue.front();
      queue.pop();
      for (auto y : forest[x]) {
        if (prev[y] == total) {
          prev[y] = x;
          queue.push(y);
        }
      }
    }
    AcyclicityReport report{false, {}};
    for (std::size_t x = a;; x = prev[x]) {
      report.cycle.push_back({x >= n, static_cast<std::uint32_t>(x >= n ? x - n : x)});
      if (x == b) break;
    }
    return report;
  }
  return {};
}

nlohmann::json summary_json(const Instance& instance, std::optional<std::uint64_t> seed) {
  nlohmann::json j{{"n_vars", instance.n_vars()},
                   {"m_clauses", instance.n_clauses()},
                   {"arity", instance.arity()},
                   {"alpha", instance.alpha()}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

}  // namespace spw
