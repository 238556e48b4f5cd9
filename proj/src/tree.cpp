#include "spw/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>

#include <nlohmann/json.hpp>

#include "spw/error.hpp"
#include "spw/rng.hpp"

namespace spw {

std::size_t RootedTree::open_clauses(NodeId node) const {
  const auto& n = nodes_[node];
  const auto degree = instance_->graph().degree(n.mapped_var);
  return n.parent == kNone ? degree : degree - 1;
}

std::vector<NodeId> RootedTree::hanging_nodes(std::size_t depth) const {
  if (depth > k_max_) throw InvalidParameters("depth exceeds the tree's k_max");
  std::vector<NodeId> out;
  if (depth == 0) return out;
  for (NodeId id = shells_[depth]; id < shells_[depth + 1]; ++id) {
    if (open_clauses(id) > 0) out.push_back(id);
  }
  return out;
}

std::vector<double> unrolled_shell_sizes(const Instance& instance, VarId root, std::size_t k_max) {
  if (root >= instance.n_vars()) throw InvalidParameters("root variable out of range");
  const auto& g = instance.graph();
  const std::size_t k = instance.arity();
  // walks[e]: number of depth-d nodes that arrived through edge e.
  std::vector<double> walks(instance.literals().size(), 0.0), next(walks.size());
  std::vector<double> sizes{1.0};
  const auto spread = [&](ClauseId c, std::size_t from_slot, double count) {
    for (std::size_t s = 0; s < k; ++s) {
      if (s != from_slot) next[instance.edge(c, s)] += count;
    }
  };
  if (k_max == 0) return sizes;
  std::fill(next.begin(), next.end(), 0.0);
  for (auto d : g.edges_of(root)) spread(instance.clause_of(d), instance.slot_of(d), 1.0);
  for (std::size_t depth = 1;; ++depth) {
    walks.swap(next);
    sizes.push_back(std::accumulate(walks.begin(), walks.end(), 0.0));
    if (depth == k_max) break;
    std::fill(next.begin(), next.end(), 0.0);
    for (EdgeId e = 0; e < walks.size(); ++e) {
      if (walks[e] == 0.0) continue;
      for (auto d : g.edges_of(instance.literal(e).var)) {
        if (d != e) spread(instance.clause_of(d), instance.slot_of(d), walks[e]);
      }
    }
  }
  return sizes;
}

RootedTree unroll(const Instance& instance, VarId root, std::size_t k_max, std::size_t node_cap) {
  const auto sizes = unrolled_shell_sizes(instance, root, k_max);
  const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (total > static_cast<double>(node_cap) ||
      total > static_cast<double>(std::numeric_limits<NodeId>::max() - 1)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "unrolled tree would have %.6g nodes, above the cap of %zu",
                  total, node_cap);
    throw ResourceLimit(total, buf);
  }

  RootedTree tree;
  tree.instance_ = &instance;
  tree.k_max_ = k_max;
  tree.nodes_.reserve(static_cast<std::size_t>(total));
  tree.nodes_.push_back(TreeNode{root, kNone, 0, 0, 0});
  tree.shells_ = {0, 1};
  const auto& g = instance.graph();
  const std::size_t k = instance.arity();

  for (std::size_t depth = 0; depth < k_max; ++depth) {
    for (NodeId id = tree.shells_[depth]; id < tree.shells_[depth + 1]; ++id) {
      const auto var = tree.nodes_[id].mapped_var;
      const auto parent = tree.nodes_[id].parent;
      const auto skip = parent == kNone ? std::numeric_limits<ClauseId>::max()
                                        : tree.replicas_[parent].original;
      tree.nodes_[id].first_child = static_cast<ReplicaId>(tree.replicas_.size());
      for (auto e : g.edges_of(var)) {
        const auto c = instance.clause_of(e);
        if (c == skip) continue;
        const auto rid = static_cast<ReplicaId>(tree.replicas_.size());
        const auto slot = static_cast<std::uint32_t>(instance.slot_of(e));
        tree.replicas_.push_back({c, id, slot, static_cast<NodeId>(tree.nodes_.size())});
        for (std::size_t s = 0; s < k; ++s) {
          if (s == slot) continue;
          tree.nodes_.push_back(TreeNode{instance.literal(instance.edge(c, s)).var, rid,
                                         static_cast<std::uint32_t>(depth + 1), 0, 0});
        }
        ++tree.nodes_[id].n_children;
      }
    }
    tree.shells_.push_back(static_cast<NodeId>(tree.nodes_.size()));
  }
  // Unexpanded nodes point past the replica list with no children.
  for (NodeId id = tree.shells_[k_max]; id < tree.nodes_.size(); ++id) {
    tree.nodes_[id].first_child = static_cast<ReplicaId>(tree.replicas_.size());
  }
  return tree;
}

BoundaryCondition uniform_boundary(const RootedTree& tree, std::size_t depth, Survey value) {
  return {std::vector<Survey>(tree.hanging_nodes(depth).size(), value)};
}

BoundaryCondition random_boundary(const RootedTree& tree, std::size_t depth, Rng& rng) {
  BoundaryCondition b;
  b.surveys.resize(tree.hanging_nodes(depth).size());
  for (auto& s : b.surveys) s = random_simplex_survey(rng);
  return b;
}

InwardResult propagate_inward(const RootedTree& tree, const BoundaryCondition& boundary,
                              std::size_t depth) {
  const auto hanging = tree.hanging_nodes(depth);
  if (boundary.surveys.size() != hanging.size()) {
    throw InvalidParameters("boundary has " + std::to_string(boundary.surveys.size()) +
                            " surveys, the truncation has " + std::to_string(hanging.size()) +
                            " hanging nodes");
  }
  const auto& inst = tree.instance();
  const std::size_t k = inst.arity();
  InwardResult result;
  result.node_surveys.assign(tree.nodes().size(), kUnfrozen);
  auto& out = result.node_surveys;
  for (std::size_t b = 0; b < hanging.size(); ++b) out[hanging[b]] = boundary.surveys[b];

  // Children always have larger ids, so a descending sweep is leaf to root.
  for (NodeId id = tree.shell_begin(depth); id-- > 0;) {
    const auto& node = tree.node(id);
    Triple acc = kUnfrozen.vec();
    for (ReplicaId r = node.first_child; r < node.first_child + node.n_children; ++r) {
      const auto& rep = tree.replica(r);
      double w = 1.0;
      NodeId child = rep.first_child;
      for (std::size_t s = 0; s < k; ++s) {
        if (s == rep.parent_slot) continue;
        w *= out[child++].violating(inst.literal(inst.edge(rep.original, s)));
        ++result.edge_touches;
      }
      acc = survey_product(acc, survey_warning(inst.literal(inst.edge(rep.original, rep.parent_slot)), w).vec());
      ++result.edge_touches;
    }
    const std::size_t clause = node.parent == kNone ? ContradictionError::npos
                                                    : tree.replica(node.parent).original;
    out[id] = normalize(acc, node.mapped_var, clause);
  }
  result.root = out[0];
  return result;
}

InwardResult propagate_inward(const RootedTree& tree, const BoundaryCondition& boundary) {
  return propagate_inward(tree, boundary, tree.k_max());
}

namespace {

double l1(const Survey& a, const Survey& b) {
  return std::abs(a.t - b.t) + std::abs(a.i - b.i) + std::abs(a.f - b.f);
}

}  // namespace

ProbeResult uniqueness_probe(const RootedTree& tree, std::span<const std::uint64_t> boundary_seeds) {
  if (boundary_seeds.size() < 2) throw InvalidParameters("need at least two boundaries");
  ProbeResult probe;
  for (std::size_t depth = 1; depth <= tree.k_max(); ++depth) {
    DispersionRow row;
    row.k = depth;
    std::vector<Survey> roots;
    for (auto seed : boundary_seeds) {
      auto rng = make_rng(seed, Stream::boundary, depth);
      const auto boundary = random_boundary(tree, depth, rng);
      try {
        roots.push_back(propagate_inward(tree, boundary, depth).root);
      } catch (const ContradictionError&) {
        ++row.contradictions;
      }
    }
    row.n_boundaries = roots.size();
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < roots.size(); ++a) {
      for (std::size_t b = a + 1; b < roots.size(); ++b) {
        const double d = l1(roots[a], roots[b]);
        sum += d;
        row.max_dist = std::max(row.max_dist, d);
        ++pairs;
      }
    }
    row.mean_dist = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    if (roots.empty()) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mean_root = {nan, nan, nan};
    } else {
      Survey m{0.0, 0.0, 0.0};
      for (const auto& s : roots) {
        m.t += s.t;
        m.i += s.i;
        m.f += s.f;
      }
      const auto n = static_cast<double>(roots.size());
      row.mean_root = {m.t / n, m.i / n, m.f / n};
    }
    probe.rows.push_back(row);
  }
  return probe;
}

ProbeResult uniqueness_probe(const RootedTree& tree, std::size_t n_boundaries, std::uint64_t seed) {
  if (n_boundaries < 2) throw InvalidParameters("need at least two boundaries");
  std::vector<std::uint64_t> seeds(n_boundaries);
  auto rng = make_rng(seed, Stream::boundary);
  for (auto& s : seeds) s = rng();
  return uniqueness_probe(tree, seeds);
}

std::vector<ComparisonRow> compare_with_instance(const ProbeResult& probe, const SpResult& sp,
                                                 VarId root) {
  if (sp.classification == SpClass::non_convergent) {
    throw InvalidParameters("the instance solution did not converge");
  }
  const auto local = local_survey(sp.state, root);
  std::vector<ComparisonRow> rows;
  for (const auto& r : probe.rows) rows.push_back({r.k, l1(r.mean_root, local)});
  return rows;
}

IsomorphismReport check_local_isomorphism(const RootedTree& tree) {
  const auto& inst = tree.instance();
  const std::size_t k = inst.arity();
  using Incidence = std::pair<ClauseId, std::uint32_t>;
  std::vector<Incidence> seen, expected;
  for (NodeId id = 0; id < tree.nodes().size(); ++id) {
    const auto& node = tree.node(id);
    if (node.depth >= tree.k_max()) {
      if (node.n_children != 0) return {false, "node " + std::to_string(id) + " beyond k_max has children"};
      continue;
    }
    seen.clear();
    expected.clear();
    if (node.parent != kNone) {
      // Children fill the parent replica's slots in order, skipping its parent slot.
      const auto& p = tree.replica(node.parent);
      const auto pos = id - p.first_child;
      seen.emplace_back(p.original, pos < p.parent_slot ? pos : pos + 1);
    }
    for (ReplicaId r = node.first_child; r < node.first_child + node.n_children; ++r) {
      const auto& rep = tree.replica(r);
      if (rep.parent != id) return {false, "replica " + std::to_string(r) + " has the wrong parent"};
      seen.emplace_back(rep.original, rep.parent_slot);
      NodeId child = rep.first_child;
      for (std::size_t s = 0; s < k; ++s) {
        const auto& lit = inst.literal(inst.edge(rep.original, s));
        if (s == rep.parent_slot) {
          if (lit.var != node.mapped_var) {
            return {false, "replica " + std::to_string(r) + " parent slot maps elsewhere"};
          }
          continue;
        }
        const auto& c = tree.node(child);
        if (c.mapped_var != lit.var || c.parent != r || c.depth != node.depth + 1) {
          return {false, "node " + std::to_string(child) + " does not match its clause slot"};
        }
        ++child;
      }
    }
    for (auto e : inst.graph().edges_of(node.mapped_var)) {
      expected.emplace_back(inst.clause_of(e), static_cast<std::uint32_t>(inst.slot_of(e)));
    }
    std::sort(seen.begin(), seen.end());
    std::sort(expected.begin(), expected.end());
    if (seen != expected) {
      return {false, "node " + std::to_string(id) + " neighbourhood differs from variable " +
                         std::to_string(node.mapped_var)};
    }
  }
  return {};
}

IsomorphismReport check_instance_isomorphism(const RootedTree& tree) {
  auto local = check_local_isomorphism(tree);
  if (!local.ok) return local;
  const auto& inst = tree.instance();
  for (NodeId id = tree.shell_begin(tree.k_max()); id < tree.nodes().size(); ++id) {
    if (tree.open_clauses(id) > 0) return {false, "tree is not fully expanded at k_max"};
  }
  // Component of the root by breadth-first search on the factor graph.
  std::vector<char> var_in(inst.n_vars(), 0), clause_in(inst.n_clauses(), 0);
  std::vector<VarId> queue{tree.root_var()};
  var_in[tree.root_var()] = 1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    for (auto e : inst.graph().edges_of(queue[q])) {
      const auto c = inst.clause_of(e);
      if (clause_in[c]) continue;
      clause_in[c] = 1;
      for (const auto& lit : inst.clause(c)) {
        if (!var_in[lit.var]) {
          var_in[lit.var] = 1;
          queue.push_back(lit.var);
        }
      }
    }
  }
  std::vector<std::size_t> var_hits(inst.n_vars(), 0), clause_hits(inst.n_clauses(), 0);
  for (const auto& n : tree.nodes()) ++var_hits[n.mapped_var];
  for (const auto& r : tree.replicas()) ++clause_hits[r.original];
  for (VarId v = 0; v < inst.n_vars(); ++v) {
    if (var_hits[v] != (var_in[v] ? 1u : 0u)) {
      return {false, "variable " + std::to_string(v) + " appears " + std::to_string(var_hits[v]) + " times"};
    }
  }
  for (ClauseId c = 0; c < inst.n_clauses(); ++c) {
    if (clause_hits[c] != (clause_in[c] ? 1u : 0u)) {
      return {false, "clause " + std::to_string(c) + " appears " + std::to_string(clause_hits[c]) + " times"};
    }
  }
  return {};
}

void write_tree_jsonl(std::ostream& out, const RootedTree& tree) {
  for (NodeId id = 0; id < tree.nodes().size(); ++id) {
    const auto& n = tree.node(id);
    nlohmann::json j{{"node", id}, {"mapped_var", n.mapped_var}, {"depth", n.depth}};
    j["parent_clause"] = n.parent == kNone ? nlohmann::json(nullptr)
                                           : nlohmann::json(tree.replica(n.parent).original);
    out << j.dump() << '\n';
  }
}

void write_dispersion_csv(std::ostream& out, const ProbeResult& probe) {
  out << "k,mean_dist,max_dist,n_boundaries\n";
  char buf[128];
  for (const auto& r : probe.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\n", r.k, r.mean_dist, r.max_dist,
                  r.n_boundaries);
    out << buf;
  }
}

}  // namespace spw
