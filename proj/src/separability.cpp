#include "qscore/separability.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "qscore/error.hpp"
#include "qscore/eval.hpp"
#include "qscore/scores.hpp"
#include "qscore/worlds.hpp"

namespace qscore {

namespace {

// Witness masks of the query on a subinstance, translated back to the
// enclosing instance's endogenous numbering.
std::set<std::uint64_t> mss_masks_in(const Query& q, const Instance& whole,
                                     const Instance& sub) {
  std::set<std::uint64_t> out;
  Evaluator ev(q, sub);
  for (std::uint64_t m : ev.witness_masks())
    out.insert(world_mask_from_ids(whole, world_ids_from_mask(sub, m)));
  return out;
}

}  // namespace

SeparablePartition find_separable_partition(const Query& q,
                                            const Instance& d) {
  Evaluator ev(q, d);

  // Union-find over tuples that co-occur in some minimal witness
  // (exogenous support included, so shared exogenous facts merge blocks).
  int n = static_cast<int>(d.tuples.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::vector<bool> used(n, false);
  for (const Witness& w : ev.images()) {
    for (int ti : w.tuple_indices) used[ti] = true;
    for (std::size_t i = 1; i < w.tuple_indices.size(); ++i)
      parent[find(w.tuple_indices[i])] = find(w.tuple_indices[0]);
  }

  SeparablePartition part;
  std::map<int, int> block_of_root;
  std::vector<std::string> residual;
  for (int i = 0; i < n; ++i) {
    if (!used[i]) {
      residual.push_back(d.tuples[i].id);
      continue;
    }
    auto [it, fresh] =
        block_of_root.emplace(find(i), static_cast<int>(part.blocks.size()));
    if (fresh) part.blocks.emplace_back();
    part.blocks[it->second].push_back(d.tuples[i].id);
  }
  if (!residual.empty()) part.blocks.push_back(std::move(residual));

  // The partition is valid when the blocks' minimal satisfying sets,
  // computed in isolation, are together exactly the global ones.
  std::set<std::uint64_t> global(ev.witness_masks().begin(),
                                 ev.witness_masks().end());
  std::set<std::uint64_t> combined;
  for (const auto& block : part.blocks) {
    Instance sub = d.subinstance(block);
    for (std::uint64_t m : mss_masks_in(q, d, sub)) combined.insert(m);
  }
  if (combined != global) {
    // Merging everything always satisfies the defining equation.
    SeparablePartition single;
    std::vector<std::string> all;
    for (const auto& t : d.tuples) all.push_back(t.id);
    if (!all.empty()) single.blocks.push_back(std::move(all));
    return single;
  }
  return part;
}

int resilience_r(const Query& q, const Instance& d,
                 const std::vector<std::string>& subset) {
  Instance sub = d.subinstance(subset);
  Evaluator ev(q, sub);
  int n = ev.endo_count();
  std::uint64_t full = ev.full_mask();
  if (!ev.eval(full)) return 0;
  // Iterative deepening over removal-set sizes.
  auto rec = [&](auto&& self, int start, int remaining, std::uint64_t gamma)
      -> bool {
    if (remaining == 0) return !ev.eval(full & ~gamma);
    for (int i = start; i + remaining <= n; ++i)
      if (self(self, i + 1, remaining - 1, gamma | (1ull << i))) return true;
    return false;
  };
  for (int k = 1; k <= n; ++k)
    if (rec(rec, 0, k, 0)) return k;
  throw NotFalsifiableError(
      "the query cannot be falsified by removals within the given tuple set "
      "(its resilience there is infinite)");
}

std::pair<Rational, Rational> compositional_scores(
    const Query& q, const Instance& d, const SeparablePartition& partition,
    const std::string& tuple_id) {
  // The blocks must partition the instance exactly.
  std::set<std::string> seen;
  for (const auto& block : partition.blocks)
    for (const auto& id : block) {
      d.tuple_index(id);
      if (!seen.insert(id).second)
        throw DomainError("partition lists tuple " + id + " twice");
    }
  if (seen.size() != d.tuples.size())
    throw DomainError("partition does not cover the instance");

  const Tuple& t = d.tuple_by_id(tuple_id);
  if (!t.endo)
    throw DomainError("compositional scores are defined for endogenous "
                      "tuples; " + tuple_id + " is exogenous");

  const std::vector<std::string>* home = nullptr;
  for (const auto& block : partition.blocks)
    if (std::find(block.begin(), block.end(), tuple_id) != block.end())
      home = &block;
  if (!home) throw DomainError("no block contains tuple " + tuple_id);

  Instance block_sub = d.subinstance(*home);
  Rational rho_block = responsibility(q, block_sub, tuple_id).first;
  Rational ce_block = ces(q, block_sub, tuple_id);

  std::set<std::string> home_ids(home->begin(), home->end());
  std::vector<std::string> complement;
  for (const auto& tu : d.tuples)
    if (!home_ids.count(tu.id)) complement.push_back(tu.id);

  Rational resp;
  if (rho_block == 0) {
    resp = 0;
  } else {
    try {
      int r = resilience_r(q, d, complement);
      resp = rho_block / (1 + rho_block * r);
    } catch (const NotFalsifiableError&) {
      resp = 0;  // the rest keeps the query true no matter what
    }
  }

  Instance comp_sub = d.subinstance(complement);
  Rational p_rest =
      PdbDistribution::uniform_half_tid(comp_sub).query_probability(q);
  Rational ce = ce_block * (Rational(1) - p_rest);
  return {resp, ce};
}

}  // namespace qscore
