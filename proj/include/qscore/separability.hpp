#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"

namespace qscore {

// A partition of all tuples of an instance such that the minimal
// satisfying sets of the whole instance are exactly the union of the
// blocks' minimal satisfying sets (each computed on the block alone).
struct SeparablePartition {
  std::vector<std::vector<std::string>> blocks;  // disjoint, cover D
};

// Builds the partition from co-occurrence in minimal witnesses (including
// their exogenous support), collects tuples appearing in no witness into a
// residual block, verifies the defining equation, and falls back to the
// single-block partition when verification fails.
SeparablePartition find_separable_partition(const Query& q, const Instance& d);

// Minimum number of endogenous tuples from `subset` whose removal
// falsifies the query evaluated on `subset` alone. Iterative deepening; 0
// when the query is already false there. Throws NotFalsifiableError when
// no removal works (the minimum is infinite).
int resilience_r(const Query& q, const Instance& d,
                 const std::vector<std::string>& subset);

// Responsibility and causal effect of τ computed compositionally from τ's
// block and the complement:
//   resp = ρ_block / (1 + ρ_block · r(complement))   (0 when ρ_block = 0,
//          or when the complement is not falsifiable at all)
//   ces  = ce_block · (1 − P_complement(Q))
// under the uniform-1/2 tuple-independent distribution. Agrees with the
// directly computed global scores on any valid partition.
std::pair<Rational, Rational> compositional_scores(
    const Query& q, const Instance& d, const SeparablePartition& partition,
    const std::string& tuple_id);

}  // namespace qscore
