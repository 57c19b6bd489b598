#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"
#include "qscore/scores.hpp"

namespace qscore {

// Two scores are aligned on an instance when no pair of endogenous tuples
// is ranked strictly oppositely: sc1(a) < sc1(b) while sc2(a) > sc2(b).
struct AlignmentWitness {
  std::string id_a, id_b;  // sc1: a strictly below b; sc2: a strictly above b
  Rational sc1_a, sc1_b, sc2_a, sc2_b;
};

struct AlignmentVerdict {
  bool aligned = true;
  ScoreKind sc1 = ScoreKind::Ces, sc2 = ScoreKind::Resp;
  std::optional<AlignmentWitness> witness;  // first violating pair
};

// Scans ordered pairs (i, j), i < j in tuple load order, and reports the
// first strict reversal found (in either orientation).
AlignmentVerdict check_alignment(const Query& q, const Instance& d,
                                 ScoreKind sc1, ScoreKind sc2,
                                 const ScoreOptions& opts = {});

// Seeded random search for a violating instance over the query's own
// schema: up to `trials` instances with at most 10 endogenous tuples over
// a domain of at most 4 constants. Deterministic for a fixed seed.
struct SearchResult {
  Instance instance;
  AlignmentVerdict verdict;
  std::uint64_t seed = 0;
  int trial = 0;  // 1-based index of the violating instance
};
std::optional<SearchResult> random_alignment_search(
    const Query& q, ScoreKind sc1, ScoreKind sc2, int trials,
    std::uint64_t seed, const ScoreOptions& opts = {});

enum class CounterexampleMode {
  // Single-component query, only trivial coincidence cells, >= 2
  // variables: lift the two-relation seed through a chosen variable pair.
  SingleComponent,
  // >= 2 components, one with >= 2 atoms: plant a reversal between a
  // multi-atom component and a neighbouring component.
  MultiComponent,
  // Two atoms with overlapping, mutually non-contained variable sets:
  // plant a (shapley vs ces) and (shapley vs resp) reversal.
  ShapleyVsCesResp,
};
const char* counterexample_mode_name(CounterexampleMode m);
CounterexampleMode counterexample_mode_from_name(const std::string& name);

struct CounterexampleResult {
  Instance instance;
  // Human-readable record of the mode and the atoms/variables the
  // deterministic scan selected; also embedded in the serialized instance
  // as a "comment" header.
  std::string provenance;
  AlignmentVerdict verdict;                  // the verified reversal
  std::vector<AlignmentVerdict> extra;       // secondary checks, if any
};

// Builds an instance over q's schema on which the mode's target score
// pairs disagree, then verifies it by brute force. Throws HypothesisError
// when q does not satisfy the mode's hypothesis (the failed condition is
// named) and VerificationError when the constructed instance does not
// exhibit the reversal (never returned silently).
CounterexampleResult build_counterexample(const Query& q,
                                          CounterexampleMode mode);

// Serializes with the provenance comment header; the result is a valid
// instance document (loaders ignore the extra fields).
std::string counterexample_to_text(const CounterexampleResult& r);

}  // namespace qscore
