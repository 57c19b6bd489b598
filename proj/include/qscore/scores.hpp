#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"

namespace qscore {

enum class ScoreKind { Ces, Bpi, Shapley, Resp };

const char* score_kind_name(ScoreKind k);
ScoreKind score_kind_from_name(const std::string& name);  // DomainError

struct ScoreOptions {
  // Exhaustive world enumeration refuses (never truncates) beyond this
  // many endogenous tuples.
  int max_endo = 26;
  // Bound on contingency-set size explored by responsibility; defaults to
  // the number of endogenous tuples (i.e. unbounded).
  std::optional<int> max_contingency;
};

// Smallest contingency set found for a tuple: removing exactly these
// endogenous tuples makes the tuple count(erfactual). Ids in load order.
struct ContingencyWitness {
  std::vector<std::string> ids;
};

// Q[S ∪ D^ex ∪ {τ}] − Q[S ∪ D^ex] for S given by endogenous ids not
// containing τ; τ must be endogenous. Value is 0 or 1 by monotonicity.
Rational delta(const Query& q, const Instance& d,
               const std::vector<std::string>& world_ids,
               const std::string& tuple_id);

Rational shapley(const Query& q, const Instance& d, const std::string& tuple_id,
                 const ScoreOptions& opts = {});
Rational bpi(const Query& q, const Instance& d, const std::string& tuple_id,
             const ScoreOptions& opts = {});
// Causal effect: E[Q | do(τ in)] − E[Q | do(τ out)] under the uniform-1/2
// tuple-independent distribution. Computed through the intervention
// pushforwards; coincides with bpi.
Rational ces(const Query& q, const Instance& d, const std::string& tuple_id,
             const ScoreOptions& opts = {});

// 1 / (1 + min |Γ|) over contingency sets Γ ⊆ D^en ∖ {τ} such that τ
// swings Q on D ∖ Γ; 0 when no contingency set exists. Iterative
// deepening over sizes, subsets in index order; the first witness found is
// returned.
std::pair<Rational, std::optional<ContingencyWitness>> responsibility(
    const Query& q, const Instance& d, const std::string& tuple_id,
    const ScoreOptions& opts = {});

// Worlds (endogenous parts, as id lists) in which τ is present and
// critical; ordered by world bitmask.
std::vector<std::vector<std::string>> swinging_sets(
    const Query& q, const Instance& d, const std::string& tuple_id,
    const ScoreOptions& opts = {});

// Minimal satisfying endogenous sets, ordered by world bitmask.
std::vector<std::vector<std::string>> mss(const Query& q, const Instance& d,
                                          const ScoreOptions& opts = {});

bool is_dummy(const Query& q, const Instance& d, const std::string& tuple_id,
              const ScoreOptions& opts = {});

struct ScoreRow {
  std::string id;
  std::string relation;
  std::vector<std::string> values;
  std::map<ScoreKind, Rational> scores;
  std::optional<ContingencyWitness> resp_witness;
};

struct ScoreReport {
  std::vector<ScoreKind> kinds;
  std::vector<ScoreRow> rows;  // endogenous tuples in load order

  const ScoreRow& row(const std::string& id) const;  // DomainError
  std::string render_table() const;
  std::string render_csv() const;
  nlohmann::json to_json() const;
};

// All requested scores for every endogenous tuple. One exhaustive sweep
// serves ces/bpi/shapley; responsibility runs per tuple.
ScoreReport score_table(const Query& q, const Instance& d,
                        const std::vector<ScoreKind>& kinds,
                        const ScoreOptions& opts = {});

}  // namespace qscore
