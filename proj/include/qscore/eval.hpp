#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qscore/model.hpp"
#include "qscore/query.hpp"

namespace qscore {

// A minimal witness: a set of tuples whose joint presence satisfies the
// query, such that no endogenous tuple can be dropped from it. `endo_mask`
// has one bit per endogenous tuple (bit = Tuple::endo_index, load order);
// `tuple_indices` additionally records the exogenous support, which block
// decomposition needs.
struct Witness {
  std::uint64_t endo_mask = 0;
  std::vector<int> tuple_indices;
};

// Compiles a query against an instance into its minimal witnesses, after
// which evaluating any world is a subset test. Exogenous tuples are folded
// in up front (they are present in every world). For conjunctive queries
// witnesses are homomorphism images; for reachability they are simple
// paths from source to target.
class Evaluator {
 public:
  // Throws DomainError when an atom's arity disagrees with the relation's
  // declared arity. A relation absent from the instance is treated as
  // empty (the query is then unsatisfiable through that atom).
  Evaluator(const Query& q, const Instance& d);

  int endo_count() const { return n_; }
  std::uint64_t full_mask() const {
    return n_ == 64 ? ~0ull : (1ull << n_) - 1;
  }

  // World given as a set of endogenous bits.
  bool eval(std::uint64_t world_mask) const;

  // (satisfied, intersection of all contained witness masks). The second
  // component is the set of tuples whose removal would falsify the world;
  // meaningful only when satisfied.
  std::pair<bool, std::uint64_t> sat_and_critical(std::uint64_t world_mask) const;

  // Witnesses that are minimal on their endogenous part, deduplicated by
  // mask for evaluation; `images()` keeps one entry per distinct support.
  const std::vector<std::uint64_t>& witness_masks() const { return masks_; }
  const std::vector<Witness>& images() const { return images_; }

  const Instance& instance() const { return *d_; }

 private:
  const Instance* d_;
  int n_ = 0;
  std::vector<std::uint64_t> masks_;
  std::vector<Witness> images_;
};

// Q[w ∪ D^ex] for a world given by endogenous tuple ids. Ids must name
// endogenous tuples of d; anything else throws DomainError.
bool evaluate(const Query& q, const Instance& d,
              const std::vector<std::string>& world_ids);

std::uint64_t world_mask_from_ids(const Instance& d,
                                  const std::vector<std::string>& ids);
std::vector<std::string> world_ids_from_mask(const Instance& d,
                                             std::uint64_t mask);

}  // namespace qscore
