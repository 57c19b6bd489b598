#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qscore/eval.hpp"
#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"

namespace qscore {

enum class Intervention { In, Out };

// A probability distribution over worlds (subsets of the endogenous
// tuples) of a fixed instance. Two storage forms:
//   * product form: independent per-tuple marginals, plus forced-in /
//     forced-out bits accumulated by interventions (the pushforward of a
//     tuple-independent distribution stays in this form symbolically);
//   * explicit form: a sparse world -> probability map.
// The distribution keeps a pointer to its instance; the instance must
// outlive it.
class PdbDistribution {
 public:
  enum class Kind { Tid, Explicit };

  // Every endogenous tuple present/absent with probability 1/2.
  static PdbDistribution uniform_half_tid(const Instance& d);
  // Marginals from the tuples' `p` fields (endogenous default 1/2;
  // exogenous must be 1 when given).
  static PdbDistribution tid_from_instance(const Instance& d);
  // {"worlds":[{"tuples":["t1","t3"],"p":"0.20"}, ...]}; unlisted worlds
  // have probability 0; listed worlds must be distinct subsets of the
  // endogenous tuples and the probabilities must sum to 1.
  static PdbDistribution load_explicit(const Instance& d,
                                       const nlohmann::json& doc);
  static PdbDistribution load_explicit_text(const Instance& d,
                                            const std::string& text);

  // Kind::Tid only while no intervention has been applied and the
  // distribution is in untouched product form.
  Kind kind() const { return kind_; }
  const Instance& instance() const { return *d_; }

  Rational world_probability(const std::vector<std::string>& world_ids) const;
  Rational query_probability(const Query& q, int max_endo = 26) const;
  // Exogenous tuples are present in every world: marginal 1.
  Rational tuple_marginal(const std::string& id) const;

  // Pushforward along "force tuple in" / "force tuple out". The tuple must
  // be endogenous. Product-form inputs stay symbolic; explicit maps are
  // transformed world by world (merging collisions).
  PdbDistribution intervene(const std::string& id, Intervention dir) const;

  // {"worlds":[...]} with nonzero-probability worlds sorted by world
  // bitmask; product form materializes (subject to max_endo).
  nlohmann::json to_json(int max_endo = 26) const;

 private:
  const Instance* d_ = nullptr;
  Kind kind_ = Kind::Tid;
  // product form
  std::vector<Rational> probs_;  // by endo_index
  std::uint64_t forced_in_ = 0, forced_out_ = 0;
  bool product_form_ = true;
  // explicit form
  std::map<std::uint64_t, Rational> worlds_;

  Rational mask_probability(std::uint64_t mask) const;
};

}  // namespace qscore
