#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qscore/rational.hpp"

namespace qscore {

// One fact. `values` are opaque constant strings; `endo` marks whether the
// fact may be absent in a possible world (exogenous facts are always in).
// `p` is the marginal used when building a tuple-independent distribution
// from the instance; it defaults to 1/2 for endogenous facts and must be 1
// for exogenous ones.
struct Tuple {
  std::string id;
  std::vector<std::string> values;
  bool endo = true;
  std::optional<Rational> p;

  // Position in overall load order (across relations).
  int load_index = -1;
  // Bit position among endogenous tuples, in load order; -1 for exogenous.
  int endo_index = -1;
  // Index of the owning relation within Instance::relations.
  int relation_index = -1;
};

struct Relation {
  std::string name;
  int arity = 0;
  std::vector<int> tuple_indices;  // indices into Instance::tuples
};

class Instance {
 public:
  std::vector<Relation> relations;
  std::vector<Tuple> tuples;  // load order

  int endo_count() const { return endo_count_; }
  const std::vector<int>& endo_tuple_indices() const { return endo_order_; }

  bool has_relation(const std::string& name) const;
  const Relation* find_relation(const std::string& name) const;

  // Throws DomainError on an unknown id.
  const Tuple& tuple_by_id(const std::string& id) const;
  int tuple_index(const std::string& id) const;

  // Subinstance induced by the given tuple ids (relation schema preserved,
  // ids and flags kept, relative load order kept). Unknown ids throw.
  Instance subinstance(const std::vector<std::string>& ids) const;

  // Recomputes the index structures after relations/tuples are filled in.
  // Throws DomainError on duplicate ids or duplicate values in a relation.
  void finalize();

  nlohmann::json to_json() const;

 private:
  std::map<std::string, int, std::less<>> id_index_;
  std::vector<int> endo_order_;
  int endo_count_ = 0;
};

// Parses the instance document format:
//   {"relations":[{"name":"R","arity":2,
//     "tuples":[{"id":"t1","values":["a","b"],"endogenous":true,"p":"1/2"}]}]}
// Unknown top-level keys (e.g. a "comment" header emitted by generators)
// are ignored. Throws ParseError / DomainError with the offending
// relation/tuple named in the message.
Instance load_instance(const nlohmann::json& doc);
Instance load_instance_text(const std::string& text);
Instance load_instance_file(const std::string& path);

}  // namespace qscore
