#pragma once

#include <map>
#include <string>
#include <vector>

#include "qscore/model.hpp"

namespace qscore {

struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  std::string text;

  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> terms;

  bool operator==(const Atom&) const = default;
  auto operator<=>(const Atom&) const = default;
};

// A monotone Boolean query: either a conjunction of atoms (Boolean
// conjunctive query) or built-in reachability between two constants over a
// binary edge relation.
class Query {
 public:
  enum class Kind { Bcq, Reach };

  static Query bcq(std::vector<Atom> atoms);
  static Query reachability(std::string edge_relation, std::string source,
                            std::string target);

  Kind kind() const { return kind_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::string& edge_relation() const { return edge_relation_; }
  const std::string& source() const { return source_; }
  const std::string& target() const { return target_; }

  // Variables in order of first occurrence (empty for reachability).
  std::vector<std::string> variables() const;
  bool has_constants() const;

  std::string to_string() const;

 private:
  Kind kind_ = Kind::Bcq;
  std::vector<Atom> atoms_;
  std::string edge_relation_, source_, target_;
};

// Grammar:
//   query    := atom ("," atom)*
//   atom     := RELNAME "(" term ("," term)* ")"
//   term     := VARIABLE | CONSTANT
//   RELNAME  := [A-Z][A-Za-z0-9_]* "'"*     (primes allow derived names)
//   VARIABLE := [a-z][A-Za-z0-9_]*
//   CONSTANT := "'" [^']* "'"
// Whitespace is allowed between tokens. Duplicate atoms collapse (a
// conjunction is a set). Errors carry a 1-based byte offset.
Query parse_query(const std::string& text);

// True when no relation name occurs in two distinct atoms.
bool is_self_join_free(const Query& q);

struct EliminationResult {
  Query query;
  Instance instance;
  // old tuple id -> new tuple id, for tuples that survive the restriction.
  std::map<std::string, std::string> tuple_map;
};

// Rewrites away constants in atoms: each constant position is checked
// against the data and projected out, the touched relation gets a fresh
// primed name, and only tuples matching the constants survive. The result
// has the same answer as the input on every world. Relations that carry
// constants must not be self-joined (rewriting would have to duplicate
// tuples, losing world-for-world equivalence); that case is refused.
EliminationResult eliminate_constants(const Query& q, const Instance& d);

}  // namespace qscore
