#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/scores.hpp"

namespace qscore {

// Connected components of the atom graph (atoms adjacent when they share a
// variable), each returned as a subquery with atoms in original order;
// components ordered by their smallest atom index. Conjunctive queries
// only.
std::vector<Query> components(const Query& q);

// Maximal sets of variables occurring in exactly the same set of atoms.
// Cells ordered by the first occurrence of a member variable; variables
// within a cell likewise.
struct CoincidenceCell {
  std::vector<std::string> variables;
  std::vector<int> atom_indices;  // ascending
};
std::vector<CoincidenceCell> coincidences(const Query& q);

struct ReductionResult {
  Query query;
  Instance instance;
  // old id -> new id (reduction rewrites values in place, so this is the
  // identity on every tuple; emitted for uniformity with other rewrites).
  std::map<std::string, std::string> tuple_map;
  // fresh constant -> the tuple of original values it stands for.
  std::map<std::string, std::vector<std::string>> constant_map;
};

// Collapses every coincidence cell with >= 2 variables to a single fresh
// variable, projecting atoms and instance tuples accordingly; each
// distinct value combination at a cell's positions becomes a fresh
// constant c1, c2, ... (numbered by first occurrence in tuple load order;
// "@"-prefixed if the data already uses such names). Requires a
// self-join-free, constant-free conjunctive query whose atoms do not
// repeat variables. Query answers are preserved world for world.
ReductionResult reduce(const Query& q, const Instance& d);

enum class AlignmentClass { AlwaysAligned, NotAlwaysAligned, Unknown };
const char* alignment_class_name(AlignmentClass c);

struct ClassificationVerdict {
  // Guarantee over instances that may contain exogenous tuples.
  AlignmentClass with_exogenous = AlignmentClass::Unknown;
  std::string with_exogenous_rule;
  // Guarantee restricted to fully endogenous instances.
  AlignmentClass without_exogenous = AlignmentClass::Unknown;
  std::string without_exogenous_rule;

  int component_count = 0;
  int coincidence_cell_count = 0;
  // Syntactic cell-collapsed form used by the star rule, when it applies.
  std::optional<std::string> collapsed_form;
};

// Purely syntactic classification of a self-join-free, constant-free
// conjunctive query: does (causal effect, responsibility) alignment hold
// on every instance? Invariant under atom order and variable renaming.
ClassificationVerdict classify(const Query& q);

// Closed-form responsibility + causal effect for an instance over two
// binary relations joined on their first column (query R(x,y), S(x,z)).
// Requires no exogenous tuples and no dummy tuples (every first-column
// block must have both sides inhabited).
ScoreReport analytic_oracle_qrs(const Instance& d);

// Same for the star query R(v,w), S_1(v), ..., S_m(v): one binary
// relation plus m unary relations, blocks keyed by the binary relation's
// first column. m = 1 is served by the same block formulas the
// two-relation oracle uses.
ScoreReport analytic_oracle_qr1sm(const Instance& d, int m);

}  // namespace qscore
