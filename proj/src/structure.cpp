#include "qscore/structure.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "qscore/error.hpp"

namespace qscore {

namespace {

void require_bcq(const Query& q, const char* op) {
  if (q.kind() != Query::Kind::Bcq)
    throw DomainError(std::string(op) + " requires a conjunctive query");
}

void require_sjf_constant_free(const Query& q, const char* op) {
  if (!is_self_join_free(q))
    throw DomainError(std::string("unsupported: self-join (") + op +
                      " requires each relation to appear in one atom)");
  if (q.has_constants())
    throw DomainError(std::string("unsupported: constants in query (run "
                                  "constant elimination before ") +
                      op + ")");
}

std::vector<int> find_roots(const Query& q) {
  // Union-find over atoms, joined through shared variables.
  int n = static_cast<int>(q.atoms().size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::map<std::string, int> first_atom_of_var;
  for (int i = 0; i < n; ++i) {
    for (const auto& t : q.atoms()[i].terms) {
      if (t.kind != Term::Kind::Var) continue;
      auto [it, fresh] = first_atom_of_var.emplace(t.text, i);
      if (!fresh) parent[find(i)] = find(it->second);
    }
  }
  std::vector<int> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = find(i);
  return roots;
}

}  // namespace

std::vector<Query> components(const Query& q) {
  require_bcq(q, "component decomposition");
  std::vector<int> roots = find_roots(q);
  std::vector<int> order;  // distinct roots by smallest atom index
  for (int r : roots)
    if (std::find(order.begin(), order.end(), r) == order.end())
      order.push_back(r);
  std::vector<Query> out;
  for (int r : order) {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < q.atoms().size(); ++i)
      if (roots[i] == r) atoms.push_back(q.atoms()[i]);
    out.push_back(Query::bcq(std::move(atoms)));
  }
  return out;
}

std::vector<CoincidenceCell> coincidences(const Query& q) {
  require_bcq(q, "coincidence analysis");
  std::vector<std::string> vars;
  std::map<std::string, std::set<int>> atom_sets;
  for (std::size_t i = 0; i < q.atoms().size(); ++i)
    for (const auto& t : q.atoms()[i].terms)
      if (t.kind == Term::Kind::Var) {
        if (!atom_sets.count(t.text)) vars.push_back(t.text);
        atom_sets[t.text].insert(static_cast<int>(i));
      }
  std::vector<CoincidenceCell> cells;
  for (const auto& v : vars) {
    bool placed = false;
    for (auto& c : cells)
      if (atom_sets[c.variables[0]] == atom_sets[v]) {
        c.variables.push_back(v);
        placed = true;
        break;
      }
    if (!placed) {
      CoincidenceCell c;
      c.variables.push_back(v);
      c.atom_indices.assign(atom_sets[v].begin(), atom_sets[v].end());
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

namespace {

// Query-level cell collapse shared by reduce() and the star rule of
// classify(): every cell with >= 2 variables becomes one fresh variable,
// keeping the first position per cell in each atom.
struct Collapse {
  std::vector<CoincidenceCell> cells;
  std::map<std::string, int> cell_of_var;   // only vars in nontrivial cells
  std::vector<std::string> cell_var;        // fresh name per cell (nontrivial)
  Query query{Query::bcq({})};
  // per atom: kept original positions, aligned with the new terms
  std::vector<std::vector<int>> kept_positions;
};

Collapse collapse_cells(const Query& q) {
  Collapse c;
  c.cells = coincidences(q);

  std::set<std::string> taken;  // variables surviving untouched
  for (const auto& cell : c.cells)
    if (cell.variables.size() == 1) taken.insert(cell.variables[0]);

  c.cell_var.resize(c.cells.size());
  int counter = 0;
  for (std::size_t ci = 0; ci < c.cells.size(); ++ci) {
    if (c.cells[ci].variables.size() < 2) continue;
    for (const auto& v : c.cells[ci].variables)
      c.cell_of_var[v] = static_cast<int>(ci);
    std::string name;
    do {
      ++counter;
      name = counter == 1 ? "v" : "v" + std::to_string(counter);
    } while (taken.count(name));
    taken.insert(name);
    c.cell_var[ci] = name;
  }

  std::vector<Atom> atoms;
  for (const auto& a : q.atoms()) {
    Atom na;
    na.relation = a.relation;
    std::vector<int> kept;
    std::set<int> cells_seen;
    for (int p = 0; p < static_cast<int>(a.terms.size()); ++p) {
      const Term& t = a.terms[p];
      auto it = t.kind == Term::Kind::Var ? c.cell_of_var.find(t.text)
                                          : c.cell_of_var.end();
      if (it == c.cell_of_var.end()) {
        na.terms.push_back(t);
        kept.push_back(p);
      } else if (cells_seen.insert(it->second).second) {
        na.terms.push_back(Term{Term::Kind::Var, c.cell_var[it->second]});
        kept.push_back(p);
      }  // later positions of an already-kept cell are dropped
    }
    c.kept_positions.push_back(std::move(kept));
    atoms.push_back(std::move(na));
  }
  c.query = Query::bcq(std::move(atoms));
  return c;
}

}  // namespace

ReductionResult reduce(const Query& q, const Instance& d) {
  require_bcq(q, "reduction");
  require_sjf_constant_free(q, "reduction");
  for (const auto& a : q.atoms()) {
    std::set<std::string> seen;
    for (const auto& t : a.terms)
      if (!seen.insert(t.text).second)
        throw DomainError("unsupported: atom " + a.relation +
                          " repeats variable " + t.text +
                          "; cell collapse is undefined there");
  }

  Collapse col = collapse_cells(q);

  // Atom index per relation (self-join-free: at most one).
  std::map<std::string, int> atom_of_relation;
  for (std::size_t i = 0; i < q.atoms().size(); ++i) {
    const Atom& a = q.atoms()[i];
    atom_of_relation[a.relation] = static_cast<int>(i);
    if (const Relation* rel = d.find_relation(a.relation);
        rel && rel->arity != static_cast<int>(a.terms.size()))
      throw DomainError("atom " + a.relation + "/" +
                        std::to_string(a.terms.size()) +
                        " does not match relation arity " +
                        std::to_string(rel->arity));
  }

  // Cell positions per atom, keyed and ordered by the cell's variable list
  // so the same value combination gets the same fresh constant wherever
  // the cell occurs.
  struct CellUse {
    int cell = -1;
    std::vector<int> positions;  // by cell-variable order
  };
  std::vector<std::vector<CellUse>> uses(q.atoms().size());
  for (std::size_t i = 0; i < q.atoms().size(); ++i) {
    const Atom& a = q.atoms()[i];
    std::map<int, std::map<int, int>> by_cell;  // cell -> var rank -> pos
    for (int p = 0; p < static_cast<int>(a.terms.size()); ++p) {
      auto it = col.cell_of_var.find(a.terms[p].text);
      if (it == col.cell_of_var.end()) continue;
      const auto& cvars = col.cells[it->second].variables;
      int rank = static_cast<int>(
          std::find(cvars.begin(), cvars.end(), a.terms[p].text) -
          cvars.begin());
      by_cell[it->second][rank] = p;
    }
    for (auto& [cell, ranked] : by_cell) {
      CellUse u;
      u.cell = cell;
      for (auto& [rank, pos] : ranked) u.positions.push_back(pos);
      uses[i].push_back(std::move(u));
    }
  }

  // Will any fresh name collide with data that survives? Fresh constants
  // use a reserved prefix if so.
  auto looks_fresh = [](const std::string& s) {
    if (s.size() < 2 || s[0] != 'c') return false;
    return std::all_of(s.begin() + 1, s.end(),
                       [](char ch) { return ch >= '0' && ch <= '9'; });
  };
  bool collide = false;
  for (const auto& t : d.tuples) {
    auto at = atom_of_relation.find(d.relations[t.relation_index].name);
    if (at == atom_of_relation.end()) {
      for (const auto& v : t.values) collide |= looks_fresh(v);
      continue;
    }
    for (int p : col.kept_positions[at->second]) collide |= looks_fresh(t.values[p]);
  }
  const std::string prefix = collide ? "@c" : "c";

  ReductionResult res{col.query, Instance{}, {}, {}};
  std::map<std::pair<int, std::vector<std::string>>, std::string> assign;
  int next_const = 0;

  std::set<std::string> renamed_taken;
  for (const auto& rel : d.relations) renamed_taken.insert(rel.name);
  for (const auto& rel : d.relations) {
    Relation nr;
    auto at = atom_of_relation.find(rel.name);
    bool shrunk = at != atom_of_relation.end() &&
                  static_cast<int>(col.kept_positions[at->second].size()) !=
                      rel.arity;
    if (shrunk) {
      nr.name = rel.name + "'";
      while (renamed_taken.count(nr.name)) nr.name += "'";
      renamed_taken.insert(nr.name);
      nr.arity = static_cast<int>(col.kept_positions[at->second].size());
    } else {
      nr.name = rel.name;
      nr.arity = rel.arity;
    }
    res.instance.relations.push_back(std::move(nr));
  }
  // Rename atoms of the reduced query to the shrunk relation names.
  {
    std::vector<Atom> atoms = res.query.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string& orig = q.atoms()[i].relation;
      for (std::size_t r = 0; r < d.relations.size(); ++r)
        if (d.relations[r].name == orig)
          atoms[i].relation = res.instance.relations[r].name;
    }
    res.query = Query::bcq(std::move(atoms));
  }

  for (const auto& t : d.tuples) {
    const Relation& rel = d.relations[t.relation_index];
    Tuple nt;
    nt.id = t.id;
    nt.endo = t.endo;
    nt.p = t.p;
    nt.relation_index = t.relation_index;
    auto at = atom_of_relation.find(rel.name);
    if (at == atom_of_relation.end()) {
      nt.values = t.values;
    } else {
      int ai = at->second;
      // fresh constant per (cell, value combination), numbered by first
      // appearance in tuple load order
      std::map<int, std::string> cell_value;
      for (const auto& u : uses[ai]) {
        std::vector<std::string> combo;
        for (int p : u.positions) combo.push_back(t.values[p]);
        auto [it, fresh] = assign.emplace(std::make_pair(u.cell, combo), "");
        if (fresh) it->second = prefix + std::to_string(++next_const);
        cell_value[u.cell] = it->second;
        if (fresh) res.constant_map[it->second] = combo;
      }
      for (int p : col.kept_positions[ai]) {
        auto cv = col.cell_of_var.find(q.atoms()[ai].terms[p].text);
        nt.values.push_back(cv == col.cell_of_var.end() ? t.values[p]
                                                        : cell_value[cv->second]);
      }
    }
    res.tuple_map[t.id] = t.id;
    res.instance.tuples.push_back(std::move(nt));
  }
  res.instance.finalize();
  return res;
}

const char* alignment_class_name(AlignmentClass c) {
  switch (c) {
    case AlignmentClass::AlwaysAligned: return "AlwaysAligned";
    case AlignmentClass::NotAlwaysAligned: return "NotAlwaysAligned";
    case AlignmentClass::Unknown: return "Unknown";
  }
  return "?";
}

ClassificationVerdict classify(const Query& q) {
  require_bcq(q, "classification");
  require_sjf_constant_free(q, "classification");

  ClassificationVerdict v;
  std::vector<Query> comps = components(q);
  std::vector<CoincidenceCell> cells = coincidences(q);
  v.component_count = static_cast<int>(comps.size());
  v.coincidence_cell_count = static_cast<int>(cells.size());

  bool all_single_atom = std::all_of(
      comps.begin(), comps.end(),
      [](const Query& c) { return c.atoms().size() == 1; });

  if (comps.size() == 1 && cells.size() == 1) {
    v.with_exogenous = AlignmentClass::AlwaysAligned;
    v.with_exogenous_rule = "single component whose variables all coincide";
  } else if (comps.size() >= 2 && all_single_atom) {
    v.with_exogenous = AlignmentClass::AlwaysAligned;
    v.with_exogenous_rule = "every component is a single atom";
  } else if (comps.size() == 1) {
    v.with_exogenous = AlignmentClass::NotAlwaysAligned;
    v.with_exogenous_rule =
        "single component with a non-coincident variable pair (a lifted "
        "two-relation counterexample exists)";
  } else {
    v.with_exogenous = AlignmentClass::NotAlwaysAligned;
    v.with_exogenous_rule =
        "multiple components, one with several atoms (a planted "
        "cross-component counterexample exists)";
  }

  if (v.with_exogenous == AlignmentClass::AlwaysAligned) {
    v.without_exogenous = AlignmentClass::AlwaysAligned;
    v.without_exogenous_rule = "guaranteed even with exogenous tuples";
    return v;
  }
  if (comps.size() == 1 && q.atoms().size() <= 2 && cells.size() <= 3) {
    v.without_exogenous = AlignmentClass::AlwaysAligned;
    v.without_exogenous_rule =
        "single component with at most two atoms and at most three "
        "coincidence cells";
    return v;
  }
  if (comps.size() == 1) {
    Collapse col = collapse_cells(q);
    v.collapsed_form = col.query.to_string();
    const auto& atoms = col.query.atoms();
    int binary = -1;
    bool shape_ok = true;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i].terms.size() == 2 && binary < 0)
        binary = static_cast<int>(i);
      else if (atoms[i].terms.size() != 1)
        shape_ok = false;
    }
    if (shape_ok && binary >= 0 && atoms.size() >= 2) {
      // all unary atoms on one of the binary atom's variables; the other
      // variable must stay private to the binary atom
      for (const auto& hub : atoms[binary].terms) {
        bool star = true;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          if (static_cast<int>(i) == binary) continue;
          if (atoms[i].terms[0].text != hub.text) star = false;
        }
        const Term& other = atoms[binary].terms[0].text == hub.text
                                ? atoms[binary].terms[1]
                                : atoms[binary].terms[0];
        if (other.text == hub.text) star = false;
        if (star) {
          v.without_exogenous = AlignmentClass::AlwaysAligned;
          v.without_exogenous_rule =
              "collapses to a star: one binary atom plus unary atoms on a "
              "shared variable";
          return v;
        }
      }
    }
  }
  v.without_exogenous = AlignmentClass::Unknown;
  v.without_exogenous_rule = "no positive rule applies";
  return v;
}

namespace {

struct Block {
  std::vector<int> r_tuples;                  // binary side, load order
  std::vector<std::vector<int>> s_tuples;     // per unary/second relation
};

void require_no_exo(const Instance& d, const char* op) {
  for (const auto& t : d.tuples)
    if (!t.endo)
      throw DomainError(std::string(op) +
                        ": exogenous tuples present (tuple " + t.id + ")");
}

ScoreRow make_row(const Instance& d, int ti, const Rational& ce,
                  const Rational& resp) {
  const Tuple& t = d.tuples[ti];
  ScoreRow row;
  row.id = t.id;
  row.relation = d.relations[t.relation_index].name;
  row.values = t.values;
  row.scores[ScoreKind::Ces] = ce;
  row.scores[ScoreKind::Resp] = resp;
  return row;
}

}  // namespace

ScoreReport analytic_oracle_qrs(const Instance& d) {
  if (d.relations.size() != 2 || d.relations[0].arity != 2 ||
      d.relations[1].arity != 2)
    throw DomainError(
        "two-relation oracle expects exactly two binary relations");
  require_no_exo(d, "two-relation oracle");

  std::vector<std::string> keys;  // first appearance order
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> blocks;
  for (const auto& t : d.tuples) {
    const std::string& key = t.values[0];
    if (!blocks.count(key)) keys.push_back(key);
    auto& b = blocks[key];
    (t.relation_index == 0 ? b.first : b.second).push_back(t.load_index);
  }
  for (const auto& key : keys) {
    const auto& b = blocks[key];
    if (b.first.empty() || b.second.empty())
      throw DomainError("two-relation oracle: dummy tuples present (block '" +
                        key + "' is one-sided)");
  }

  std::map<std::string, Rational> p_block;
  Rational total = 1;
  BigInt min_sum = 0;
  for (const auto& key : keys) {
    const auto& b = blocks[key];
    unsigned r = static_cast<unsigned>(b.first.size());
    unsigned s = static_cast<unsigned>(b.second.size());
    Rational p((pow2(r) - 1) * (pow2(s) - 1), pow2(r + s));
    p_block[key] = p;
    total *= Rational(1) - p;
    min_sum += std::min(r, s);
  }

  ScoreReport rep;
  rep.kinds = {ScoreKind::Ces, ScoreKind::Resp};
  for (const auto& t : d.tuples) {
    const auto& b = blocks[t.values[0]];
    unsigned r = static_cast<unsigned>(b.first.size());
    unsigned s = static_cast<unsigned>(b.second.size());
    bool r_side = t.relation_index == 0;
    Rational others = total / (Rational(1) - p_block[t.values[0]]);
    Rational ce = Rational(pow2(r_side ? s : r) - 1, pow2(r + s - 1)) * others;
    BigInt denom = (r_side ? BigInt(r) : BigInt(s)) + min_sum - std::min(r, s);
    rep.rows.push_back(make_row(d, t.load_index, ce, Rational(1, denom)));
  }
  return rep;
}

ScoreReport analytic_oracle_qr1sm(const Instance& d, int m) {
  if (m < 1)
    throw DomainError("star oracle needs at least one unary relation");
  int binary = -1, unary = 0;
  for (std::size_t i = 0; i < d.relations.size(); ++i) {
    if (d.relations[i].arity == 2) {
      if (binary >= 0)
        throw DomainError("star oracle expects exactly one binary relation");
      binary = static_cast<int>(i);
    } else if (d.relations[i].arity == 1) {
      ++unary;
    } else {
      throw DomainError("star oracle: relation " + d.relations[i].name +
                        " is neither binary nor unary");
    }
  }
  if (binary < 0)
    throw DomainError("star oracle expects exactly one binary relation");
  if (unary != m)
    throw DomainError("star oracle: expected " + std::to_string(m) +
                      " unary relations, found " + std::to_string(unary));
  require_no_exo(d, "star oracle");

  std::vector<std::string> keys;
  std::map<std::string, std::vector<int>> r_of;
  for (const auto& t : d.tuples) {
    if (t.relation_index != binary) continue;
    if (!r_of.count(t.values[0])) keys.push_back(t.values[0]);
    r_of[t.values[0]].push_back(t.load_index);
  }
  for (const auto& t : d.tuples) {
    if (t.relation_index == binary) continue;
    if (!r_of.count(t.values[0]))
      throw DomainError("star oracle: dummy tuples present (" + t.id +
                        " has no binary-side block)");
  }
  for (const auto& rel : d.relations) {
    if (rel.arity != 1) continue;
    std::set<std::string> have;
    for (int ti : rel.tuple_indices) have.insert(d.tuples[ti].values[0]);
    for (const auto& key : keys)
      if (!have.count(key))
        throw DomainError("star oracle: dummy tuples present (block '" + key +
                          "' missing from " + rel.name + ")");
  }

  unsigned bcount = static_cast<unsigned>(keys.size());
  std::map<std::string, Rational> p_block;
  Rational total = 1;
  for (const auto& key : keys) {
    unsigned r = static_cast<unsigned>(r_of[key].size());
    Rational p(pow2(r) - 1, pow2(r + static_cast<unsigned>(m)));
    p_block[key] = p;
    total *= Rational(1) - p;
  }

  ScoreReport rep;
  rep.kinds = {ScoreKind::Ces, ScoreKind::Resp};
  for (const auto& t : d.tuples) {
    const std::string& key = t.values[0];
    unsigned r = static_cast<unsigned>(r_of[key].size());
    Rational others = total / (Rational(1) - p_block[key]);
    Rational base(1, pow2(r + static_cast<unsigned>(m) - 1));
    bool r_side = t.relation_index == binary;
    Rational ce = (r_side ? base : base * (pow2(r) - 1)) * others;
    Rational resp = r_side ? Rational(1, BigInt(r) + bcount - 1)
                           : Rational(1, bcount);
    rep.rows.push_back(make_row(d, t.load_index, ce, resp));
  }
  return rep;
}

}  // namespace qscore
