#include "qscore/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "qscore/error.hpp"

namespace qscore {

Query Query::bcq(std::vector<Atom> atoms) {
  Query q;
  q.kind_ = Kind::Bcq;
  // A conjunction is a set of atoms: drop exact duplicates, keep order.
  for (auto& a : atoms) {
    if (std::find(q.atoms_.begin(), q.atoms_.end(), a) == q.atoms_.end())
      q.atoms_.push_back(std::move(a));
  }
  return q;
}

Query Query::reachability(std::string edge_relation, std::string source,
                          std::string target) {
  Query q;
  q.kind_ = Kind::Reach;
  q.edge_relation_ = std::move(edge_relation);
  q.source_ = std::move(source);
  q.target_ = std::move(target);
  return q;
}

std::vector<std::string> Query::variables() const {
  std::vector<std::string> vars;
  for (const auto& a : atoms_)
    for (const auto& t : a.terms)
      if (t.kind == Term::Kind::Var &&
          std::find(vars.begin(), vars.end(), t.text) == vars.end())
        vars.push_back(t.text);
  return vars;
}

bool Query::has_constants() const {
  for (const auto& a : atoms_)
    for (const auto& t : a.terms)
      if (t.kind == Term::Kind::Const) return true;
  return false;
}

std::string Query::to_string() const {
  if (kind_ == Kind::Reach)
    return "reach(" + edge_relation_ + ", '" + source_ + "', '" + target_ +
           "')";
  std::string out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i) out += ", ";
    out += atoms_[i].relation + "(";
    for (std::size_t j = 0; j < atoms_[i].terms.size(); ++j) {
      if (j) out += ",";
      const Term& t = atoms_[i].terms[j];
      out += t.kind == Term::Kind::Var ? t.text : "'" + t.text + "'";
    }
    out += ")";
  }
  return out;
}

namespace {

// Recursive-descent parser; offsets in errors are 1-based byte positions.
class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Query parse() {
    std::vector<Atom> atoms;
    atoms.push_back(atom());
    skip_ws();
    while (pos_ < s_.size()) {
      expect(',');
      atoms.push_back(atom());
      skip_ws();
    }
    return Query::bcq(std::move(atoms));
  }

 private:
  [[noreturn]] void fail(const std::string& expected) {
    std::string got = pos_ < s_.size()
                          ? "'" + std::string(1, s_[pos_]) + "'"
                          : "end of input";
    throw ParseError("syntax error at offset " + std::to_string(pos_ + 1) +
                         ": expected " + expected + ", got " + got,
                     pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("'") + c + "'");
    ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  Atom atom() {
    skip_ws();
    if (pos_ >= s_.size() || !std::isupper(static_cast<unsigned char>(s_[pos_])))
      fail("a relation name ([A-Z]...)");
    std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    while (pos_ < s_.size() && s_[pos_] == '\'') ++pos_;  // derived names
    Atom a;
    a.relation = s_.substr(start, pos_ - start);
    expect('(');
    a.terms.push_back(term());
    skip_ws();
    while (pos_ < s_.size() && s_[pos_] == ',') {
      ++pos_;
      a.terms.push_back(term());
      skip_ws();
    }
    if (pos_ >= s_.size() || s_[pos_] != ')') fail("',' or ')'");
    ++pos_;
    return a;
  }

  Term term() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < s_.size() && s_[pos_] != '\'') ++pos_;
      if (pos_ >= s_.size()) fail("closing \"'\"");
      Term t{Term::Kind::Const, s_.substr(start, pos_ - start)};
      ++pos_;
      return t;
    }
    if (pos_ >= s_.size() || !std::islower(static_cast<unsigned char>(s_[pos_])))
      fail("a variable ([a-z]...) or a quoted constant");
    std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return Term{Term::Kind::Var, s_.substr(start, pos_ - start)};
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Query parse_query(const std::string& text) {
  return Parser(text).parse();
}

bool is_self_join_free(const Query& q) {
  if (q.kind() == Query::Kind::Reach) return true;
  std::set<std::string> names;
  for (const auto& a : q.atoms())
    if (!names.insert(a.relation).second) return false;
  return true;
}

namespace {

std::string fresh_relation_name(const std::string& base,
                                const std::set<std::string>& taken) {
  std::string name = base + "'";
  while (taken.count(name)) name += "'";
  return name;
}

}  // namespace

EliminationResult eliminate_constants(const Query& q, const Instance& d) {
  EliminationResult res{q, d, {}};
  for (const auto& t : d.tuples) res.tuple_map[t.id] = t.id;
  if (q.kind() == Query::Kind::Reach || !q.has_constants()) return res;

  // Count atom occurrences per relation; a relation carrying constants may
  // appear only once, otherwise the rewrite would need to split one stored
  // tuple into several independent ones.
  std::map<std::string, int> occurrences;
  for (const auto& a : q.atoms()) ++occurrences[a.relation];

  std::set<std::string> taken;
  for (const auto& rel : d.relations) taken.insert(rel.name);
  for (const auto& a : q.atoms()) taken.insert(a.relation);

  Instance out;
  std::vector<Atom> new_atoms;
  std::map<std::string, std::pair<std::string, std::vector<int>>>
      rewrite;  // relation -> (new name, kept positions)

  for (const auto& a : q.atoms()) {
    bool has_const = std::any_of(a.terms.begin(), a.terms.end(), [](auto& t) {
      return t.kind == Term::Kind::Const;
    });
    if (!has_const) {
      new_atoms.push_back(a);
      continue;
    }
    if (occurrences[a.relation] > 1)
      throw DomainError("unsupported: constant elimination on self-joined relation " +
                        a.relation);
    Atom na;
    std::vector<int> kept;
    for (int p = 0; p < static_cast<int>(a.terms.size()); ++p) {
      if (a.terms[p].kind == Term::Kind::Var) {
        na.terms.push_back(a.terms[p]);
        kept.push_back(p);
      }
    }
    na.relation = fresh_relation_name(a.relation, taken);
    taken.insert(na.relation);
    rewrite[a.relation] = {na.relation, kept};
    new_atoms.push_back(std::move(na));
  }

  // Constant pattern per rewritten relation, for the tuple restriction.
  std::map<std::string, std::vector<std::pair<int, std::string>>> pattern;
  for (const auto& a : q.atoms()) {
    if (!rewrite.count(a.relation)) continue;
    for (int p = 0; p < static_cast<int>(a.terms.size()); ++p)
      if (a.terms[p].kind == Term::Kind::Const)
        pattern[a.relation].push_back({p, a.terms[p].text});
  }

  res.tuple_map.clear();
  for (const auto& rel : d.relations) {
    Relation nr;
    auto rw = rewrite.find(rel.name);
    if (rw == rewrite.end()) {
      nr.name = rel.name;
      nr.arity = rel.arity;
    } else {
      nr.name = rw->second.first;
      nr.arity = static_cast<int>(rw->second.second.size());
    }
    out.relations.push_back(nr);
  }
  for (const auto& t : d.tuples) {
    const Relation& rel = d.relations[t.relation_index];
    auto rw = rewrite.find(rel.name);
    Tuple nt;
    nt.id = t.id;
    nt.endo = t.endo;
    nt.p = t.p;
    nt.relation_index = t.relation_index;
    if (rw == rewrite.end()) {
      nt.values = t.values;
    } else {
      bool match = true;
      for (const auto& [pos, want] : pattern[rel.name])
        if (t.values[pos] != want) {
          match = false;
          break;
        }
      if (!match) continue;  // restricted away
      for (int p : rw->second.second) nt.values.push_back(t.values[p]);
    }
    res.tuple_map[t.id] = nt.id;
    out.tuples.push_back(std::move(nt));
  }
  out.finalize();

  res.query = Query::bcq(std::move(new_atoms));
  res.instance = std::move(out);
  return res;
}

}  // namespace qscore
