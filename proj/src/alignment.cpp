#include "qscore/alignment.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "qscore/error.hpp"
#include "qscore/structure.hpp"

namespace qscore {

using nlohmann::json;

AlignmentVerdict check_alignment(const Query& q, const Instance& d,
                                 ScoreKind sc1, ScoreKind sc2,
                                 const ScoreOptions& opts) {
  AlignmentVerdict v;
  v.sc1 = sc1;
  v.sc2 = sc2;
  ScoreReport rep = score_table(q, d, {sc1, sc2}, opts);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.rows.size(); ++j) {
      const ScoreRow &ri = rep.rows[i], &rj = rep.rows[j];
      const Rational &a1 = ri.scores.at(sc1), &b1 = rj.scores.at(sc1);
      const Rational &a2 = ri.scores.at(sc2), &b2 = rj.scores.at(sc2);
      const ScoreRow* low = nullptr;
      const ScoreRow* high = nullptr;
      if (a1 < b1 && a2 > b2) {
        low = &ri;
        high = &rj;
      } else if (a1 > b1 && a2 < b2) {
        low = &rj;
        high = &ri;
      } else {
        continue;
      }
      v.aligned = false;
      AlignmentWitness w;
      w.id_a = low->id;
      w.id_b = high->id;
      w.sc1_a = low->scores.at(sc1);
      w.sc1_b = high->scores.at(sc1);
      w.sc2_a = low->scores.at(sc2);
      w.sc2_b = high->scores.at(sc2);
      v.witness = std::move(w);
      return v;
    }
  }
  return v;
}

namespace {

// Relation schema induced by the query (first atom wins for reachability /
// repeated names; the evaluator validates arities anyway).
std::vector<std::pair<std::string, int>> schema_of(const Query& q) {
  std::vector<std::pair<std::string, int>> schema;
  if (q.kind() == Query::Kind::Reach) {
    schema.emplace_back(q.edge_relation(), 2);
    return schema;
  }
  std::set<std::string> seen;
  for (const auto& a : q.atoms())
    if (seen.insert(a.relation).second)
      schema.emplace_back(a.relation, static_cast<int>(a.terms.size()));
  return schema;
}

}  // namespace

std::optional<SearchResult> random_alignment_search(const Query& q,
                                                    ScoreKind sc1,
                                                    ScoreKind sc2, int trials,
                                                    std::uint64_t seed,
                                                    const ScoreOptions& opts) {
  const std::vector<std::string> domain = {"a", "b", "c", "d"};
  auto schema = schema_of(q);
  std::mt19937_64 rng(seed);
  // Explicit modulo sampling: uniform_int_distribution is not specified
  // byte-for-byte across standard libraries, and search results must be
  // reproducible from the recorded seed.
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  for (int trial = 1; trial <= trials; ++trial) {
    Instance inst;
    int tuple_no = 0;
    for (const auto& [name, arity] : schema) {
      Relation rel;
      rel.name = name;
      rel.arity = arity;
      inst.relations.push_back(rel);
    }
    for (std::size_t ri = 0; ri < schema.size(); ++ri) {
      int want = 1 + static_cast<int>(pick(4));
      std::set<std::vector<std::string>> seen;
      for (int k = 0; k < want * 3 && static_cast<int>(seen.size()) < want; ++k) {
        std::vector<std::string> vals;
        for (int p = 0; p < schema[ri].second; ++p)
          vals.push_back(domain[pick(domain.size())]);
        if (!seen.insert(vals).second) continue;
        Tuple t;
        t.id = "t" + std::to_string(++tuple_no);
        t.values = std::move(vals);
        t.endo = pick(4) != 0;  // endogenous with probability 3/4
        t.relation_index = static_cast<int>(ri);
        inst.tuples.push_back(std::move(t));
      }
    }
    // Keep the instance inside the search budget of 10 endogenous tuples,
    // and keep at least one endogenous tuple so scores exist.
    int endo = 0;
    for (auto& t : inst.tuples)
      if (t.endo && ++endo > 10) t.endo = false;
    if (endo == 0 && !inst.tuples.empty()) inst.tuples.front().endo = true;
    inst.finalize();

    AlignmentVerdict v = check_alignment(q, inst, sc1, sc2, opts);
    if (!v.aligned)
      return SearchResult{std::move(inst), std::move(v), seed, trial};
  }
  return std::nullopt;
}

const char* counterexample_mode_name(CounterexampleMode m) {
  switch (m) {
    case CounterexampleMode::SingleComponent: return "single-component";
    case CounterexampleMode::MultiComponent: return "multi-component";
    case CounterexampleMode::ShapleyVsCesResp: return "shapley-vs-ces-resp";
  }
  return "?";
}

CounterexampleMode counterexample_mode_from_name(const std::string& name) {
  if (name == "single-component") return CounterexampleMode::SingleComponent;
  if (name == "multi-component") return CounterexampleMode::MultiComponent;
  if (name == "shapley-vs-ces-resp")
    return CounterexampleMode::ShapleyVsCesResp;
  throw DomainError("unknown counterexample mode '" + name +
                    "' (expected single-component, multi-component or "
                    "shapley-vs-ces-resp)");
}

namespace {

constexpr const char* kFiller = "@c";  // reserved filler constant

// Instance under construction: atoms' relations plus tuples in the order
// the construction emits them.
class Builder {
 public:
  explicit Builder(const Query& q) : q_(q) {
    for (const auto& a : q.atoms()) {
      Relation rel;
      rel.name = a.relation;
      rel.arity = static_cast<int>(a.terms.size());
      inst_.relations.push_back(rel);
    }
  }

  // One tuple for the given atom; positions take `bind[var]` when bound,
  // the filler constant otherwise. Duplicate values in a relation are
  // merged (set semantics), keeping the first tuple's endogeneity.
  void add(int atom_index, const std::map<std::string, std::string>& bind,
           bool endo) {
    const Atom& a = q_.atoms()[atom_index];
    std::vector<std::string> vals;
    for (const auto& t : a.terms) {
      auto it = bind.find(t.text);
      vals.push_back(it == bind.end() ? kFiller : it->second);
    }
    auto key = std::make_pair(atom_index, vals);
    if (!seen_.insert(key).second) return;
    Tuple tu;
    tu.id = "t" + std::to_string(static_cast<int>(inst_.tuples.size()) + 1);
    tu.values = std::move(vals);
    tu.endo = endo;
    tu.relation_index = atom_index;
    inst_.tuples.push_back(std::move(tu));
  }

  Instance take() {
    inst_.finalize();
    return std::move(inst_);
  }

 private:
  const Query& q_;
  Instance inst_;
  std::set<std::pair<int, std::vector<std::string>>> seen_;
};

std::vector<std::string> atom_vars(const Atom& a) {
  std::vector<std::string> vars;
  for (const auto& t : a.terms)
    if (t.kind == Term::Kind::Var &&
        std::find(vars.begin(), vars.end(), t.text) == vars.end())
      vars.push_back(t.text);
  return vars;
}

std::set<int> atoms_of_var(const Query& q, const std::string& v) {
  std::set<int> out;
  for (std::size_t i = 0; i < q.atoms().size(); ++i)
    for (const auto& t : q.atoms()[i].terms)
      if (t.kind == Term::Kind::Var && t.text == v)
        out.insert(static_cast<int>(i));
  return out;
}

void require_mode(bool ok, const std::string& condition) {
  if (!ok)
    throw HypothesisError("mode hypothesis not satisfied: " + condition);
}

std::string render_scores(const ScoreReport& rep) {
  std::string out;
  for (const auto& r : rep.rows) {
    if (!out.empty()) out += "; ";
    out += r.id;
    for (ScoreKind k : rep.kinds)
      out += " " + std::string(score_kind_name(k)) + "=" +
             format_fraction(r.scores.at(k));
  }
  return out;
}

CounterexampleResult build_single_component(const Query& q) {
  std::vector<Query> comps = components(q);
  require_mode(comps.size() == 1, "the query must have a single component");
  for (const auto& cell : coincidences(q))
    if (cell.variables.size() != 1)
      require_mode(false, "all coincidence cells must be trivial (variables " +
                              cell.variables[0] + " and " + cell.variables[1] +
                              " coincide)");
  std::vector<std::string> vars = q.variables();
  require_mode(vars.size() >= 2, "at least two variables are required");

  // First variable pair (vx scanned in first-occurrence order; vy after
  // vx, wrapping) whose atom sets nest strictly.
  std::string vx, vy;
  std::set<int> ax, ay;
  bool found = false;
  for (std::size_t i = 0; i < vars.size() && !found; ++i) {
    for (std::size_t k = 1; k < vars.size() && !found; ++k) {
      const std::string& cand = vars[(i + k) % vars.size()];
      std::set<int> a = atoms_of_var(q, vars[i]);
      std::set<int> b = atoms_of_var(q, cand);
      if (a != b &&
          std::includes(a.begin(), a.end(), b.begin(), b.end())) {
        vx = vars[i];
        vy = cand;
        ax = a;
        ay = b;
        found = true;
      }
    }
  }
  require_mode(found,
               "no variable pair with strictly nested atom sets exists");

  std::vector<int> x_only;  // atoms with vx but not vy
  for (int a : ax)
    if (!ay.count(a)) x_only.push_back(a);
  int rx = x_only.front();
  int ry = -1;  // first atom of vy strictly after rx, wrapping
  {
    std::vector<int> ys(ay.begin(), ay.end());
    for (int a : ys)
      if (a > rx) {
        ry = a;
        break;
      }
    if (ry < 0) ry = ys.front();
  }

  Builder b(q);
  // Two-relation seed: pairs for the vy side, values for the vx side; the
  // (a) tuple on the vx side is exogenous.
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"a", "a"}, {"a", "b"}, {"b", "a"}};
  for (const auto& [x, y] : pairs)
    for (int a : ay)
      b.add(a, {{vx, x}, {vy, y}}, a == ry);
  for (const std::string& x : {std::string("a"), std::string("b")})
    for (int a : x_only)
      b.add(a, {{vx, x}}, a == rx && x == "b");
  for (std::size_t a = 0; a < q.atoms().size(); ++a)
    if (!ax.count(static_cast<int>(a)) && !ay.count(static_cast<int>(a)))
      b.add(static_cast<int>(a), {}, false);

  CounterexampleResult res{b.take(), "", {}, {}};
  res.provenance = std::string(counterexample_mode_name(
                       CounterexampleMode::SingleComponent)) +
                   " construction: vx=" + vx + ", vy=" + vy +
                   ", endogenous x-atom=" + q.atoms()[rx].relation +
                   ", endogenous y-atom=" + q.atoms()[ry].relation;
  res.verdict = check_alignment(q, res.instance, ScoreKind::Ces,
                                ScoreKind::Resp);
  if (res.verdict.aligned) {
    ScoreReport rep = score_table(q, res.instance,
                                  {ScoreKind::Ces, ScoreKind::Resp});
    throw VerificationError(
        "single-component construction verified as aligned: with "
        "contingency sets drawn from endogenous tuples only, every "
        "endogenous tuple of the lifted seed has the same responsibility, "
        "so no reversal against the causal effect exists (" +
        render_scores(rep) + ")");
  }
  return res;
}

CounterexampleResult build_multi_component(const Query& q) {
  std::vector<Query> comps = components(q);
  require_mode(comps.size() >= 2, "at least two components are required");
  int mc = -1;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].atoms().size() >= 2) {
      mc = static_cast<int>(i);
      break;
    }
  require_mode(mc >= 0, "a component with at least two atoms is required");

  // First atom pair of that component sharing a variable, in query order.
  const auto& catoms = comps[mc].atoms();
  int as = -1, at = -1;
  std::string y;
  for (std::size_t i = 0; i < catoms.size() && as < 0; ++i) {
    for (std::size_t j = i + 1; j < catoms.size() && as < 0; ++j) {
      for (const auto& v : atom_vars(catoms[i])) {
        auto jv = atom_vars(catoms[j]);
        if (std::find(jv.begin(), jv.end(), v) != jv.end()) {
          as = static_cast<int>(i);
          at = static_cast<int>(j);
          y = v;
          break;
        }
      }
    }
  }
  require_mode(as >= 0, "the multi-atom component has no two atoms sharing "
                        "a variable");

  const Query& rcomp = comps[(mc + 1) % comps.size()];
  const Atom& ar = rcomp.atoms().front();
  std::vector<std::string> ar_vars = atom_vars(ar);
  require_mode(!ar_vars.empty(),
               "the neighbouring component's first atom has no variables");
  std::string x = ar_vars.front();

  // Map component-atom picks back to query atom indices.
  auto query_index = [&](const Atom& a) {
    for (std::size_t i = 0; i < q.atoms().size(); ++i)
      if (q.atoms()[i] == a) return static_cast<int>(i);
    throw DomainError("internal: atom not found in query");
  };
  int as_q = query_index(catoms[as]);
  int at_q = query_index(catoms[at]);
  int ar_q = query_index(ar);

  std::set<int> x_atoms = atoms_of_var(q, x);
  std::set<int> y_atoms = atoms_of_var(q, y);

  Builder b(q);
  // x side: two interchangeable tuples; endogenous in the chosen atom.
  for (const std::string& xv : {std::string("d1"), std::string("d2")}) {
    b.add(ar_q, {{x, xv}}, true);
    for (int a : x_atoms)
      if (a != ar_q) b.add(a, {{x, xv}}, false);
  }
  // y side: a three-value chain; the first value's partner is exogenous,
  // so that value alone satisfies the pair.
  const std::vector<std::string> ys = {"c1", "c2", "c3"};
  for (const auto& yv : ys) b.add(as_q, {{y, yv}}, true);
  for (const auto& yv : ys) b.add(at_q, {{y, yv}}, yv != "c1");
  for (int a : y_atoms)
    if (a != as_q && a != at_q)
      for (const auto& yv : ys) b.add(a, {{y, yv}}, false);
  // everything untouched: one all-filler exogenous tuple
  for (std::size_t a = 0; a < q.atoms().size(); ++a)
    if (!x_atoms.count(static_cast<int>(a)) &&
        !y_atoms.count(static_cast<int>(a)))
      b.add(static_cast<int>(a), {}, false);

  CounterexampleResult res{b.take(), "", {}, {}};
  res.provenance =
      std::string(counterexample_mode_name(CounterexampleMode::MultiComponent)) +
      " construction: pair atoms " + q.atoms()[as_q].relation + ", " +
      q.atoms()[at_q].relation + " sharing " + y + "; opposite atom " +
      q.atoms()[ar_q].relation + " on " + x;
  res.verdict = check_alignment(q, res.instance, ScoreKind::Ces,
                                ScoreKind::Resp);
  if (res.verdict.aligned) {
    ScoreReport rep = score_table(q, res.instance,
                                  {ScoreKind::Ces, ScoreKind::Resp});
    throw VerificationError(
        "multi-component construction failed to produce a reversal (" +
        render_scores(rep) + ")");
  }
  return res;
}

CounterexampleResult build_shapley_vs(const Query& q) {
  // First atom pair with overlapping, mutually non-contained variables.
  int ar = -1, as = -1;
  for (std::size_t i = 0; i < q.atoms().size() && ar < 0; ++i) {
    for (std::size_t j = i + 1; j < q.atoms().size() && ar < 0; ++j) {
      auto vi = atom_vars(q.atoms()[i]);
      auto vj = atom_vars(q.atoms()[j]);
      std::set<std::string> si(vi.begin(), vi.end()), sj(vj.begin(), vj.end());
      bool overlap = false, i_minus_j = false, j_minus_i = false;
      for (const auto& v : si)
        (sj.count(v) ? overlap : i_minus_j) = true;
      for (const auto& v : sj)
        if (!si.count(v)) j_minus_i = true;
      if (overlap && i_minus_j && j_minus_i) {
        ar = static_cast<int>(i);
        as = static_cast<int>(j);
      }
    }
  }
  require_mode(ar >= 0,
               "no two atoms with overlapping, mutually non-contained "
               "variable sets exist");

  auto vr = atom_vars(q.atoms()[ar]);
  auto vs = atom_vars(q.atoms()[as]);
  std::set<std::string> sr(vr.begin(), vr.end()), ss(vs.begin(), vs.end());
  std::vector<std::string> shared;
  for (const auto& v : vr)
    if (ss.count(v)) shared.push_back(v);
  std::string y, z;
  for (const auto& v : vr)
    if (!ss.count(v)) {
      y = v;
      break;
    }
  for (const auto& v : vs)
    if (!sr.count(v)) {
      z = v;
      break;
    }

  std::set<int> y_atoms = atoms_of_var(q, y);
  std::set<int> z_atoms = atoms_of_var(q, z);
  for (int a : y_atoms)
    require_mode(!z_atoms.count(a) || a == ar || a == as,
                 "atom " + q.atoms()[a].relation +
                     " joins both proof variables (" + y + ", " + z + ")");
  std::set<std::string> shared_set(shared.begin(), shared.end());

  // Two-binary-relation seed: an asymmetric pair of first-column blocks.
  const std::vector<std::pair<std::string, std::string>> r_seed = {
      {"a", "c1"}, {"b", "c2"}, {"b", "c3"}};
  const std::vector<std::pair<std::string, std::string>> s_seed = {
      {"a", "c4"}, {"a", "c5"}, {"b", "c6"},
      {"b", "c7"}, {"b", "c8"}, {"b", "c9"}};

  Builder b(q);
  auto bind_with_shared = [&](const std::string& xv, const std::string& other,
                              const std::string& other_var) {
    std::map<std::string, std::string> bind;
    for (const auto& v : shared) bind[v] = xv;  // diagonal collapse
    bind[other_var] = other;
    return bind;
  };
  for (const auto& [xv, yv] : r_seed) b.add(ar, bind_with_shared(xv, yv, y), true);
  for (int a : y_atoms)
    if (a != ar)
      for (const auto& [xv, yv] : r_seed)
        b.add(a, bind_with_shared(xv, yv, y), false);
  for (const auto& [xv, zv] : s_seed) b.add(as, bind_with_shared(xv, zv, z), true);
  for (int a : z_atoms)
    if (a != as)
      for (const auto& [xv, zv] : s_seed)
        b.add(a, bind_with_shared(xv, zv, z), false);
  // atoms seeing only the shared variables: both diagonal values, exogenous
  for (std::size_t a = 0; a < q.atoms().size(); ++a) {
    if (static_cast<int>(a) == ar || static_cast<int>(a) == as) continue;
    if (y_atoms.count(static_cast<int>(a)) ||
        z_atoms.count(static_cast<int>(a)))
      continue;
    bool touches_shared = false;
    for (const auto& v : atom_vars(q.atoms()[a]))
      if (shared_set.count(v)) touches_shared = true;
    if (touches_shared) {
      for (const std::string& xv : {std::string("a"), std::string("b")}) {
        std::map<std::string, std::string> bind;
        for (const auto& v : shared) bind[v] = xv;
        b.add(static_cast<int>(a), bind, false);
      }
    } else {
      b.add(static_cast<int>(a), {}, false);
    }
  }

  CounterexampleResult res{b.take(), "", {}, {}};
  res.provenance =
      std::string(
          counterexample_mode_name(CounterexampleMode::ShapleyVsCesResp)) +
      " construction: atoms " + q.atoms()[ar].relation + ", " +
      q.atoms()[as].relation + "; private variables " + y + ", " + z;
  if (shared.size() > 1)
    res.provenance += "; shared variables collapsed to a diagonal";

  res.verdict = check_alignment(q, res.instance, ScoreKind::Shapley,
                                ScoreKind::Ces);
  AlignmentVerdict vs_resp = check_alignment(q, res.instance,
                                             ScoreKind::Shapley,
                                             ScoreKind::Resp);
  AlignmentVerdict ces_resp = check_alignment(q, res.instance, ScoreKind::Ces,
                                              ScoreKind::Resp);
  if (res.verdict.aligned || vs_resp.aligned || !ces_resp.aligned) {
    ScoreReport rep = score_table(
        q, res.instance,
        {ScoreKind::Shapley, ScoreKind::Ces, ScoreKind::Resp});
    throw VerificationError(
        "score-vs-score construction did not verify: expected reversals "
        "against shapley with ces and resp themselves aligned (" +
        render_scores(rep) + ")");
  }
  res.extra.push_back(std::move(vs_resp));
  res.extra.push_back(std::move(ces_resp));
  return res;
}

}  // namespace

CounterexampleResult build_counterexample(const Query& q,
                                          CounterexampleMode mode) {
  if (q.kind() != Query::Kind::Bcq)
    throw HypothesisError(
        "mode hypothesis not satisfied: a conjunctive query is required");
  if (!is_self_join_free(q))
    throw HypothesisError(
        "mode hypothesis not satisfied: the query must be self-join-free");
  if (q.has_constants())
    throw HypothesisError(
        "mode hypothesis not satisfied: the query must be constant-free");
  switch (mode) {
    case CounterexampleMode::SingleComponent:
      return build_single_component(q);
    case CounterexampleMode::MultiComponent:
      return build_multi_component(q);
    case CounterexampleMode::ShapleyVsCesResp:
      return build_shapley_vs(q);
  }
  throw DomainError("unknown counterexample mode");
}

std::string counterexample_to_text(const CounterexampleResult& r) {
  json doc = r.instance.to_json();
  doc["comment"] = r.provenance;
  json verdict;
  verdict["sc1"] = score_kind_name(r.verdict.sc1);
  verdict["sc2"] = score_kind_name(r.verdict.sc2);
  verdict["aligned"] = r.verdict.aligned;
  if (r.verdict.witness) {
    const AlignmentWitness& w = *r.verdict.witness;
    verdict["witness"] = {
        {"a", w.id_a},
        {"b", w.id_b},
        {"sc1_a", format_fraction(w.sc1_a)},
        {"sc1_b", format_fraction(w.sc1_b)},
        {"sc2_a", format_fraction(w.sc2_a)},
        {"sc2_b", format_fraction(w.sc2_b)},
    };
  }
  doc["verdict"] = std::move(verdict);
  return doc.dump(2) + "\n";
}

}  // namespace qscore
