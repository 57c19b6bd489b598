#include "qscore/scores.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include <json.hpp>

#include "qscore/error.hpp"
#include "qscore/eval.hpp"
#include "qscore/worlds.hpp"

namespace qscore {

using nlohmann::json;

const char* score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::Ces: return "ces";
    case ScoreKind::Bpi: return "bpi";
    case ScoreKind::Shapley: return "shapley";
    case ScoreKind::Resp: return "resp";
  }
  return "?";
}

ScoreKind score_kind_from_name(const std::string& name) {
  if (name == "ces") return ScoreKind::Ces;
  if (name == "bpi") return ScoreKind::Bpi;
  if (name == "shapley") return ScoreKind::Shapley;
  if (name == "resp") return ScoreKind::Resp;
  throw DomainError("unknown score '" + name +
                    "' (expected ces, bpi, shapley or resp)");
}

namespace {

const Tuple& endo_tuple(const Instance& d, const std::string& id,
                        const char* op) {
  const Tuple& t = d.tuple_by_id(id);
  if (!t.endo)
    throw DomainError(std::string(op) + " is defined for endogenous tuples; " +
                      id + " is exogenous");
  return t;
}

void check_endo_cap(int n, const ScoreOptions& opts, const char* op) {
  if (n > opts.max_endo)
    throw CapExceededError(std::string(op) + " enumerates 2^" +
                           std::to_string(n) + " worlds; cap is 2^" +
                           std::to_string(opts.max_endo) +
                           " (raise the cap explicitly to proceed)");
}

// One pass over all worlds. For a satisfied world W the intersection of
// its contained witnesses is exactly the set of tuples whose single
// removal falsifies W, so each (tuple, |W|) pair feeds every permutation /
// subset weighting at once.
class Sweep {
 public:
  Sweep(const Query& q, const Instance& d, const ScoreOptions& opts)
      : ev_(q, d), n_(ev_.endo_count()) {
    check_endo_cap(n_, opts, "score computation");
    counts_.assign(static_cast<std::size_t>(n_) * std::max(n_, 1), 0);
    const std::uint64_t limit = n_ == 64 ? 0 : (1ull << n_);
    for (std::uint64_t mask = 0; mask != limit; ++mask) {
      auto [sat, crit] = ev_.sat_and_critical(mask);
      if (!sat || crit == 0) continue;
      int k = std::popcount(mask) - 1;  // |S| with S = W minus the tuple
      std::uint64_t rest = crit;
      while (rest) {
        int t = std::countr_zero(rest);
        rest &= rest - 1;
        ++counts_[static_cast<std::size_t>(t) * n_ + k];
      }
    }
  }

  int n() const { return n_; }
  const Evaluator& evaluator() const { return ev_; }

  Rational bpi(int t) const {
    std::uint64_t swings = 0;
    for (int k = 0; k < n_; ++k) swings += count(t, k);
    return Rational(BigInt(swings), pow2(n_ - 1));
  }

  Rational shapley(int t) const {
    BigInt num = 0;
    for (int k = 0; k < n_; ++k)
      num += BigInt(count(t, k)) * factorial(k) * factorial(n_ - k - 1);
    return Rational(num, factorial(n_));
  }

 private:
  std::uint64_t count(int t, int k) const {
    return counts_[static_cast<std::size_t>(t) * n_ + k];
  }

  Evaluator ev_;
  int n_;
  std::vector<std::uint64_t> counts_;
};

// Iterative deepening over contingency sizes; subsets of a given size in
// ascending index order, so the first witness is deterministic.
std::pair<Rational, std::optional<ContingencyWitness>> responsibility_impl(
    const Evaluator& ev, const Instance& d, const Tuple& tau,
    const ScoreOptions& opts) {
  int n = ev.endo_count();
  std::uint64_t full = ev.full_mask();
  std::uint64_t tbit = 1ull << tau.endo_index;
  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != tau.endo_index) others.push_back(i);

  int limit = std::min<int>(opts.max_contingency.value_or(n),
                            static_cast<int>(others.size()));
  std::vector<int> pick;
  std::uint64_t found = 0;
  bool ok = false;
  auto swing = [&](std::uint64_t gamma) {
    std::uint64_t with = (full & ~gamma) | tbit;
    return ev.eval(with) && !ev.eval(with & ~tbit);
  };
  auto rec = [&](auto&& self, int start, int remaining, std::uint64_t gamma)
      -> bool {
    if (remaining == 0) {
      if (swing(gamma)) {
        found = gamma;
        return true;
      }
      return false;
    }
    for (int i = start; i + remaining <= static_cast<int>(others.size()); ++i) {
      if (self(self, i + 1, remaining - 1, gamma | (1ull << others[i])))
        return true;
    }
    return false;
  };
  for (int k = 0; k <= limit && !ok; ++k) ok = rec(rec, 0, k, 0);

  if (!ok) return {Rational(0), std::nullopt};
  ContingencyWitness w;
  w.ids = world_ids_from_mask(d, found);
  int size = std::popcount(found);
  return {Rational(1, 1 + size), std::move(w)};
}

}  // namespace

Rational delta(const Query& q, const Instance& d,
               const std::vector<std::string>& world_ids,
               const std::string& tuple_id) {
  const Tuple& t = endo_tuple(d, tuple_id, "delta");
  std::uint64_t s = world_mask_from_ids(d, world_ids);
  std::uint64_t tbit = 1ull << t.endo_index;
  if (s & tbit)
    throw DomainError("delta: the world already contains " + tuple_id);
  Evaluator ev(q, d);
  return Rational((ev.eval(s | tbit) ? 1 : 0) - (ev.eval(s) ? 1 : 0));
}

Rational bpi(const Query& q, const Instance& d, const std::string& tuple_id,
             const ScoreOptions& opts) {
  const Tuple& t = endo_tuple(d, tuple_id, "bpi");
  return Sweep(q, d, opts).bpi(t.endo_index);
}

Rational shapley(const Query& q, const Instance& d,
                 const std::string& tuple_id, const ScoreOptions& opts) {
  const Tuple& t = endo_tuple(d, tuple_id, "shapley");
  return Sweep(q, d, opts).shapley(t.endo_index);
}

Rational ces(const Query& q, const Instance& d, const std::string& tuple_id,
             const ScoreOptions& opts) {
  endo_tuple(d, tuple_id, "ces");
  check_endo_cap(d.endo_count(), opts, "causal effect");
  // Through the interventional route by definition; coincides with bpi.
  PdbDistribution base = PdbDistribution::uniform_half_tid(d);
  Rational p_in = base.intervene(tuple_id, Intervention::In)
                      .query_probability(q, opts.max_endo);
  Rational p_out = base.intervene(tuple_id, Intervention::Out)
                       .query_probability(q, opts.max_endo);
  return p_in - p_out;
}

std::pair<Rational, std::optional<ContingencyWitness>> responsibility(
    const Query& q, const Instance& d, const std::string& tuple_id,
    const ScoreOptions& opts) {
  const Tuple& t = endo_tuple(d, tuple_id, "responsibility");
  Evaluator ev(q, d);
  return responsibility_impl(ev, d, t, opts);
}

std::vector<std::vector<std::string>> swinging_sets(
    const Query& q, const Instance& d, const std::string& tuple_id,
    const ScoreOptions& opts) {
  const Tuple& t = endo_tuple(d, tuple_id, "swinging_sets");
  Evaluator ev(q, d);
  int n = ev.endo_count();
  check_endo_cap(n, opts, "swinging-set enumeration");
  std::uint64_t tbit = 1ull << t.endo_index;
  std::vector<std::vector<std::string>> out;
  const std::uint64_t limit = n == 64 ? 0 : (1ull << n);
  for (std::uint64_t mask = 0; mask != limit; ++mask) {
    if (!(mask & tbit)) continue;
    if (ev.eval(mask) && !ev.eval(mask & ~tbit))
      out.push_back(world_ids_from_mask(d, mask));
  }
  return out;
}

std::vector<std::vector<std::string>> mss(const Query& q, const Instance& d,
                                          const ScoreOptions&) {
  Evaluator ev(q, d);
  std::vector<std::vector<std::string>> out;
  for (std::uint64_t mask : ev.witness_masks())
    out.push_back(world_ids_from_mask(d, mask));
  return out;
}

bool is_dummy(const Query& q, const Instance& d, const std::string& tuple_id,
              const ScoreOptions&) {
  const Tuple& t = endo_tuple(d, tuple_id, "is_dummy");
  Evaluator ev(q, d);
  std::uint64_t tbit = 1ull << t.endo_index;
  // τ swings some world iff τ lies in a minimal witness (drop τ from that
  // witness to exhibit the swing), so scanning witnesses is the same test
  // as the exhaustive one.
  for (std::uint64_t mask : ev.witness_masks())
    if (mask & tbit) return false;
  return true;
}

const ScoreRow& ScoreReport::row(const std::string& id) const {
  for (const auto& r : rows)
    if (r.id == id) return r;
  throw DomainError("no score row for tuple " + id);
}

ScoreReport score_table(const Query& q, const Instance& d,
                        const std::vector<ScoreKind>& kinds,
                        const ScoreOptions& opts) {
  ScoreReport rep;
  for (ScoreKind k : kinds)
    if (std::find(rep.kinds.begin(), rep.kinds.end(), k) == rep.kinds.end())
      rep.kinds.push_back(k);

  bool need_sweep = false, need_resp = false;
  for (ScoreKind k : rep.kinds)
    (k == ScoreKind::Resp ? need_resp : need_sweep) = true;

  std::optional<Sweep> sweep;
  std::optional<Evaluator> ev;
  if (need_sweep) {
    sweep.emplace(q, d, opts);
  } else if (need_resp) {
    ev.emplace(q, d);
  }
  const Evaluator& evaluator = sweep ? sweep->evaluator() : *ev;

  for (int ti : d.endo_tuple_indices()) {
    const Tuple& t = d.tuples[ti];
    ScoreRow row;
    row.id = t.id;
    row.relation = d.relations[t.relation_index].name;
    row.values = t.values;
    for (ScoreKind k : rep.kinds) {
      switch (k) {
        case ScoreKind::Ces:
        case ScoreKind::Bpi:
          row.scores[k] = sweep->bpi(t.endo_index);
          break;
        case ScoreKind::Shapley:
          row.scores[k] = sweep->shapley(t.endo_index);
          break;
        case ScoreKind::Resp: {
          auto [r, w] = responsibility_impl(evaluator, d, t, opts);
          row.scores[k] = r;
          row.resp_witness = std::move(w);
          break;
        }
      }
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string score_cell(const Rational& r) {
  return format_fraction(r) + " (" + format_decimal(r) + ")";
}

}  // namespace

std::string ScoreReport::render_table() const {
  std::vector<std::string> header = {"tuple", "relation", "values"};
  for (ScoreKind k : kinds) header.push_back(score_kind_name(k));
  bool witness_col =
      std::find(kinds.begin(), kinds.end(), ScoreKind::Resp) != kinds.end();
  if (witness_col) header.push_back("witness");

  std::vector<std::vector<std::string>> grid{header};
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.id, r.relation,
                                     "(" + join(r.values, ",") + ")"};
    for (ScoreKind k : kinds) line.push_back(score_cell(r.scores.at(k)));
    if (witness_col)
      line.push_back(r.resp_witness ? join(r.resp_witness->ids, ",") : "-");
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c)
      width[c] = std::max(width[c], line[c].size());

  std::string out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out += line[c];
      if (c + 1 < line.size())
        out += std::string(width[c] - line[c].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

std::string ScoreReport::render_csv() const {
  bool witness_col =
      std::find(kinds.begin(), kinds.end(), ScoreKind::Resp) != kinds.end();
  std::string out = "id,relation,values";
  for (ScoreKind k : kinds) {
    out += std::string(",") + score_kind_name(k) + "," + score_kind_name(k) +
           "_decimal";
  }
  if (witness_col) out += ",witness";
  out += "\n";
  for (const auto& r : rows) {
    out += csv_field(r.id) + "," + csv_field(r.relation) + "," +
           csv_field(join(r.values, " "));
    for (ScoreKind k : kinds) {
      const Rational& v = r.scores.at(k);
      out += "," + csv_field(format_fraction(v)) + "," + format_decimal(v);
    }
    if (witness_col)
      out += "," + csv_field(r.resp_witness ? join(r.resp_witness->ids, " ")
                                            : "");
    out += "\n";
  }
  return out;
}

json ScoreReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["id"] = r.id;
    jr["relation"] = r.relation;
    jr["values"] = r.values;
    for (ScoreKind k : kinds) {
      const Rational& v = r.scores.at(k);
      jr[score_kind_name(k)] = {{"fraction", format_fraction(v)},
                                {"decimal", format_decimal(v)}};
    }
    if (std::find(kinds.begin(), kinds.end(), ScoreKind::Resp) != kinds.end())
      jr["respWitness"] =
          r.resp_witness ? json(r.resp_witness->ids) : json(nullptr);
    rows_json.push_back(std::move(jr));
  }
  return json{{"scores", std::move(rows_json)}};
}

}  // namespace qscore
