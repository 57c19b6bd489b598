#include "qscore/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qscore/alignment.hpp"
#include "qscore/error.hpp"
#include "qscore/eval.hpp"
#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"
#include "qscore/scores.hpp"
#include "qscore/separability.hpp"
#include "qscore/structure.hpp"
#include "qscore/worlds.hpp"

namespace qscore::cli {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

Query query_from(const std::string& qtext, const std::string& reach) {
  if (!qtext.empty() && !reach.empty())
    throw UsageError("give either --query or --reach, not both");
  if (!qtext.empty()) return parse_query(qtext);
  if (!reach.empty()) {
    auto parts = split(reach, ',');
    if (parts.size() != 3)
      throw UsageError("--reach expects RELATION,SOURCE,TARGET");
    return Query::reachability(parts[0], parts[1], parts[2]);
  }
  throw UsageError("a query is required (--query or --reach)");
}

std::string fraction_and_decimal(const Rational& r) {
  return format_fraction(r) + " (" + format_decimal(r) + ")";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json verdict_json(const AlignmentVerdict& v) {
  json out;
  out["sc1"] = score_kind_name(v.sc1);
  out["sc2"] = score_kind_name(v.sc2);
  out["aligned"] = v.aligned;
  if (v.witness) {
    const AlignmentWitness& w = *v.witness;
    out["witness"] = {
        {"a", w.id_a},
        {"b", w.id_b},
        {"sc1_a", format_fraction(w.sc1_a)},
        {"sc1_b", format_fraction(w.sc1_b)},
        {"sc2_a", format_fraction(w.sc2_a)},
        {"sc2_b", format_fraction(w.sc2_b)},
    };
  }
  return out;
}

std::string verdict_text(const AlignmentVerdict& v) {
  std::string s1 = score_kind_name(v.sc1), s2 = score_kind_name(v.sc2);
  if (v.aligned) return "aligned (" + s1 + " vs " + s2 + ")\n";
  const AlignmentWitness& w = *v.witness;
  std::string out = "not aligned (" + s1 + " vs " + s2 + ")\n";
  out += "  " + w.id_a + ": " + s1 + "=" + fraction_and_decimal(w.sc1_a) +
         ", " + s2 + "=" + fraction_and_decimal(w.sc2_a) + "\n";
  out += "  " + w.id_b + ": " + s1 + "=" + fraction_and_decimal(w.sc1_b) +
         ", " + s2 + "=" + fraction_and_decimal(w.sc2_b) + "\n";
  out += "  (" + w.id_a + " is strictly below " + w.id_b + " on " + s1 +
         " and strictly above on " + s2 + ")\n";
  return out;
}

// ---- score ---------------------------------------------------------------

struct ScoreArgs {
  std::string instance_file, query, reach, scores = "ces,bpi,shapley,resp";
  std::string format = "table", oracle;
  int max_endo = 26;
  int max_contingency = -1;
};

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  Instance d = load_instance_text(read_file(a.instance_file));
  Query q = query_from(a.query, a.reach);
  std::vector<ScoreKind> kinds;
  for (const auto& name : split(a.scores, ',')) {
    try {
      kinds.push_back(score_kind_from_name(name));
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  ScoreOptions opts;
  opts.max_endo = a.max_endo;
  if (a.max_contingency >= 0) opts.max_contingency = a.max_contingency;

  ScoreReport rep = score_table(q, d, kinds, opts);

  std::optional<std::string> cross;
  if (!a.oracle.empty()) {
    ScoreReport oracle_rep;
    if (a.oracle == "qrs") {
      oracle_rep = analytic_oracle_qrs(d);
    } else if (a.oracle == "qr1sm") {
      int m = 0;
      for (const auto& rel : d.relations)
        if (rel.arity == 1) ++m;
      oracle_rep = analytic_oracle_qr1sm(d, m);
    } else {
      throw UsageError("--oracle expects qrs or qr1sm");
    }
    ScoreReport brute =
        score_table(q, d, {ScoreKind::Ces, ScoreKind::Resp}, opts);
    std::string mismatches;
    for (const auto& row : oracle_rep.rows) {
      const ScoreRow& b = brute.row(row.id);
      for (ScoreKind k : {ScoreKind::Ces, ScoreKind::Resp}) {
        if (row.scores.at(k) != b.scores.at(k))
          mismatches += "  " + row.id + " " + score_kind_name(k) +
                        ": analytic " + format_fraction(row.scores.at(k)) +
                        " vs exhaustive " + format_fraction(b.scores.at(k)) +
                        "\n";
      }
    }
    if (!mismatches.empty()) {
      err << "oracle cross-check FAILED:\n" << mismatches;
      return 1;
    }
    cross = "oracle cross-check: analytic and exhaustive scores match "
            "exactly (ces, resp)";
  }

  if (a.format == "json") {
    json doc = rep.to_json();
    if (cross) doc["oracleCrossCheck"] = *cross;
    out << doc.dump(2) << "\n";
  } else if (a.format == "csv") {
    out << rep.render_csv();
    if (cross) err << *cross << "\n";
  } else {
    out << rep.render_table();
    if (cross) out << *cross << "\n";
  }
  return 0;
}

// ---- prob ----------------------------------------------------------------

struct ProbArgs {
  std::string instance_file, query, reach, worlds_file;
  std::vector<std::string> interventions;
  std::string marginal, world = "\x01";  // sentinel: not given
  std::string format = "table";
  int max_endo = 26;
};

int cmd_prob(const ProbArgs& a, std::ostream& out, std::ostream&) {
  Instance d = load_instance_text(read_file(a.instance_file));
  PdbDistribution dist = a.worlds_file.empty()
                             ? PdbDistribution::tid_from_instance(d)
                             : PdbDistribution::load_explicit_text(
                                   d, read_file(a.worlds_file));
  for (const auto& iv : a.interventions) {
    auto colon = iv.find(':');
    if (colon == std::string::npos)
      throw UsageError("--do expects in:<tuple-id> or out:<tuple-id>");
    std::string dir = iv.substr(0, colon), id = iv.substr(colon + 1);
    if (dir != "in" && dir != "out")
      throw UsageError("--do expects in:<tuple-id> or out:<tuple-id>");
    dist = dist.intervene(id, dir == "in" ? Intervention::In
                                          : Intervention::Out);
  }

  std::string label;
  Rational p;
  if (!a.marginal.empty()) {
    label = "marginal of " + a.marginal;
    p = dist.tuple_marginal(a.marginal);
  } else if (a.world != "\x01") {
    std::vector<std::string> ids;
    if (!a.world.empty()) ids = split(a.world, ',');
    label = "world probability";
    p = dist.world_probability(ids);
  } else {
    Query q = query_from(a.query, a.reach);
    label = "query probability";
    p = dist.query_probability(q, a.max_endo);
  }

  if (a.format == "json") {
    json doc{{"label", label},
             {"fraction", format_fraction(p)},
             {"decimal", format_decimal(p)}};
    out << doc.dump(2) << "\n";
  } else if (a.format == "csv") {
    out << "label,fraction,decimal\n"
        << label << "," << format_fraction(p) << "," << format_decimal(p)
        << "\n";
  } else {
    out << label << ": " << fraction_and_decimal(p) << "\n";
  }
  return 0;
}

// ---- classify --------------------------------------------------------------

// Query-level constant elimination: constants are checked positions; for
// classification (pure syntax) they simply project away, with primed
// relation names mirroring the instance-level rewrite.
Query project_constants(const Query& q) {
  if (q.kind() != Query::Kind::Bcq || !q.has_constants()) return q;
  std::set<std::string> taken;
  for (const auto& a : q.atoms()) taken.insert(a.relation);
  std::vector<Atom> atoms;
  for (const auto& a : q.atoms()) {
    bool has_const = false;
    for (const auto& t : a.terms) has_const |= t.kind == Term::Kind::Const;
    if (!has_const) {
      atoms.push_back(a);
      continue;
    }
    Atom na;
    na.relation = a.relation + "'";
    while (taken.count(na.relation)) na.relation += "'";
    taken.insert(na.relation);
    for (const auto& t : a.terms)
      if (t.kind == Term::Kind::Var) na.terms.push_back(t);
    atoms.push_back(std::move(na));
  }
  return Query::bcq(std::move(atoms));
}

struct ClassifyArgs {
  std::string query, format = "table";
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream&) {
  Query q = parse_query(a.query);
  Query projected = project_constants(q);
  ClassificationVerdict v = classify(projected);

  if (a.format == "json") {
    json doc;
    doc["query"] = q.to_string();
    if (projected.to_string() != q.to_string())
      doc["constantFreeForm"] = projected.to_string();
    doc["components"] = v.component_count;
    doc["coincidenceCells"] = v.coincidence_cell_count;
    doc["withExogenous"] = {{"class", alignment_class_name(v.with_exogenous)},
                            {"rule", v.with_exogenous_rule}};
    doc["withoutExogenous"] = {
        {"class", alignment_class_name(v.without_exogenous)},
        {"rule", v.without_exogenous_rule}};
    if (v.collapsed_form) doc["collapsedForm"] = *v.collapsed_form;
    out << doc.dump(2) << "\n";
  } else {
    out << "query: " << q.to_string() << "\n";
    if (projected.to_string() != q.to_string())
      out << "constant-free form: " << projected.to_string() << "\n";
    out << "components: " << v.component_count << "\n";
    out << "coincidence cells: " << v.coincidence_cell_count << "\n";
    out << "with exogenous:    " << alignment_class_name(v.with_exogenous)
        << " — " << v.with_exogenous_rule << "\n";
    out << "without exogenous: " << alignment_class_name(v.without_exogenous)
        << " — " << v.without_exogenous_rule << "\n";
    if (v.collapsed_form) out << "collapsed form: " << *v.collapsed_form << "\n";
  }
  return 0;
}

// ---- reduce ----------------------------------------------------------------

struct ReduceArgs {
  std::string instance_file, query, format = "table";
};

int cmd_reduce(const ReduceArgs& a, std::ostream& out, std::ostream&) {
  Instance d = load_instance_text(read_file(a.instance_file));
  Query q = parse_query(a.query);
  ReductionResult r = reduce(q, d);

  json jmap;
  for (const auto& [from, to] : r.tuple_map) jmap[from] = to;
  json jconst;
  for (const auto& [name, combo] : r.constant_map) jconst[name] = combo;

  if (a.format == "json") {
    json doc;
    doc["query"] = r.query.to_string();
    doc["instance"] = r.instance.to_json();
    doc["tupleMap"] = std::move(jmap);
    doc["constantMap"] = std::move(jconst);
    out << doc.dump(2) << "\n";
  } else {
    out << "reduced query: " << r.query.to_string() << "\n";
    for (const auto& [name, combo] : r.constant_map) {
      out << "  " << name << " = (";
      for (std::size_t i = 0; i < combo.size(); ++i)
        out << (i ? "," : "") << combo[i];
      out << ")\n";
    }
    out << r.instance.to_json().dump(2) << "\n";
  }
  return 0;
}

// ---- align -----------------------------------------------------------------

struct AlignArgs {
  std::string instance_file, query, reach, pair = "ces:resp";
  std::string format = "table";
  bool search = false;
  int trials = 500;
  std::uint64_t seed = 0;
  int max_endo = 26;
};

int cmd_align(const AlignArgs& a, std::ostream& out, std::ostream&) {
  auto pair = split(a.pair, ':');
  if (pair.size() != 2)
    throw UsageError("--pair expects <score>:<score>, e.g. shapley:ces");
  ScoreKind sc1, sc2;
  try {
    sc1 = score_kind_from_name(pair[0]);
    sc2 = score_kind_from_name(pair[1]);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  Query q = query_from(a.query, a.reach);
  ScoreOptions opts;
  opts.max_endo = a.max_endo;

  if (a.search) {
    if (!a.instance_file.empty())
      throw UsageError("--search generates instances; drop --instance");
    auto res = random_alignment_search(q, sc1, sc2, a.trials, a.seed, opts);
    if (a.format == "json") {
      json doc;
      doc["seed"] = a.seed;
      doc["trials"] = a.trials;
      if (res) {
        doc["found"] = true;
        doc["trial"] = res->trial;
        doc["verdict"] = verdict_json(res->verdict);
        doc["instance"] = res->instance.to_json();
      } else {
        doc["found"] = false;
      }
      out << doc.dump(2) << "\n";
    } else if (res) {
      out << "violation found on instance " << res->trial << " (seed "
          << a.seed << ")\n";
      out << verdict_text(res->verdict);
      out << res->instance.to_json().dump(2) << "\n";
    } else {
      out << "no violation found in " << a.trials << " instances (seed "
          << a.seed << ")\n";
    }
    return 0;
  }

  if (a.instance_file.empty())
    throw UsageError("an instance is required (--instance, or use --search)");
  Instance d = load_instance_text(read_file(a.instance_file));
  AlignmentVerdict v = check_alignment(q, d, sc1, sc2, opts);
  if (a.format == "json") {
    out << verdict_json(v).dump(2) << "\n";
  } else {
    out << verdict_text(v);
  }
  return 0;
}

// ---- counterexample --------------------------------------------------------

struct CounterArgs {
  std::string query, mode;
};

int cmd_counterexample(const CounterArgs& a, std::ostream& out,
                       std::ostream& err) {
  Query q = parse_query(a.query);
  CounterexampleMode mode;
  try {
    mode = counterexample_mode_from_name(a.mode);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  CounterexampleResult r = build_counterexample(q, mode);
  out << counterexample_to_text(r);
  err << "verified: " << verdict_text(r.verdict);
  return 0;
}

int run(const std::vector<std::string>& argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"exact tuple-attribution scores for monotone Boolean queries"};
  app.require_subcommand(1);

  ScoreArgs sa;
  CLI::App* score = app.add_subcommand(
      "score", "compute attribution scores for every endogenous tuple");
  score->add_option("-i,--instance", sa.instance_file, "instance JSON file")
      ->required();
  score->add_option("-q,--query", sa.query, "conjunctive query text");
  score->add_option("--reach", sa.reach,
                    "reachability query: RELATION,SOURCE,TARGET");
  score->add_option("--scores", sa.scores,
                    "comma list of ces,bpi,shapley,resp");
  score->add_option("--format", sa.format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  score->add_option("--oracle", sa.oracle,
                    "cross-check against a closed form: qrs or qr1sm")
      ->check(CLI::IsMember({"qrs", "qr1sm"}));
  score->add_option("--max-endo", sa.max_endo,
                    "refuse instances with more endogenous tuples");
  score->add_option("--max-contingency", sa.max_contingency,
                    "bound on contingency-set size for resp");

  ProbArgs pa;
  CLI::App* prob = app.add_subcommand(
      "prob", "query/world/marginal probability under a distribution");
  prob->add_option("-i,--instance", pa.instance_file, "instance JSON file")
      ->required();
  prob->add_option("-q,--query", pa.query, "conjunctive query text");
  prob->add_option("--reach", pa.reach,
                   "reachability query: RELATION,SOURCE,TARGET");
  prob->add_option("-w,--worlds", pa.worlds_file,
                   "explicit world-distribution JSON file");
  prob->add_option("--do", pa.interventions,
                   "intervention in:<tuple-id> or out:<tuple-id>; repeatable");
  prob->add_option("--marginal", pa.marginal,
                   "report this tuple's marginal instead");
  prob->add_option("--world", pa.world,
                   "report this world's probability (comma list of ids)");
  prob->add_option("--format", pa.format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  prob->add_option("--max-endo", pa.max_endo,
                   "refuse instances with more endogenous tuples");

  ClassifyArgs ca;
  CLI::App* cls = app.add_subcommand(
      "classify", "alignment guarantee for a query, by syntax alone");
  cls->add_option("-q,--query", ca.query, "conjunctive query text")
      ->required();
  cls->add_option("--format", ca.format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));

  ReduceArgs ra;
  CLI::App* red = app.add_subcommand(
      "reduce", "collapse coincident variables of query and instance");
  red->add_option("-i,--instance", ra.instance_file, "instance JSON file")
      ->required();
  red->add_option("-q,--query", ra.query, "conjunctive query text")
      ->required();
  red->add_option("--format", ra.format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));

  AlignArgs aa;
  CLI::App* al = app.add_subcommand(
      "align", "check two scores for rank reversals on an instance");
  al->add_option("-i,--instance", aa.instance_file, "instance JSON file");
  al->add_option("-q,--query", aa.query, "conjunctive query text");
  al->add_option("--reach", aa.reach,
                 "reachability query: RELATION,SOURCE,TARGET");
  al->add_option("--pair", aa.pair, "score pair, e.g. shapley:ces");
  al->add_flag("--search", aa.search,
               "search seeded random instances for a violation");
  al->add_option("--trials", aa.trials, "instances to try with --search");
  al->add_option("--seed", aa.seed, "random seed for --search");
  al->add_option("--format", aa.format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));
  al->add_option("--max-endo", aa.max_endo,
                 "refuse instances with more endogenous tuples");

  CounterArgs xa;
  CLI::App* ctr = app.add_subcommand(
      "counterexample", "build a verified score-reversal instance");
  ctr->add_option("-q,--query", xa.query, "conjunctive query text")
      ->required();
  ctr->add_option("--mode", xa.mode,
                  "single-component, multi-component or shapley-vs-ces-resp")
      ->required();

  std::vector<const char*> cargv;
  cargv.push_back("qscore");
  for (const auto& s : argv) cargv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*score) return cmd_score(sa, out, err);
    if (*prob) return cmd_prob(pa, out, err);
    if (*cls) return cmd_classify(ca, out, err);
    if (*red) return cmd_reduce(ra, out, err);
    if (*al) return cmd_align(aa, out, err);
    if (*ctr) return cmd_counterexample(xa, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "usage error: a subcommand is required\n";
  return 2;
}

}  // namespace

ExecResult execute(const std::vector<std::string>& argv) {
  ExecResult r;
  std::ostringstream out, err;
  r.exit_code = run(argv, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  ExecResult r = execute(args);
  std::cout << r.out;
  std::cerr << r.err;
  return r.exit_code;
}

}  // namespace qscore::cli
