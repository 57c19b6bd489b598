// Alignment verdicts, randomized search, and counterexample construction.

#include <doctest.h>

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

#include "qscore/alignment.hpp"
#include "qscore/error.hpp"
#include "qscore/model.hpp"
#include "qscore/query.hpp"
#include "qscore/rational.hpp"
#include "qscore/scores.hpp"

using namespace qscore;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
  return std::string(QSCORE_FIXTURE_DIR) + "/" + name;
}

Rational frac(const std::string& s) { return parse_rational(s); }

std::vector<const Tuple*> rel_tuples(const Instance& d,
                                     const std::string& name) {
  const Relation* r = d.find_relation(name);
  REQUIRE(r != nullptr);
  std::vector<const Tuple*> out;
  for (int i : r->tuple_indices) out.push_back(&d.tuples[i]);
  return out;
}

}  // namespace

TEST_CASE("two-sided star: shapley reverses against both ces and resp") {
  Instance d = load_instance_file(fixture("rs_star.json"));
  Query q = parse_query("R(x,y), S(x,z)");

  AlignmentVerdict v = check_alignment(q, d, ScoreKind::Shapley,
                                       ScoreKind::Ces);
  CHECK(v.sc1 == ScoreKind::Shapley);
  CHECK(v.sc2 == ScoreKind::Ces);
  CHECK_FALSE(v.aligned);
  REQUIRE(v.witness.has_value());
  CHECK(v.witness->id_a == "t4");
  CHECK(v.witness->id_b == "t6");
  CHECK(v.witness->sc1_a == frac("151/2520"));
  CHECK(v.witness->sc1_b == frac("169/2520"));
  CHECK(v.witness->sc2_a == frac("19/256"));
  CHECK(v.witness->sc2_b == frac("15/256"));

  AlignmentVerdict vr = check_alignment(q, d, ScoreKind::Shapley,
                                        ScoreKind::Resp);
  CHECK_FALSE(vr.aligned);
  REQUIRE(vr.witness.has_value());
  CHECK(vr.witness->id_a == "t4");
  CHECK(vr.witness->id_b == "t6");
  CHECK(vr.witness->sc2_a == frac("1/4"));
  CHECK(vr.witness->sc2_b == frac("1/5"));

  // ces and resp rank this instance consistently even though shapley does not.
  AlignmentVerdict cr = check_alignment(q, d, ScoreKind::Ces, ScoreKind::Resp);
  CHECK(cr.aligned);
  CHECK_FALSE(cr.witness.has_value());
}

TEST_CASE("three-relation star: ces and resp disagree on the branch tuples") {
  Instance d = load_instance_file(fixture("rst_star.json"));
  Query q = parse_query("R(x), S(x,y), T(y)");

  AlignmentVerdict v = check_alignment(q, d, ScoreKind::Ces, ScoreKind::Resp);
  CHECK_FALSE(v.aligned);
  REQUIRE(v.witness.has_value());
  CHECK(v.witness->id_a == "t3");
  CHECK(v.witness->id_b == "t11");
  CHECK(v.witness->sc1_a == frac("1069/8192"));
  CHECK(v.witness->sc1_b == frac("1533/8192"));
  CHECK(v.witness->sc2_a == frac("1/3"));
  CHECK(v.witness->sc2_b == frac("1/4"));
}

TEST_CASE("aligned fixtures produce aligned verdicts without witnesses") {
  SUBCASE("reachability diamond, both score pairs") {
    Instance d = load_instance_file(fixture("path6.json"));
    Query q = Query::reachability("E", "a", "b");
    CHECK(check_alignment(q, d, ScoreKind::Ces, ScoreKind::Resp).aligned);
    CHECK(check_alignment(q, d, ScoreKind::Ces, ScoreKind::Shapley).aligned);
  }
  SUBCASE("binary join with an exogenous support tuple") {
    Instance d = load_instance_file(fixture("d2.json"));
    Query q = parse_query("R(x,y), S(x)");
    AlignmentVerdict v =
        check_alignment(q, d, ScoreKind::Ces, ScoreKind::Resp);
    CHECK(v.aligned);
    CHECK_FALSE(v.witness.has_value());
  }
  SUBCASE("five-tuple join, exogenous and all-endogenous variants") {
    Query q = parse_query("R(x,y), S(x,z)");
    CHECK(check_alignment(q, load_instance_file(fixture("qrs54_exo.json")),
                          ScoreKind::Ces, ScoreKind::Resp)
              .aligned);
    CHECK(check_alignment(q, load_instance_file(fixture("qrs54_endo.json")),
                          ScoreKind::Ces, ScoreKind::Resp)
              .aligned);
  }
}

TEST_CASE("four-relation chain fixture: first violating pair in load order") {
  Instance d = load_instance_file(fixture("sec6.json"));
  Query q = parse_query("R1(x,y,z), R2(y,z), R3(y,z,w,v), R4(v)");
  AlignmentVerdict v = check_alignment(q, d, ScoreKind::Shapley,
                                       ScoreKind::Ces);
  CHECK_FALSE(v.aligned);
  REQUIRE(v.witness.has_value());
  // Endogenous tuples are t1..t3 and t6..t11; the reversal appears between
  // the fourth and sixth endogenous rows.
  CHECK(v.witness->id_a == "t6");
  CHECK(v.witness->id_b == "t8");
  CHECK(v.witness->sc1_a == frac("151/2520"));
  CHECK(v.witness->sc2_a == frac("19/256"));
}

TEST_CASE("randomized search is deterministic for a fixed seed") {
  Query q = parse_query("R(x), S(x,y), T(y)");
  auto first = random_alignment_search(q, ScoreKind::Ces, ScoreKind::Resp,
                                       200, 7);
  REQUIRE(first.has_value());
  CHECK(first->seed == 7);
  CHECK(first->trial == 102);
  CHECK_FALSE(first->verdict.aligned);
  REQUIRE(first->verdict.witness.has_value());
  CHECK(first->verdict.witness->id_a == "t4");
  CHECK(first->verdict.witness->id_b == "t12");
  CHECK(first->verdict.witness->sc1_a == frac("1/8"));
  CHECK(first->verdict.witness->sc1_b == frac("3/16"));
  CHECK(first->verdict.witness->sc2_a == frac("1/2"));
  CHECK(first->verdict.witness->sc2_b == frac("1/3"));

  auto second = random_alignment_search(q, ScoreKind::Ces, ScoreKind::Resp,
                                        200, 7);
  REQUIRE(second.has_value());
  CHECK(second->trial == first->trial);
  CHECK(second->instance.to_json() == first->instance.to_json());

  // The violating instance genuinely violates when re-checked from scratch.
  AlignmentVerdict again = check_alignment(q, first->instance, ScoreKind::Ces,
                                           ScoreKind::Resp);
  CHECK_FALSE(again.aligned);
  REQUIRE(again.witness.has_value());
  CHECK(again.witness->id_a == "t4");
  CHECK(again.witness->id_b == "t12");
}

TEST_CASE("randomized search comes back empty when no violation is found") {
  SUBCASE("not enough trials to reach the first violation") {
    Query q = parse_query("R(x), S(x,y), T(y)");
    CHECK_FALSE(random_alignment_search(q, ScoreKind::Ces, ScoreKind::Resp,
                                        100, 7)
                    .has_value());
  }
  SUBCASE("hierarchical query without shared variables never violates") {
    Query q = parse_query("R(x), S(y)");
    CHECK_FALSE(random_alignment_search(q, ScoreKind::Ces, ScoreKind::Resp,
                                        60, 0)
                    .has_value());
  }
}

TEST_CASE("multi-component construction on a star with an opposite atom") {
  Query q = parse_query("R(x), S(y), T(y)");
  CounterexampleResult r = build_counterexample(
      q, CounterexampleMode::MultiComponent);

  CHECK(r.provenance ==
        "multi-component construction: pair atoms S, T sharing y; "
        "opposite atom R on x");
  CHECK(r.extra.empty());

  CHECK_FALSE(r.verdict.aligned);
  CHECK(r.verdict.sc1 == ScoreKind::Ces);
  CHECK(r.verdict.sc2 == ScoreKind::Resp);
  REQUIRE(r.verdict.witness.has_value());
  CHECK(r.verdict.witness->id_a == "t1");
  CHECK(r.verdict.witness->id_b == "t3");
  CHECK(r.verdict.witness->sc1_a == frac("23/64"));
  CHECK(r.verdict.witness->sc1_b == frac("27/64"));
  CHECK(r.verdict.witness->sc2_a == frac("1/2"));
  CHECK(r.verdict.witness->sc2_b == frac("1/3"));

  // Exact generated instance: two opposite-atom tuples, a three-value seed
  // on the shared variable, and one exogenous pair tuple.
  auto in_r = rel_tuples(r.instance, "R");
  auto in_s = rel_tuples(r.instance, "S");
  auto in_t = rel_tuples(r.instance, "T");
  REQUIRE(in_r.size() == 2);
  REQUIRE(in_s.size() == 3);
  REQUIRE(in_t.size() == 3);
  CHECK(in_r[0]->id == "t1");
  CHECK(in_r[0]->values == std::vector<std::string>{"d1"});
  CHECK(in_r[1]->values == std::vector<std::string>{"d2"});
  CHECK(in_s[0]->id == "t3");
  CHECK(in_s[0]->values == std::vector<std::string>{"c1"});
  CHECK(in_t[0]->id == "t6");
  CHECK(in_t[0]->values == std::vector<std::string>{"c1"});
  CHECK_FALSE(in_t[0]->endo);
  CHECK(in_t[1]->endo);
  for (const Tuple* t : in_r) CHECK(t->endo);
  for (const Tuple* t : in_s) CHECK(t->endo);

  // Re-checking the emitted instance reproduces the stored verdict.
  AlignmentVerdict again = check_alignment(q, r.instance, ScoreKind::Ces,
                                           ScoreKind::Resp);
  CHECK_FALSE(again.aligned);
  CHECK(again.witness->id_a == "t1");
  CHECK(again.witness->id_b == "t3");
}

TEST_CASE("multi-component construction handles wider schemas") {
  SUBCASE("five relations; pair and opposite picked from distinct components") {
    Query q = parse_query("R1(x,y), R2(z), R3(z), R4(z), R5(w,v)");
    CounterexampleResult r = build_counterexample(
        q, CounterexampleMode::MultiComponent);
    CHECK(r.provenance ==
          "multi-component construction: pair atoms R2, R3 sharing z; "
          "opposite atom R5 on w");
    CHECK_FALSE(r.verdict.aligned);
    REQUIRE(r.verdict.witness.has_value());
    CHECK(r.verdict.witness->id_a == "t1");
    CHECK(r.verdict.witness->id_b == "t3");
    CHECK(r.verdict.witness->sc1_a == frac("23/64"));
    CHECK(r.verdict.witness->sc1_b == frac("27/64"));

    // Opposite-atom tuples pad unused positions with the fresh constant;
    // relations outside the chosen components carry only exogenous support.
    std::set<std::string> exo, endo;
    for (const Relation& rel : r.instance.relations)
      for (int i : rel.tuple_indices) {
        const Tuple& t = r.instance.tuples[i];
        (t.endo ? endo : exo).insert(rel.name + ":" + t.id);
      }
    CHECK(endo == std::set<std::string>{"R5:t1", "R5:t2", "R2:t3", "R2:t4",
                                        "R2:t5", "R3:t7", "R3:t8"});
    CHECK(exo == std::set<std::string>{"R3:t6", "R4:t9", "R4:t10", "R4:t11",
                                       "R1:t12"});
    CHECK(rel_tuples(r.instance, "R5")[0]->values ==
          std::vector<std::string>{"d1", "@c"});
    CHECK(rel_tuples(r.instance, "R1")[0]->values ==
          std::vector<std::string>{"@c", "@c"});
  }
  SUBCASE("binary pair atom bound through the shared variable") {
    Query q = parse_query("A(x,y), B(y), C(z,w)");
    CounterexampleResult r = build_counterexample(
        q, CounterexampleMode::MultiComponent);
    CHECK_FALSE(r.verdict.aligned);
    CHECK(r.verdict.witness->id_a == "t1");
    CHECK(r.verdict.witness->id_b == "t3");
    CHECK(r.verdict.witness->sc1_a == frac("23/64"));
    CHECK(r.verdict.witness->sc2_a == frac("1/2"));
  }
  SUBCASE("extra atoms on the shared variable become exogenous copies") {
    Query q = parse_query("E(x,y), F(y), G(y), H(u,v)");
    CounterexampleResult r = build_counterexample(
        q, CounterexampleMode::MultiComponent);
    CHECK_FALSE(r.verdict.aligned);
    CHECK(r.verdict.witness->id_a == "t1");
    CHECK(r.verdict.witness->id_b == "t3");
    CHECK(r.verdict.witness->sc1_b == frac("27/64"));
    int exo_count = 0;
    for (const Tuple& t : r.instance.tuples)
      if (!t.endo) ++exo_count;
    CHECK(r.instance.tuples.size() == 11);
    CHECK(exo_count == 4);
    for (const Tuple* t : rel_tuples(r.instance, "G")) CHECK_FALSE(t->endo);
  }
}

TEST_CASE("score-vs-score construction reproduces the two-sided star") {
  Query q = parse_query("R(x,y), S(x,z)");
  CounterexampleResult r = build_counterexample(
      q, CounterexampleMode::ShapleyVsCesResp);

  CHECK(r.provenance ==
        "shapley-vs-ces-resp construction: atoms R, S; "
        "private variables y, z");

  CHECK_FALSE(r.verdict.aligned);
  CHECK(r.verdict.sc1 == ScoreKind::Shapley);
  CHECK(r.verdict.sc2 == ScoreKind::Ces);
  REQUIRE(r.verdict.witness.has_value());
  CHECK(r.verdict.witness->id_a == "t4");
  CHECK(r.verdict.witness->id_b == "t6");
  CHECK(r.verdict.witness->sc1_a == frac("151/2520"));
  CHECK(r.verdict.witness->sc1_b == frac("169/2520"));
  CHECK(r.verdict.witness->sc2_a == frac("19/256"));
  CHECK(r.verdict.witness->sc2_b == frac("15/256"));

  // The companion verdicts: shapley also reverses against resp, while ces
  // and resp agree on the same instance.
  REQUIRE(r.extra.size() == 2);
  CHECK(r.extra[0].sc1 == ScoreKind::Shapley);
  CHECK(r.extra[0].sc2 == ScoreKind::Resp);
  CHECK_FALSE(r.extra[0].aligned);
  REQUIRE(r.extra[0].witness.has_value());
  CHECK(r.extra[0].witness->id_a == "t4");
  CHECK(r.extra[0].witness->id_b == "t6");
  CHECK(r.extra[0].witness->sc2_a == frac("1/4"));
  CHECK(r.extra[0].witness->sc2_b == frac("1/5"));
  CHECK(r.extra[1].sc1 == ScoreKind::Ces);
  CHECK(r.extra[1].sc2 == ScoreKind::Resp);
  CHECK(r.extra[1].aligned);

  // Generated data: an asymmetric pair of first-column blocks, all
  // endogenous.
  auto in_r = rel_tuples(r.instance, "R");
  auto in_s = rel_tuples(r.instance, "S");
  REQUIRE(in_r.size() == 3);
  REQUIRE(in_s.size() == 6);
  CHECK(in_r[0]->values == std::vector<std::string>{"a", "c1"});
  CHECK(in_r[1]->values == std::vector<std::string>{"b", "c2"});
  CHECK(in_r[2]->values == std::vector<std::string>{"b", "c3"});
  CHECK(in_s[0]->values == std::vector<std::string>{"a", "c4"});
  CHECK(in_s[5]->values == std::vector<std::string>{"b", "c9"});
  for (const Tuple& t : r.instance.tuples) CHECK(t.endo);
}

TEST_CASE("score-vs-score construction collapses shared variables") {
  Query q = parse_query("R1(x,y,z), R2(y,z), R3(y,z,w,v), R4(v)");
  CounterexampleResult r = build_counterexample(
      q, CounterexampleMode::ShapleyVsCesResp);

  CHECK(r.provenance ==
        "shapley-vs-ces-resp construction: atoms R1, R3; "
        "private variables x, w; shared variables collapsed to a diagonal");

  CHECK_FALSE(r.verdict.aligned);
  REQUIRE(r.verdict.witness.has_value());
  CHECK(r.verdict.witness->id_a == "t4");
  CHECK(r.verdict.witness->id_b == "t6");
  CHECK(r.verdict.witness->sc1_a == frac("151/2520"));
  CHECK(r.verdict.witness->sc2_a == frac("19/256"));

  // Shared variables y, z take a single diagonal value per seed row; atoms
  // seeing only shared variables receive both diagonal tuples exogenously.
  auto in_r1 = rel_tuples(r.instance, "R1");
  auto in_r2 = rel_tuples(r.instance, "R2");
  auto in_r3 = rel_tuples(r.instance, "R3");
  auto in_r4 = rel_tuples(r.instance, "R4");
  CHECK(in_r1[0]->values == std::vector<std::string>{"c1", "a", "a"});
  CHECK(in_r1[1]->values == std::vector<std::string>{"c2", "b", "b"});
  CHECK(in_r3[0]->values == std::vector<std::string>{"a", "a", "c4", "@c"});
  REQUIRE(in_r2.size() == 2);
  CHECK(in_r2[0]->values == std::vector<std::string>{"a", "a"});
  CHECK(in_r2[1]->values == std::vector<std::string>{"b", "b"});
  CHECK_FALSE(in_r2[0]->endo);
  CHECK_FALSE(in_r2[1]->endo);
  REQUIRE(in_r4.size() == 1);
  CHECK(in_r4[0]->values == std::vector<std::string>{"@c"});
  CHECK_FALSE(in_r4[0]->endo);
}

TEST_CASE("single-component construction reports the aligned outcome") {
  // With contingency sets restricted to endogenous tuples, the lifted seed
  // gives every endogenous tuple the same responsibility, so the claimed
  // reversal never materializes; the builder says so instead of emitting a
  // bogus counterexample.
  for (const char* text : {"R(x,y), S(x,z)", "R(x,y), S(y,z)"}) {
    Query q = parse_query(text);
    CHECK_THROWS_WITH_AS(
        build_counterexample(q, CounterexampleMode::SingleComponent),
        doctest::Contains("verified as aligned"), VerificationError);
  }
}

TEST_CASE("construction hypotheses are checked up front") {
  auto mode_error = [](const char* text, CounterexampleMode mode,
                       const char* needle) {
    Query q = parse_query(text);
    CHECK_THROWS_WITH_AS(build_counterexample(q, mode),
                         doctest::Contains(needle), HypothesisError);
  };

  SUBCASE("single-component") {
    mode_error("R(x), S(y)", CounterexampleMode::SingleComponent,
               "must have a single component");
    mode_error("R(x,y), S(x,y)", CounterexampleMode::SingleComponent,
               "coincidence cells must be trivial");
    mode_error("R(x)", CounterexampleMode::SingleComponent,
               "at least two variables are required");
    mode_error("R(x,y), S(y,z), T(x,z)", CounterexampleMode::SingleComponent,
               "no variable pair with strictly nested atom sets");
  }
  SUBCASE("multi-component") {
    mode_error("R(x), S(x,y), T(y)", CounterexampleMode::MultiComponent,
               "at least two components are required");
    mode_error("R(x), S(y)", CounterexampleMode::MultiComponent,
               "a component with at least two atoms is required");
  }
  SUBCASE("score-vs-score") {
    mode_error("R(x), S(x)", CounterexampleMode::ShapleyVsCesResp,
               "mutually non-contained");
    mode_error("R(x), S(y)", CounterexampleMode::ShapleyVsCesResp,
               "mutually non-contained");
    mode_error("R(x,y), S(y,z), T(x,z)", CounterexampleMode::ShapleyVsCesResp,
               "joins both proof variables (x, z)");
  }
  SUBCASE("query shape restrictions apply to every mode") {
    for (CounterexampleMode mode : {CounterexampleMode::SingleComponent,
                                    CounterexampleMode::MultiComponent,
                                    CounterexampleMode::ShapleyVsCesResp}) {
      CHECK_THROWS_WITH_AS(
          build_counterexample(Query::reachability("E", "a", "b"), mode),
          doctest::Contains("conjunctive query is required"), HypothesisError);
      CHECK_THROWS_WITH_AS(
          build_counterexample(parse_query("R(x), R(y)"), mode),
          doctest::Contains("self-join-free"), HypothesisError);
      CHECK_THROWS_WITH_AS(
          build_counterexample(parse_query("R(x,'a'), S(x,y)"), mode),
          doctest::Contains("constant-free"), HypothesisError);
    }
  }
}

TEST_CASE("mode names round-trip") {
  for (CounterexampleMode mode : {CounterexampleMode::SingleComponent,
                                  CounterexampleMode::MultiComponent,
                                  CounterexampleMode::ShapleyVsCesResp})
    CHECK(counterexample_mode_from_name(counterexample_mode_name(mode)) ==
          mode);
  CHECK(counterexample_mode_name(CounterexampleMode::MultiComponent) ==
        std::string("multi-component"));
  CHECK_THROWS_AS(counterexample_mode_from_name("nonsense"), DomainError);
}

TEST_CASE("counterexample text embeds the verdict and stays loadable") {
  Query q = parse_query("R(x), S(y), T(y)");
  CounterexampleResult r = build_counterexample(
      q, CounterexampleMode::MultiComponent);
  std::string text = counterexample_to_text(r);

  json doc = json::parse(text);
  CHECK(doc.contains("relations"));
  CHECK(doc["comment"] == r.provenance);
  CHECK(doc["verdict"]["aligned"] == false);
  CHECK(doc["verdict"]["sc1"] == "ces");
  CHECK(doc["verdict"]["sc2"] == "resp");
  CHECK(doc["verdict"]["witness"]["a"] == "t1");
  CHECK(doc["verdict"]["witness"]["b"] == "t3");
  CHECK(doc["verdict"]["witness"]["sc1_a"] == "23/64");
  CHECK(doc["verdict"]["witness"]["sc2_b"] == "1/3");

  // The annotations are ignored by the loader, so the emitted text is a
  // working instance file.
  Instance loaded = load_instance_text(text);
  AlignmentVerdict again = check_alignment(q, loaded, ScoreKind::Ces,
                                           ScoreKind::Resp);
  CHECK_FALSE(again.aligned);
  REQUIRE(again.witness.has_value());
  CHECK(again.witness->id_a == "t1");
  CHECK(again.witness->id_b == "t3");
}
