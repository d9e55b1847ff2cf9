#include <doctest.h>

#include <algorithm>

#include "homesentry/logic/engine.hpp"
#include "homesentry/logic/parser.hpp"
#include "homesentry/rng.hpp"
#include "support/test_util.hpp"

using namespace homesentry::logic;
using homesentry::Rng;
using homesentry::shuffle;

namespace {

Atom atom(const std::string& text) {
  Program p = parse_program(text + ".");
  REQUIRE(p.facts.size() == 1);
  return p.facts[0];
}

}  // namespace

TEST_CASE("range + comparisons ground to exactly the satisfiable instances") {
  Program p = parse_program("permitted_operating_time(T) :- T > 4, T <= 22, T = 0..23.");
  GroundProgram g = ground(p, {});
  CHECK(g.rules.size() == 18);  // T in {5..22}
  AtomSet model = least_model(g);
  CHECK(model.size() == 18);
  for (int t = 0; t <= 23; ++t) {
    Atom a;
    a.pred = "permitted_operating_time";
    a.args = {Term::integer(t)};
    CHECK(model.count(a) == static_cast<std::size_t>(t > 4 && t <= 22));
  }
}

TEST_CASE("a variable-free rule grounds to itself") {
  Program p = parse_program("q(a) :- p(a). p(a).");
  GroundProgram g = ground(p, {});
  CHECK(g.rules.size() == 1);
  CHECK(least_model(g).count(atom("q(a)")) == 1);
}

TEST_CASE("inequality prunes the diagonal") {
  Program p = parse_program("p(a; b). r(S, D) :- p(S), p(D), S != D.");
  GroundProgram g = ground(p, {});
  CHECK(g.rules.size() == 2);  // (a,b) and (b,a)
  AtomSet model = least_model(g);
  CHECK(model.count(atom("r(a,b)")) == 1);
  CHECK(model.count(atom("r(b,a)")) == 1);
  CHECK(model.count(atom("r(a,a)")) == 0);
}

TEST_CASE("least model of the domain-assumption program derives protected(router)") {
  Program p = parse_program(R"(
password(router, 8).
encrypted(router, wpa2).
#const l = 8.
protected(router) :- password(router, L), L >= l, encrypted(router, wpa2).
)");
  AtomSet model = least_model(ground(p, {}));
  CHECK(model.count(atom("protected(router)")) == 1);
}

TEST_CASE("empty program has an empty model; facts-only model is the facts") {
  CHECK(least_model(ground(parse_program(""), {})).empty());
  Program facts = parse_program("p(a). q(b).");
  AtomSet model = least_model(ground(facts, {}));
  CHECK(model.size() == 2);
  CHECK(model.count(atom("p(a)")) == 1);
}

TEST_CASE("negation evaluates against lower strata") {
  Program p = parse_program(R"(
d(a). d(b). q(a).
p(X) :- d(X), not q(X).
)");
  AtomSet model = least_model(ground(p, {}));
  CHECK(model.count(atom("p(b)")) == 1);
  CHECK(model.count(atom("p(a)")) == 0);
}

TEST_CASE("recursive positive rules reach their fixpoint") {
  Program p = parse_program(R"(
edge(a, b). edge(b, c). edge(c, d).
reach(X, Y) :- edge(X, Y).
reach(X, Z) :- reach(X, Y), edge(Y, Z).
)");
  AtomSet model = least_model(ground(p, {}));
  CHECK(model.count(atom("reach(a,d)")) == 1);
  CHECK(model.count(atom("reach(b,d)")) == 1);
  CHECK(model.count(atom("reach(d,a)")) == 0);
}

TEST_CASE("least_model is invariant under statement permutation") {
  // A 50-rule stratified program assembled from simple chained predicates.
  std::vector<std::string> statements;
  for (int i = 0; i < 10; ++i) statements.push_back("base(n" + std::to_string(i) + ").");
  for (int i = 0; i < 20; ++i) {
    statements.push_back("layer1_" + std::to_string(i % 5) + "(X) :- base(X).");
  }
  for (int i = 0; i < 15; ++i) {
    statements.push_back("layer2_" + std::to_string(i % 3) + "(X) :- layer1_" +
                         std::to_string(i % 5) + "(X).");
  }
  for (int i = 0; i < 5; ++i) {
    statements.push_back("top(X) :- layer2_" + std::to_string(i % 3) +
                         "(X), not missing(X).");
  }
  auto render = [](const std::vector<std::string>& stmts) {
    std::string text;
    for (const auto& s : stmts) text += s + "\n";
    return text;
  };
  AtomSet reference = least_model(ground(parse_program(render(statements)), {}));
  CHECK(reference.count(atom("top(n3)")) == 1);
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> shuffled = statements;
    shuffle(shuffled, rng);
    AtomSet model = least_model(ground(parse_program(render(shuffled)), {}));
    CHECK(model == reference);
  }
}

TEST_CASE("check_satisfiable reports witnesses for violated constraints") {
  Program p = parse_program(":- communicate(_, X, _, _, _), malicious_endpoints(X).");
  std::vector<Atom> anomaly = {atom("communicate(bulb,c2c_server1,10,https,within_limit)"),
                               atom("malicious_endpoints(c2c_server1)")};
  SatResult r = check_satisfiable(p, anomaly);
  CHECK_FALSE(r.sat);
  REQUIRE(r.violated.size() == 1);
  CHECK(r.violated[0].witness.at("X").to_string() == "c2c_server1");
  CHECK(r.violated[0].ground_body.size() == 2);
}

TEST_CASE("an atom violating nothing is satisfiable") {
  Program p = parse_program(":- communicate(_, X, _, _, _), malicious_endpoints(X).");
  std::vector<Atom> anomaly = {atom("communicate(bulb,cloud,10,https,within_limit)")};
  CHECK(check_satisfiable(p, anomaly).sat);
}

TEST_CASE("the reference model is satisfiable alone and rejects the listing anomalies") {
  Program model = parse_program_file(testutil::assets_dir() + "/smart_home.lp");
  CHECK(check_satisfiable(model, {}).sat);

  std::vector<Atom> ultrasonic = {
      atom("communicate(smart_speaker, trusted_app_server, 23, https, within_limit)")};
  SatResult r = check_satisfiable(model, ultrasonic);
  CHECK_FALSE(r.sat);
  REQUIRE(r.violated.size() == 1);
  REQUIRE(r.violated[0].label.has_value());
  CHECK(r.violated[0].label->id == "IDEV1");

  std::vector<Atom> ddos = {
      atom("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit)")};
  SatResult r2 = check_satisfiable(model, ddos);
  CHECK_FALSE(r2.sat);
  REQUIRE(r2.violated.size() == 1);
  CHECK(r2.violated[0].label->id == "ADEV2");
}

TEST_CASE("exclude removes exactly the labelled constraint, persistently") {
  Program model = parse_program_file(testutil::assets_dir() + "/smart_home.lp");
  std::vector<Atom> ddos = {
      atom("communicate(multiple_endpoints, philipshuebridge, 10, https, exceeds_limit)")};
  REQUIRE_FALSE(check_satisfiable(model, ddos).sat);

  Program reduced = exclude(model, "ADEV2");
  CHECK(check_satisfiable(reduced, ddos).sat);
  CHECK(reduced.constraints.size() == model.constraints.size() - 1);
  // The original program is untouched and still rejects the anomaly.
  CHECK_FALSE(check_satisfiable(model, ddos).sat);
  CHECK_THROWS_AS(exclude(model, "NOPE"), homesentry::DataError);
}

TEST_CASE("adding facts to a positive program never restores satisfiability") {
  Program p = parse_program(R"(
flow(a). flow(b).
heavy(a).
:- flow(X), heavy(X).
)");
  REQUIRE_FALSE(check_satisfiable(p, {}).sat);
  Rng rng(7);
  std::vector<Atom> extra;
  for (int i = 0; i < 30; ++i) {
    std::string name = "e" + std::to_string(rng.below(10));
    extra.push_back(atom(rng.uniform() < 0.5 ? "flow(" + name + ")" : "heavy(" + name + ")"));
    CHECK_FALSE(check_satisfiable(p, extra).sat);
  }
}

TEST_CASE("grounding cap fires on domain explosions") {
  Program p = parse_program("pair(X, Y) :- X = 1..400, Y = 1..400.");
  CHECK_THROWS_AS(ground(p, {}, 10'000), GroundingLimitError);
  CHECK_NOTHROW(ground(p, {}, 10'000'000));
}

TEST_CASE("anomaly atoms must be ground") {
  Program p = parse_program("q(a).");
  Atom bad;
  bad.pred = "communicate";
  bad.args = {Term::variable("X")};
  std::vector<Atom> anomaly = {bad};
  CHECK_THROWS_AS(check_satisfiable(p, anomaly), homesentry::DataError);
}
