#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xmrc/config.hpp"
#include "xmrc/error.hpp"

using namespace xmrc;

TEST_CASE("parsing the flat format") {
  auto m = ConfigMap::parse("# comment\n corpus.path = data/x \n\nshots=0\ndirections = en-en, en-de\n");
  CHECK(m.get("corpus.path") == "data/x");
  CHECK(m.get_uint("shots", 2) == 0);
  CHECK(m.get_list("directions") == std::vector<std::string>{"en-en", "en-de"});
  CHECK(m.get("missing", "fb") == "fb");
  CHECK(ConfigMap::parse(m.dump()).values() == m.values());
  CHECK_THROWS_AS(ConfigMap::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::parse(" = v"), ConfigError);
  m.set("x", "1.5e");
  CHECK_THROWS_AS(m.get_double("x", 0), ConfigError);
  m.set("x", "-3");
  CHECK_THROWS_AS(m.get_uint("x", 0), ConfigError);
  m.set("x", "maybe");
  CHECK_THROWS_AS(m.get_bool("x", false), ConfigError);
}

TEST_CASE("run config defaults and overrides") {
  auto m = ConfigMap::parse("corpus.path = c/x\nrun.dir = r\n");
  auto c = RunConfig::from_map(m);
  CHECK(c.shots == 2);
  CHECK(c.template_choice == "v2");
  CHECK(c.mrd_threshold == 0.95);
  CHECK(c.balanced_threshold == 0.5);
  CHECK(c.margin_threshold == 0.5);
  CHECK(c.correct_f1 == 0.5);
  CHECK(c.traces_dir == std::filesystem::path("r/traces"));
  CHECK(c.stages.size() == 5);
  CHECK(c.oracle_modes.size() == 2);
  CHECK(c.judge.kind == "rules");
  CHECK(c.judge2.kind == "none");
  CHECK(c.denominator == Denominator::all);

  m.set("stages", "evaluate,oracle");
  m.set("oracle.mode", "step");
  m.set("errors.denominator", "wrong");
  m.set("mechanism.sim_parts", "question,last_input_token");
  m.set("directions", "en-en,en-de");
  auto c2 = RunConfig::from_map(m);
  CHECK(c2.stages == std::set<Stage>{Stage::evaluate, Stage::oracle});
  CHECK(c2.oracle_modes == std::vector<OracleMode>{OracleMode::step});
  CHECK(c2.denominator == Denominator::wrong_only);
  CHECK(c2.sim_parts == std::vector<Part>{Part::question, Part::last_input_token});
  CHECK(c2.directions.size() == 2);
}

TEST_CASE("invalid settings are rejected") {
  auto base = ConfigMap::parse("corpus.path = c/x\nrun.dir = r\n");
  auto bad = [&](const std::string& k, const std::string& v) {
    auto m = base;
    m.set(k, v);
    CHECK_THROWS_AS(RunConfig::from_map(m), ConfigError);
  };
  bad("shots", "3");
  bad("template", "v3");
  bad("threshold.mrd", "0");
  bad("threshold.balanced", "1.5");
  bad("backend.kind", "gpu");
  bad("judge.kind", "oracle");
  bad("errors.denominator", "some");
  bad("mechanism.sim_category", "x");
  bad("stages", "evaluate,train");
  bad("oracle.granularity", "word");
  CHECK_THROWS_AS(RunConfig::from_map(ConfigMap::parse("run.dir = r")), ConfigError);
  auto http = base;
  http.set("backend.kind", "http");
  CHECK_THROWS_AS(RunConfig::from_map(http), ConfigError);
  CHECK_THROWS(RunConfig::from_map(ConfigMap::parse("corpus.path = c\ndirections = enen")));
}
