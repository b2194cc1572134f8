#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <set>

#include "test_support.hpp"
#include "xmrc/corpus.hpp"
#include "xmrc/error.hpp"
#include "xmrc/fixtures.hpp"
#include "xmrc/util.hpp"

using namespace xmrc;
using nlohmann::json;

namespace {

json squad(const std::vector<std::tuple<std::string, std::string, std::string, std::string, int>>& rows) {
  json paragraphs = json::array();
  for (const auto& [id, ctx, q, a, start] : rows) {
    paragraphs.push_back({{"context", ctx},
                          {"qas", {{{"id", id}, {"question", q}, {"answers", {{{"text", a}, {"answer_start", start}}}}}}}});
  }
  return {{"version", "1.1"}, {"data", {{{"title", "t"}, {"paragraphs", paragraphs}}}}};
}

}  // namespace

TEST_CASE("load parallel files and compute byte offsets") {
  test::TempDir dir;
  write_file_atomic(dir / "mini.en.json",
                    squad({{"q1", "The cat sat.", "Who sat?", "cat", 4}, {"q2", "Dogs bark.", "What barks?", "Dogs", 0}})
                        .dump());
  write_file_atomic(dir / "mini.de.json",
                    squad({{"q1", "Die Katze saß.", "Wer saß?", "Katze", 4},
                           {"q2", "Hunde bellen.", "Was bellt?", "Hunde", 0}})
                        .dump());
  write_file_atomic(dir / "mini.zh.json",
                    squad({{"q1", "猫坐着。", "谁坐着？", "猫", 0}, {"q2", "你好狗叫。", "什么叫？", "狗", 2}}).dump());

  auto corpus = load_corpus(dir / "mini");
  CHECK(corpus.name == "mini");
  CHECK(corpus.languages == std::vector<std::string>{"en", "de", "zh"});
  REQUIRE(corpus.samples.size() == 2);
  const auto& zh = corpus.samples[1].entry("zh");
  CHECK(zh.answers[0].answer_start == 2);
  CHECK(zh.answers[0].byte_start == 6);
  CHECK(corpus.samples[0].entry("de").question == "Wer saß?");

  std::vector<std::string> two{"en", "de"};
  auto subset = load_corpus(dir / "mini", two);
  CHECK(subset.languages == two);
  CHECK(subset.digest() != corpus.digest());
}

TEST_CASE("missing language file names the language") {
  test::TempDir dir;
  write_file_atomic(dir / "c.en.json", squad({{"a", "x y", "q", "x", 0}, {"b", "z", "q", "z", 0}}).dump());
  std::vector<std::string> langs{"en", "fr"};
  try {
    load_corpus(dir / "c", langs);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("fr") != std::string::npos);
  }
}

TEST_CASE("validation rejects misaligned answers and missing ids") {
  test::TempDir dir;
  write_file_atomic(dir / "c.en.json", squad({{"a", "one two", "q", "two", 1}, {"b", "z", "q", "z", 0}}).dump());
  CHECK_THROWS_AS(load_corpus(dir / "c"), ValidationError);

  write_file_atomic(dir / "d.en.json", squad({{"a", "one two", "q", "two", 4}, {"b", "z", "q", "z", 0}}).dump());
  write_file_atomic(dir / "d.de.json", squad({{"a", "eins zwei", "q", "zwei", 5}}).dump());
  CHECK_THROWS_AS(load_corpus(dir / "d"), ValidationError);
}

TEST_CASE("save and reload round trip") {
  std::vector<std::string> langs{"en", "de", "es", "ja"};
  auto corpus = make_synthetic_corpus(langs, 12, 7);
  test::TempDir dir;
  save_corpus(corpus, dir.path());
  auto back = load_corpus(dir / corpus.name);
  CHECK(back.languages == corpus.languages);
  CHECK(back.samples == corpus.samples);
  CHECK(back.digest() == corpus.digest());
}

TEST_CASE("synthetic answers sit at their offsets") {
  std::vector<std::string> langs{"en", "de", "es", "fr"};
  auto corpus = make_synthetic_corpus(langs, 40, 3);
  for (const auto& s : corpus.samples) {
    for (const auto& [lang, e] : s.entries) {
      const auto& a = e.answers.front();
      CHECK(e.context.substr(a.byte_start, a.text.size()) == a.text);
      CHECK(utf8::byte_offset(e.context, a.answer_start) == a.byte_start);
    }
    CHECK(s.entry("en").answers[0].text == s.entry("de").answers[0].text);
  }
  CHECK(corpus.samples[0].entry("fr").question.find("_fr") != std::string::npos);
}

TEST_CASE("demonstration selection") {
  std::vector<std::string> langs{"en", "de"};
  auto corpus = make_synthetic_corpus(langs, 30);
  auto a = select_demonstrations(corpus, 2, 42);
  auto b = select_demonstrations(corpus, 2, 42);
  REQUIRE(a.size() == 2);
  CHECK(a[0].id == b[0].id);
  CHECK(a[1].id == b[1].id);
  CHECK(a[0].id != a[1].id);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) seen.insert(select_demonstrations(corpus, 2, seed)[0].id);
  CHECK(seen.size() > 10);
  CHECK(select_demonstrations(corpus, 0, 1).empty());
  CHECK_THROWS(select_demonstrations(corpus, 30, 1));
}

TEST_CASE("directions") {
  auto d = Direction::parse("en-de");
  CHECK(d.context_lang == "en");
  CHECK(d.question_lang == "de");
  CHECK(d.is_en_x());
  CHECK_FALSE(d.is_monolingual());
  CHECK(Direction::parse("de-de").is_monolingual());
  CHECK_FALSE(Direction::parse("de-de").is_en_x());
  CHECK_THROWS(Direction::parse("ende"));

  std::vector<std::string> langs{"en", "de", "zh"};
  auto dirs = standard_directions(langs);
  std::vector<std::string> names;
  for (const auto& x : dirs) names.push_back(x.str());
  CHECK(names == std::vector<std::string>{"en-en", "en-de", "en-zh", "de-de", "zh-zh"});

  auto corpus = make_synthetic_corpus(std::vector<std::string>{"en", "de"}, 4);
  CHECK_NOTHROW(corpus.check_direction(Direction::parse("de-de")));
  CHECK_THROWS_AS(corpus.check_direction(Direction::parse("de-en")), ValidationError);
  CHECK_THROWS_AS(corpus.check_direction(Direction::parse("en-fr")), ValidationError);
}
