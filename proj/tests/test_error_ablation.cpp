#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "error_fixture.hpp"
#include "test_support.hpp"
#include "xmrc/error.hpp"
#include "xmrc/language.hpp"

using namespace xmrc;

TEST_CASE("language detector on typical answers") {
  HeuristicLanguageDetector d;
  CHECK(d.detect("four Pro Bowl selections.") == "en");
  CHECK(d.detect("vier Pro-Bowl-Auswahlen") == "de");
  CHECK(d.detect("cuatro selecciones") == "es");
  CHECK(d.detect("东京塔") == "zh");
  CHECK(d.detect("Москва") == "ru");
  CHECK(d.detect("Αθήνα") == "el");
  CHECK(d.detect("القاهرة") == "ar");
  CHECK(d.detect("दिल्ली") == "hi");
  CHECK(d.detect("กรุงเทพ") == "th");
  CHECK(d.detect("") == kUnknownLanguage);
  std::vector<std::string> only_en_de{"en", "de"};
  HeuristicLanguageDetector restricted(only_en_de);
  CHECK(restricted.detect("Москва") == kUnknownLanguage);
}

TEST_CASE("classification precedence") {
  Direction en_de{"en", "de"}, en_en{"en", "en"};
  using J = JudgeCategory;
  CHECK(classify_error("", J::reasonable, "en", "de", en_de, 0.0) == ErrorClass::blank);
  CHECK(classify_error("x", J::gibberish, "en", "de", en_de, 1.0) == ErrorClass::gibberish);
  CHECK(classify_error("x", J::refusal, "en", "de", en_de, 1.0) == ErrorClass::refusal);
  CHECK(classify_error("vier", J::reasonable, "en", "de", en_de, 1.0) == ErrorClass::language);
  CHECK(classify_error("four", J::reasonable, "en", "en", en_de, 1.0) == ErrorClass::correct);
  CHECK(classify_error("four", J::reasonable, "en", "en", en_de, 0.5) == ErrorClass::content);
  // Monolingual directions have no language errors.
  CHECK(classify_error("vier", J::reasonable, "en", "de", en_en, 0.0) == ErrorClass::content);
  CHECK(classify_error("four", J::reasonable, "en", "en", en_de, 0.6, 0.7) == ErrorClass::content);
}

TEST_CASE("known composition reproduces every rate") {
  test::TempDir dir;
  auto responses = test::error_composition_fixture();
  REQUIRE(responses.size() == 100);
  test::record_judge_replies(responses, dir.path());
  std::vector<ErrorInput> inputs;
  std::vector<SampleF1> scores;
  std::size_t calls = 0;
  test::fixture_inputs(responses, dir.path(), inputs, scores, &calls);
  CHECK(calls == 0);
  HeuristicLanguageDetector detector;
  auto a = compute_error_report(inputs, scores, detector);
  const auto& r = a.report;
  CHECK(r.n == 100);
  CHECK(r.language_rate == 12.0);
  CHECK(r.blank_rate == 3.0);
  CHECK(r.gibberish_rate == 2.0);
  CHECK(r.refusal_rate == 1.0);
  CHECK(r.generation_rate == 6.0);
  CHECK(r.correct_rate == 50.0);
  CHECK(r.content_rate == 32.0);
  CHECK(r.language_rate + r.generation_rate + r.content_rate + r.correct_rate == 100.0);
  CHECK(a.records.size() == 100);

  ErrorPolicy wrong_only{0.5, Denominator::wrong_only};
  auto w = compute_error_report(inputs, scores, detector, wrong_only).report;
  CHECK(w.denominator == 50);
  CHECK(w.language_rate == doctest::Approx(24.0));
  CHECK(w.generation_rate == doctest::Approx(12.0));
  CHECK(w.correct_rate == 50.0);
}

TEST_CASE("unavailable judgments are excluded and counted") {
  Direction en_de{"en", "de"};
  std::vector<ErrorInput> inputs{{"a", en_de, "four", "four", JudgeCategory::reasonable},
                                 {"b", en_de, "five", "four", std::nullopt},
                                 {"c", en_de, "", "four", std::nullopt},
                                 {"d", en_de, "seven players", "four", JudgeCategory::reasonable}};
  std::vector<SampleF1> scores{{"a", 1.0}, {"b", 0.0}, {"c", 0.0}, {"d", 0.0}};
  HeuristicLanguageDetector detector;
  auto a = compute_error_report(inputs, scores, detector);
  CHECK(a.report.judge_unavailable == 1);
  CHECK(a.report.n == 3);
  CHECK(a.report.blank_rate == doctest::Approx(100.0 / 3));
  CHECK_FALSE(a.records[1].final_class.has_value());

  std::vector<SampleF1> misaligned{{"a", 1.0}, {"x", 0.0}, {"c", 0.0}, {"d", 0.0}};
  CHECK_THROWS_AS(compute_error_report(inputs, misaligned, detector), ValidationError);
  inputs[3].direction = Direction{"en", "en"};
  CHECK_THROWS_AS(compute_error_report(inputs, scores, detector), ValidationError);
}

TEST_CASE("judge agreement") {
  using J = JudgeCategory;
  std::vector<std::optional<J>> a{J::reasonable, J::blank, J::gibberish, std::nullopt};
  std::vector<std::optional<J>> b{J::reasonable, J::blank, J::refusal, J::reasonable};
  CHECK(judge_agreement(a, b) == doctest::Approx(200.0 / 3));
}

TEST_CASE("English words with German-looking endings stay English") {
  HeuristicLanguageDetector d;
  for (const char* w : {"eleven", "seventeen", "children", "often", "between them"}) {
    INFO(w);
    CHECK(d.detect(w) == "en");
  }
  CHECK(d.detect("elf Spielen") == "de");
}
