#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "squad_oracle.hpp"
#include "xmrc/error.hpp"
#include "xmrc/scoring.hpp"
#include "xmrc/util.hpp"

using namespace xmrc;

namespace {

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"the", "The", "a", "A", "an", "AN", "cat", "Cat", "dog", "4",
                                                  "four", "pro", "Bowl", ",", ".", "-", "'", "_", "(", ")",
                                                  " ", " ", " ", "\t", "\n", "x", "theory", "ant", "1,000"};
  std::string out;
  auto n = rng() % 12;
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng() % pieces.size()];
  return out;
}

}  // namespace

TEST_CASE("answer extraction") {
  CHECK(extract_answer("Answer: four Pro Bowl selections.") == "four Pro Bowl selections.");
  CHECK(extract_answer("  plain text ") == "plain text");
  CHECK(extract_answer("answer: one\nANSWER:  two ") == "two");
  CHECK(extract_answer("Answer:").empty());
  CHECK(extract_answer("").empty());
}

TEST_CASE("published example") {
  std::vector<std::string> refs{"four"};
  auto s = score_answer("four Pro Bowl selections.", refs);
  CHECK(s.em == 0);
  CHECK(s.f1 == doctest::Approx(0.4));
}

TEST_CASE("normalization") {
  CHECK(normalize_answer("The  Cat, an apple!") == std::vector<std::string>{"cat", "apple"});
  CHECK(normalize_answer("theory athens") == std::vector<std::string>{"theory", "athens"});
  CHECK(normalize_answer("a-b") == std::vector<std::string>{"ab"});
  CHECK(normalize_answer("1,000") == std::vector<std::string>{"1000"});
  // Non-ASCII letters count as word characters for the article boundary.
  CHECK(normalize_answer("aé the") == std::vector<std::string>{"aé"});
  CHECK(normalize_answer("Ärger ÉCOLE") == std::vector<std::string>{"ärger", "école"});
  CHECK(normalize_answer("Москва") == std::vector<std::string>{"москва"});
  CHECK(normalize_answer("東京 タワー") == std::vector<std::string>{"東京", "タワー"});
  CHECK(normalize_answer("x y") == std::vector<std::string>{"x", "y"});
  // Only ASCII punctuation is stripped, as in the reference script.
  CHECK(normalize_answer("«x»") == std::vector<std::string>{"«x»"});
}

TEST_CASE("F1 and EM edge cases") {
  std::vector<std::string> empty_ref{""};
  CHECK(score_answer("", empty_ref).f1 == 1.0);
  CHECK(score_answer("the", empty_ref).f1 == 1.0);
  CHECK(score_answer("x", empty_ref).f1 == 0.0);
  std::vector<std::string> refs{"New York", "NYC"};
  auto s = score_answer("nyc", refs);
  CHECK(s.f1 == 1.0);
  CHECK(s.em == 1);
  CHECK(s.best_reference_index == 1);
  std::vector<std::string> dup{"c b b"};
  CHECK(score_answer("b b b", dup).f1 == doctest::Approx(2.0 / 3.0));
  std::vector<std::string> article{"a b b"};
  CHECK(score_answer("b b b", article).f1 == doctest::Approx(0.8));
  CHECK_THROWS_AS(score_answer("x", {}), ValidationError);
  Normalizer upper = [](std::string_view t) { return std::vector<std::string>{std::string(t)}; };
  std::vector<std::string> case_refs{"ABC"};
  CHECK(score_answer("abc", case_refs, upper).em == 0);
}

TEST_CASE("randomized agreement with the reference scorer") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 2000; ++i) {
    auto pred = random_text(rng);
    std::vector<std::string> refs;
    auto k = 1 + rng() % 3;
    for (std::size_t j = 0; j < k; ++j) refs.push_back(random_text(rng));
    auto s = score_answer(pred, refs);
    INFO("pred=[" << pred << "]");
    CHECK(s.f1 == test::oracle_f1(pred, refs));
    CHECK(s.em == test::oracle_em(pred, refs));
  }
}

TEST_CASE("direction aggregation and ratios") {
  std::vector<AnswerScore> scores(3);
  scores[0].f1 = 1.0;
  scores[0].em = 1;
  scores[1].f1 = 0.5;
  scores[2].f1 = 0.0;
  auto d = aggregate_direction(Direction{"en", "en"}, scores);
  CHECK(d.n == 3);
  CHECK(d.mean_f1 == doctest::Approx(0.5));
  CHECK(d.mean_f1_x100 == doctest::Approx(50.0));
  CHECK(d.mean_em_x100 == doctest::Approx(100.0 / 3));
  CHECK_THROWS_AS(aggregate_direction(Direction{"en", "en"}, {}), ValidationError);

  std::map<Direction, DirectionSummary> m;
  auto put = [&](const std::string& dir, double f1) {
    DirectionSummary s;
    s.direction = Direction::parse(dir);
    s.mean_f1 = f1;
    s.mean_f1_x100 = f1 * 100;
    s.n = 1;
    m[s.direction] = s;
  };
  put("en-en", 0.6);
  put("en-de", 0.8);
  put("en-zh", 0.4);
  put("de-de", 0.3);
  auto r = cross_lingual_ratio(m);
  CHECK(r.en_x_over_en_en == doctest::Approx(1.0));
  CHECK(r.x_x_over_en_en == doctest::Approx(0.5));
  CHECK(r.en_x_count == 2);
  CHECK(r.x_x_count == 1);

  std::map<Direction, DirectionSummary> published;
  auto put2 = [&](const std::string& dir, double x100) {
    DirectionSummary s;
    s.direction = Direction::parse(dir);
    s.mean_f1_x100 = x100;
    s.mean_f1 = x100 / 100;
    published[s.direction] = s;
  };
  put2("en-en", 77.89);
  put2("en-de", 72.13);
  CHECK(format_fixed(cross_lingual_ratio(published).en_x_over_en_en, 2) == "0.93");

  std::map<Direction, DirectionSummary> no_en;
  no_en[Direction::parse("en-de")] = m[Direction::parse("en-de")];
  CHECK_THROWS_AS(cross_lingual_ratio(no_en), ValidationError);
}

TEST_CASE("sample categories") {
  Direction ee{"en", "en"}, ed{"en", "de"}, ez{"en", "zh"};
  CHECK(categorize_sample({{ee, 0.9}, {ed, 0.6}, {ez, 0.7}}) == SampleCategory::balanced);
  CHECK(categorize_sample({{ee, 1.0}, {ed, 0.6}, {ez, 0.5}}) == SampleCategory::other);
  CHECK(categorize_sample({{ee, 1.0}, {ed, 0.2}, {ez, 0.4}}) == SampleCategory::en_superior);
  // Exactly at the margin is not enough.
  CHECK(categorize_sample({{ee, 1.0}, {ed, 0.5}}) == SampleCategory::other);
  CHECK(categorize_sample({{ee, 0.5}, {ed, 0.9}}) == SampleCategory::other);
  CHECK(categorize_sample({{ee, 0.9}, {ed, 0.1}}, {0.5, 0.9}) == SampleCategory::other);
  CHECK_THROWS_AS(categorize_sample({{ed, 0.9}}), ValidationError);
}
