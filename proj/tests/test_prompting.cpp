#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "xmrc/error.hpp"
#include "xmrc/fixtures.hpp"
#include "xmrc/mock_backend.hpp"
#include "xmrc/prompting.hpp"

using namespace xmrc;

namespace {

ParallelSample make(const std::string& id, const std::string& ctx, const std::string& q, const std::string& a,
                    const std::string& ctx_de, const std::string& q_de, const std::string& a_de) {
  ParallelSample s;
  s.id = id;
  s.entries["en"] = {ctx, q, {{a, 0, ctx.find(a)}}};
  s.entries["de"] = {ctx_de, q_de, {{a_de, 0, ctx_de.find(a_de)}}};
  return s;
}

const std::string kRules =
    "You should only present your answer to the last question by strictly copying the corresponding part of the "
    "context. Please provide a direct answer in English without extra output. Your answer should be in the form of "
    "\"Answer: {Your Answer}\"";

std::string slice(const std::string& text, CharSpan s) { return text.substr(s.begin, s.size()); }

}  // namespace

TEST_CASE("v1 and v2 layouts match the published formats") {
  auto demo = make("d1", "Paris is in France.", "Where is Paris?", "France", "Paris liegt in Frankreich.",
                   "Wo liegt Paris?", "Frankreich");
  auto test = make("t1", "Bern is in Switzerland.", "Where is Bern?", "Switzerland", "Bern liegt in der Schweiz.",
                   "Wo liegt Bern?", "Schweiz");
  std::vector<ParallelSample> demos{demo};
  Direction en_de{"en", "de"};

  auto v1 = render_prompt(PromptTemplate::builtin(TemplateId::v1), demos, test, en_de);
  std::string expected_v1 =
      "Below is a reading comprehension task. There will be paragraphs of context, each followed by a question "
      "related to its content. " +
      kRules +
      "\n\nContext: Paris is in France.\n\nQuestion: Wo liegt Paris?\n\nAnswer: France\n\n"
      "Your task starts here:\n\nContext: Bern is in Switzerland.\n\nQuestion: Wo liegt Bern?";
  CHECK(v1.text == expected_v1);

  auto v2 = render_prompt(PromptTemplate::builtin(TemplateId::v2), demos, test, en_de);
  std::string expected_v2 =
      "Context: Paris is in France.\n\nQuestion: Wo liegt Paris?\n\nAnswer: France\n\n"
      "Your task starts here:\n\nContext: Bern is in Switzerland.\n\nQuestion: Wo liegt Bern?\n\n" +
      kRules;
  CHECK(v2.text == expected_v2);

  for (const auto* p : {&v1, &v2}) {
    REQUIRE(p->spans(Part::context).size() == 1);
    CHECK(slice(p->text, p->spans(Part::context)[0]) == "Bern is in Switzerland.");
    CHECK(slice(p->text, p->spans(Part::question)[0]) == "Wo liegt Bern?");
    REQUIRE(p->spans(Part::demonstrations).size() == 1);
    CHECK(slice(p->text, p->spans(Part::demonstrations)[0]) ==
          "Context: Paris is in France.\n\nQuestion: Wo liegt Paris?\n\nAnswer: France");
    REQUIRE(p->spans(Part::task_description).size() == 1);
    CHECK(p->direction == en_de);
    CHECK(p->sample_id == "t1");
  }
  CHECK(slice(v2.text, v2.spans(Part::task_description)[0]) == kRules);
}

TEST_CASE("zero-shot has no demonstration spans; duplicates are rejected") {
  std::vector<std::string> langs{"en", "de"};
  auto corpus = make_synthetic_corpus(langs, 5);
  auto p = render_prompt(PromptTemplate::builtin(TemplateId::v2), {}, corpus.samples[0], Direction{"en", "en"});
  CHECK(p.spans(Part::demonstrations).empty());
  CHECK(p.text.rfind("Your task starts here:", 0) == 0);
  std::vector<ParallelSample> demos{corpus.samples[0]};
  CHECK_THROWS_AS(render_prompt(PromptTemplate::builtin(TemplateId::v2), demos, corpus.samples[0],
                                Direction{"en", "en"}),
                  ValidationError);
}

TEST_CASE("context replacement keeps other parts") {
  std::vector<std::string> langs{"en", "de"};
  auto corpus = make_synthetic_corpus(langs, 5);
  std::vector<ParallelSample> demos{corpus.samples[1]};
  const auto& tmpl = PromptTemplate::builtin(TemplateId::v1);
  auto p = render_prompt_with_context(tmpl, demos, corpus.samples[0], Direction{"en", "de"}, "Short.");
  CHECK(slice(p.text, p.spans(Part::context)[0]) == "Short.");
  CHECK(slice(p.text, p.spans(Part::question)[0]) == corpus.samples[0].entry("de").question);
  auto empty = render_prompt_with_context(tmpl, demos, corpus.samples[0], Direction{"en", "de"}, "");
  CHECK(empty.spans(Part::context)[0].size() == 0);
}

TEST_CASE("wrapping shifts spans") {
  std::vector<std::string> langs{"en"};
  auto corpus = make_synthetic_corpus(langs, 3);
  auto p = render_prompt(PromptTemplate::builtin(TemplateId::v2), {}, corpus.samples[0], Direction{"en", "en"});
  auto w = wrap_prompt(p, {"<s>[INST] ", " [/INST]"});
  CHECK(w.text == "<s>[INST] " + p.text + " [/INST]");
  for (auto part : kCharParts) {
    REQUIRE(w.spans(part).size() == p.spans(part).size());
    for (std::size_t i = 0; i < p.spans(part).size(); ++i)
      CHECK(slice(w.text, w.spans(part)[i]) == slice(p.text, p.spans(part)[i]));
  }
}

TEST_CASE("token alignment") {
  std::vector<std::string> langs{"en", "de"};
  auto corpus = make_synthetic_corpus(langs, 6);
  std::vector<ParallelSample> demos{corpus.samples[1], corpus.samples[2]};
  auto p = wrap_prompt(render_prompt(PromptTemplate::builtin(TemplateId::v1), demos, corpus.samples[0],
                                     Direction{"en", "de"}),
                       {"SYS ", " END"});
  MockBackend mock(MockScript{});
  auto tokens = mock.tokenize_with_offsets(p.text);
  auto spans = align_part_spans(p, tokens);
  CHECK(spans.token_count == tokens.size());
  CHECK(spans.tokens(Part::last_input_token) == std::vector<std::size_t>{tokens.size() - 1});
  // Brute force: every token overlapping a part's characters is in that part
  // unless an earlier part also overlaps it.
  for (auto part : kCharParts) {
    for (auto t : spans.tokens(part)) {
      bool overlap = false;
      for (auto s : p.spans(part)) overlap |= tokens[t].char_start < s.end && s.begin < tokens[t].char_end;
      CHECK(overlap);
    }
  }
  auto ctx = spans.tokens(Part::context);
  REQUIRE_FALSE(ctx.empty());
  std::string joined;
  for (auto t : ctx) joined += (joined.empty() ? "" : " ") + p.text.substr(tokens[t].char_start,
                                                                          tokens[t].char_end - tokens[t].char_start);
  CHECK(joined == corpus.samples[0].entry("en").context);
  CHECK(spans.tokens(Part::demonstrations).size() > 10);
  // Glue tokens ("SYS", "Context:", "END") belong to no part.
  std::size_t assigned = 0;
  for (auto part : kCharParts) assigned += spans.tokens(part).size();
  CHECK(assigned < tokens.size());
}

TEST_CASE("alignment edge cases") {
  RenderedPrompt p;
  p.text = "abcdef";
  p.part_char_spans[Part::context] = {{0, 3}};
  p.part_char_spans[Part::question] = {{3, 6}};
  // A token straddling two parts goes to the earlier one; a zero-width token
  // goes to the part containing its position.
  std::vector<TokenOffset> toks{{1, 0, 2}, {2, 2, 4}, {3, 4, 4}, {4, 4, 6}};
  auto s = align_part_spans(p, toks);
  CHECK(s.tokens(Part::context) == std::vector<std::size_t>{0, 1});
  CHECK(s.tokens(Part::question) == std::vector<std::size_t>{2, 3});
  CHECK(s.tokens(Part::task_description).empty());
  CHECK_THROWS_AS(align_part_spans(p, {}), ValidationError);
  std::vector<TokenOffset> bad{{1, 2, 4}, {2, 0, 2}};
  CHECK_THROWS_AS(align_part_spans(p, bad), ValidationError);
  std::vector<TokenOffset> past{{1, 0, 9}};
  CHECK_THROWS_AS(align_part_spans(p, past), ValidationError);
}

TEST_CASE("part and template names") {
  for (auto p : kAllParts) CHECK(parse_part(part_name(p)) == p);
  CHECK_THROWS_AS(parse_part("nope"), ConfigError);
  CHECK(parse_template("v1") == TemplateId::v1);
  CHECK_THROWS_AS(parse_template("v3"), ConfigError);
}
