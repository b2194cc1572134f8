#pragma once

// 100 three-sentence samples for the oracle. The scripted model's
// log-probability of any target token is -0.5 minus a penalty for every
// sentence of the sample missing from the test context. Penalties make the
// gold sentence dominant in 95 samples; the other 5 are ties (3) or have a
// distractor outweighing the gold sentence (2).

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "xmrc/corpus.hpp"
#include "xmrc/mock_backend.hpp"

namespace xmrc::test {

struct OracleFixture {
  ParallelCorpus corpus;
  std::shared_ptr<std::map<std::string, std::vector<std::pair<std::string, double>>>> penalties;  // by question
  std::shared_ptr<std::map<std::string, std::string>> gold_by_question;
  std::vector<bool> expected_correct;

  MockScript script() const {
    MockScript s;
    s.name = "oracle-fixture";
    s.num_layers = 2;
    s.hidden_dim = 2;
    auto pen = penalties;
    auto gold = gold_by_question;
    auto test_block = [](std::string_view prompt) {
      auto task = prompt.rfind("Your task starts here:");
      return task == std::string_view::npos ? prompt : prompt.substr(task);
    };
    s.step_logprob = [pen, test_block](std::string_view prompt, std::span<const std::string>,
                                       std::optional<std::string_view>) {
      auto block = test_block(prompt);
      for (const auto& [question, sentences] : *pen) {
        if (block.find(question) == std::string_view::npos) continue;
        double lp = -0.5;
        for (const auto& [sentence, p] : sentences)
          if (block.find(sentence) == std::string_view::npos) lp -= p;
        return lp;
      }
      return -10.0;
    };
    s.responder = [gold, test_block](std::string_view prompt) {
      auto block = test_block(prompt);
      for (const auto& [question, answer] : *gold)
        if (block.find(question) != std::string_view::npos) return "Answer: " + answer;
      return std::string("Answer:");
    };
    return s;
  }
};

inline OracleFixture make_oracle_fixture() {
  OracleFixture f;
  f.penalties = std::make_shared<std::map<std::string, std::vector<std::pair<std::string, double>>>>();
  f.gold_by_question = std::make_shared<std::map<std::string, std::string>>();
  f.corpus.name = "oracle";
  f.corpus.languages = {"en"};
  for (int i = 0; i < 100; ++i) {
    std::string n = std::to_string(i);
    std::string gold = "Gold" + n;
    std::size_t gold_index = static_cast<std::size_t>(i % 3);
    std::vector<std::string> sentences = {"Alpha" + n + " opened long ago.", "Beta" + n + " moved north later.",
                                          "Gamma" + n + " stayed behind."};
    sentences[gold_index] = "The prize " + n + " went to " + gold + " that year.";
    std::vector<double> pen(3, 1.0);
    pen[gold_index] = 3.0;
    bool correct = true;
    if (i % 20 == 7) {  // ties: 7, 27, 47
      if (i < 50) {
        pen[(gold_index + 1) % 3] = 3.0;
        correct = false;
      }
    }
    if (i == 67 || i == 87) {  // distractor beats gold
      pen[(gold_index + 2) % 3] = 5.0;
      correct = false;
    }
    std::string question = "Who received prize " + n + "?";
    std::string context = sentences[0] + " " + sentences[1] + " " + sentences[2];
    auto& list = (*f.penalties)[question];
    for (int k = 0; k < 3; ++k) list.push_back({sentences[static_cast<std::size_t>(k)], pen[static_cast<std::size_t>(k)]});
    (*f.gold_by_question)[question] = gold;

    char id[16];
    std::snprintf(id, sizeof id, "o%03d", i);
    ParallelSample s;
    s.id = id;
    auto start = context.find(gold);
    s.entries["en"] = SampleEntry{context, question, {Answer{gold, start, start}}};
    f.corpus.samples.push_back(std::move(s));
    f.expected_correct.push_back(correct);
  }
  f.corpus.validate();
  return f;
}

}  // namespace xmrc::test
