#include "xmrc/fixtures.hpp"

#include <array>
#include <cctype>
#include <random>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

namespace {

struct Facts {
  std::string entity, year, city, person, members;
};

struct LanguagePack {
  std::array<std::string, 4> sentences;  // {E} {Y} {C} {P} {N} placeholders
  std::array<std::string, 4> questions;
};

const LanguagePack& pack_for(const std::string& lang) {
  // Every sentence names the entity, so only the question's cue words point
  // at the right one.
  static const LanguagePack en{
      {"The {E} was founded in {Y}.", "The {E} is based in {C}.", "The {E} is directed by {P}.",
       "The {E} has {N} members."},
      {"When was the {E} founded?", "Where is the {E} based?", "By whom is the {E} directed?",
       "How many members does the {E} have?"}};
  static const LanguagePack de{
      {"Das {E} wurde {Y} gegründet.", "Das {E} hat seinen Sitz in {C}.", "Das {E} wird von {P} geleitet.",
       "Das {E} hat {N} Mitglieder."},
      {"Wann wurde das {E} gegründet?", "Wo hat das {E} seinen Sitz?", "Von wem wird das {E} geleitet?",
       "Wie viele Mitglieder hat das {E}?"}};
  static const LanguagePack es{
      {"El {E} fue fundado en {Y}.", "El {E} tiene su sede en {C}.", "El {E} está dirigido por {P}.",
       "El {E} tiene {N} miembros."},
      {"¿Cuándo fue fundado el {E}?", "¿Dónde tiene su sede el {E}?", "¿Por quién está dirigido el {E}?",
       "¿Cuántos miembros tiene el {E}?"}};
  if (lang == "de") return de;
  if (lang == "es") return es;
  return en;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First occurrence of `word` not glued to other letters or digits.
std::size_t find_word(const std::string& text, const std::string& word) {
  for (auto pos = text.find(word); pos != std::string::npos; pos = text.find(word, pos + 1)) {
    bool left = pos == 0 || !is_alnum(text[pos - 1]);
    bool right = pos + word.size() == text.size() || !is_alnum(text[pos + word.size()]);
    if (left && right) return pos;
  }
  throw ValidationError("answer '" + word + "' not found in generated context");
}

bool is_placeholder_word(std::string_view w) { return w.find('{') != std::string_view::npos; }

// Marks every non-placeholder word with the language code.
std::string pseudo_translate(const std::string& text, const std::string& lang) {
  std::string out;
  for (const auto& word : split(text, ' ')) {
    if (!out.empty()) out += ' ';
    if (is_placeholder_word(word)) {
      out += word;
      continue;
    }
    std::string core = word;
    std::string tail;
    while (!core.empty() && (core.back() == '.' || core.back() == '?')) {
      tail.insert(tail.begin(), core.back());
      core.pop_back();
    }
    out += core + "_" + lang + tail;
  }
  return out;
}

std::string fill(std::string text, const Facts& f) {
  auto replace = [&](std::string_view key, const std::string& value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
      text.replace(pos, key.size(), value);
    }
  };
  replace("{E}", f.entity);
  replace("{Y}", f.year);
  replace("{C}", f.city);
  replace("{P}", f.person);
  replace("{N}", f.members);
  return text;
}

std::string make_name(std::mt19937_64& rng, int syllables) {
  static const std::array<std::string_view, 16> kSyl = {"bra", "ven", "lor", "mi", "tas", "kel", "dor", "ani",
                                                        "ste", "rup", "ol", "quin", "zar", "fe", "gal", "nor"};
  std::string out;
  for (int i = 0; i < syllables; ++i) out += kSyl[rng() % kSyl.size()];
  out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

}  // namespace

ParallelCorpus make_synthetic_corpus(std::span<const std::string> languages, std::size_t samples, std::uint64_t seed,
                                     std::string name) {
  std::mt19937_64 rng(seed);
  ParallelCorpus corpus;
  corpus.name = std::move(name);
  corpus.languages.assign(languages.begin(), languages.end());
  for (std::size_t i = 0; i < samples; ++i) {
    Facts f;
    f.entity = make_name(rng, 3) + " Institute";
    f.year = std::to_string(1800 + rng() % 200);
    f.city = make_name(rng, 2) + "burg";
    f.person = make_name(rng, 2) + " " + make_name(rng, 3);
    f.members = std::to_string(20 + rng() % 900);
    const std::size_t q = i % 4;
    const std::string& answer = q == 0 ? f.year : q == 1 ? f.city : q == 2 ? f.person : f.members;

    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    ParallelSample sample;
    sample.id = id;
    for (const auto& lang : corpus.languages) {
      const auto& pack = pack_for(lang);
      bool pseudo = lang != "en" && lang != "de" && lang != "es";
      std::vector<std::string> sentences;
      for (const auto& s : pack.sentences) sentences.push_back(fill(pseudo ? pseudo_translate(s, lang) : s, f));
      SampleEntry e;
      e.context = join(sentences, " ");
      e.question = fill(pseudo ? pseudo_translate(pack.questions[q], lang) : pack.questions[q], f);
      auto byte = find_word(e.context, answer);
      e.answers.push_back(Answer{answer, utf8::codepoint_index(e.context, byte), byte});
      sample.entries.emplace(lang, std::move(e));
    }
    corpus.samples.push_back(std::move(sample));
  }
  corpus.validate();
  return corpus;
}

}  // namespace xmrc
