#include "xmrc/corpus.hpp"

#include <algorithm>
#include <random>
#include <regex>
#include <set>

#include <json.hpp>

#include "xmrc/error.hpp"
#include "xmrc/util.hpp"

namespace xmrc {

namespace fs = std::filesystem;
using nlohmann::json;

const SampleEntry& ParallelSample::entry(std::string_view lang) const {
  auto it = entries.find(std::string(lang));
  if (it == entries.end()) {
    throw ValidationError("sample " + id + " has no entry for language '" + std::string(lang) + "'");
  }
  return it->second;
}

Direction Direction::parse(std::string_view text) {
  auto parts = split(trim(text), '-');
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
    throw ConfigError("malformed direction '" + std::string(text) + "', expected <context>-<question>");
  }
  return Direction{parts[0], parts[1]};
}

bool ParallelCorpus::has_language(std::string_view lang) const {
  return std::find(languages.begin(), languages.end(), lang) != languages.end();
}

void ParallelCorpus::check_direction(const Direction& direction) const {
  for (const auto& lang : {direction.context_lang, direction.question_lang}) {
    if (!has_language(lang)) throw ValidationError("direction " + direction.str() + " uses unknown language " + lang);
  }
  if (!direction.is_en_x() && !direction.is_monolingual()) {
    throw ValidationError("direction " + direction.str() + " is neither en-x nor x-x");
  }
}

void ParallelCorpus::validate() {
  if (languages.empty()) throw ValidationError("corpus " + name + " declares no languages");
  if (samples.size() < 2) throw ValidationError("corpus " + name + " needs at least 2 samples");
  std::set<std::string> ids;
  for (auto& sample : samples) {
    if (!ids.insert(sample.id).second) throw ValidationError("duplicate sample id " + sample.id);
    if (sample.entries.size() != languages.size()) {
      throw ValidationError("sample " + sample.id + " does not cover every corpus language");
    }
    for (const auto& lang : languages) {
      auto it = sample.entries.find(lang);
      if (it == sample.entries.end()) throw ValidationError("sample " + sample.id + " missing language " + lang);
      auto& e = it->second;
      if (e.answers.empty()) throw ValidationError("sample " + sample.id + " (" + lang + ") has no answers");
      for (auto& a : e.answers) {
        std::size_t b = 0;
        try {
          b = utf8::byte_offset(e.context, a.answer_start);
        } catch (const ValidationError&) {
          throw ValidationError("sample " + sample.id + " (" + lang + "): answer_start beyond context");
        }
        if (e.context.compare(b, a.text.size(), a.text) != 0) {
          throw ValidationError("sample " + sample.id + " (" + lang + "): answer_start " +
                                std::to_string(a.answer_start) + " does not point at '" + a.text + "'");
        }
        a.byte_start = b;
      }
    }
  }
  if (!std::is_sorted(samples.begin(), samples.end(), [](auto& x, auto& y) { return x.id < y.id; })) {
    throw ValidationError("samples are not sorted by id");
  }
}

std::string ParallelCorpus::digest() const {
  // Length-prefixed fields so no two corpora share a canonical form.
  std::string canon;
  auto put = [&](std::string_view s) {
    canon += std::to_string(s.size());
    canon += ':';
    canon += s;
  };
  put(name);
  for (const auto& l : languages) put(l);
  for (const auto& s : samples) {
    put(s.id);
    for (const auto& [lang, e] : s.entries) {
      put(lang);
      put(e.context);
      put(e.question);
      for (const auto& a : e.answers) {
        put(a.text);
        put(std::to_string(a.answer_start));
      }
    }
  }
  return sha256_hex(canon);
}

namespace {

using EntryMap = std::map<std::string, SampleEntry>;

EntryMap parse_squad_file(const fs::path& path, const std::string& lang) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw LoadError("cannot parse " + path.string() + " (" + lang + "): " + e.what());
  }
  EntryMap out;
  try {
    const auto& data = doc.at("data");
    for (std::size_t a = 0; a < data.size(); ++a) {
      const auto& paragraphs = data[a].at("paragraphs");
      for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        const auto& para = paragraphs[p];
        auto context = para.at("context").get<std::string>();
        const auto& qas = para.at("qas");
        for (std::size_t q = 0; q < qas.size(); ++q) {
          const auto& qa = qas[q];
          std::string id = qa.contains("id") ? qa["id"].get<std::string>()
                                             : std::to_string(a) + ":" + std::to_string(p) + ":" + std::to_string(q);
          SampleEntry e;
          e.context = context;
          e.question = qa.at("question").get<std::string>();
          for (const auto& ans : qa.at("answers")) {
            e.answers.push_back(Answer{ans.at("text").get<std::string>(), ans.at("answer_start").get<std::size_t>(), 0});
          }
          if (!out.emplace(id, std::move(e)).second) {
            throw LoadError(path.string() + ": duplicate question id " + id);
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw LoadError(path.string() + " (" + lang + ") violates the SQuAD v1.1 schema: " + e.what());
  }
  return out;
}

std::vector<std::string> discover_languages(const fs::path& dir, const std::string& name) {
  if (!fs::is_directory(dir)) throw LoadError("corpus directory " + dir.string() + " does not exist");
  std::regex pattern("^" + std::regex_replace(name, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") +
                     R"(\.([A-Za-z]{2,3}(?:-[A-Za-z0-9]+)?)\.json$)");
  std::vector<std::string> langs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    auto fname = entry.path().filename().string();
    if (std::regex_match(fname, m, pattern)) langs.push_back(m[1]);
  }
  if (langs.empty()) throw LoadError("no files matching " + name + ".<lang>.json in " + dir.string());
  return langs;
}

}  // namespace

ParallelCorpus load_corpus(const fs::path& prefix, std::span<const std::string> languages) {
  auto dir = prefix.has_parent_path() ? prefix.parent_path() : fs::path(".");
  auto name = prefix.filename().string();
  std::vector<std::string> langs(languages.begin(), languages.end());
  if (langs.empty()) langs = discover_languages(dir, name);
  // English first, the rest alphabetical.
  std::sort(langs.begin(), langs.end(), [](const std::string& a, const std::string& b) {
    if ((a == kEnglish) != (b == kEnglish)) return a == kEnglish;
    return a < b;
  });
  langs.erase(std::unique(langs.begin(), langs.end()), langs.end());

  std::map<std::string, EntryMap> per_lang;
  for (const auto& lang : langs) {
    auto path = dir / (name + "." + lang + ".json");
    if (!fs::exists(path)) throw LoadError("missing corpus file for language '" + lang + "': " + path.string());
    per_lang.emplace(lang, parse_squad_file(path, lang));
  }

  ParallelCorpus corpus;
  corpus.name = name;
  corpus.languages = langs;
  const auto& pivot = per_lang.at(langs.front());
  for (const auto& [lang, entries] : per_lang) {
    if (entries.size() != pivot.size()) {
      throw ValidationError("language '" + lang + "' has " + std::to_string(entries.size()) + " samples, '" + langs.front() +
                      "' has " + std::to_string(pivot.size()));
    }
  }
  for (const auto& [id, _] : pivot) {
    ParallelSample sample;
    sample.id = id;
    for (auto& [lang, entries] : per_lang) {
      auto it = entries.find(id);
      if (it == entries.end()) throw ValidationError("sample id " + id + " missing from language '" + lang + "'");
      sample.entries.emplace(lang, it->second);
    }
    corpus.samples.push_back(std::move(sample));
  }
  corpus.validate();
  return corpus;
}

void save_corpus(const ParallelCorpus& corpus, const fs::path& dir) {
  for (const auto& lang : corpus.languages) {
    json data = json::array();
    for (const auto& sample : corpus.samples) {
      const auto& e = sample.entry(lang);
      json answers = json::array();
      for (const auto& a : e.answers) answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}});
      json qa = {{"id", sample.id}, {"question", e.question}, {"answers", answers}};
      json para = {{"context", e.context}, {"qas", json::array({qa})}};
      data.push_back({{"title", sample.id}, {"paragraphs", json::array({para})}});
    }
    json doc = {{"version", "1.1"}, {"data", data}};
    write_file_atomic(dir / (corpus.name + "." + lang + ".json"), doc.dump(1) + "\n");
  }
}

std::vector<ParallelSample> select_demonstrations(const ParallelCorpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k == 0) return {};
  if (k >= corpus.samples.size()) {
    throw ValidationError("cannot draw " + std::to_string(k) + " demonstrations from " +
                          std::to_string(corpus.samples.size()) + " samples: no test items would remain");
  }
  // Own Fisher-Yates so the draw does not depend on the standard library's
  // shuffle implementation.
  std::vector<std::size_t> order(corpus.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::size_t j = rng() % (i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<ParallelSample> demos;
  for (std::size_t i = 0; i < k; ++i) demos.push_back(corpus.samples[order[i]]);
  return demos;
}

std::vector<Direction> standard_directions(std::span<const std::string> languages) {
  std::vector<Direction> out;
  std::string en(kEnglish);
  bool has_en = std::find(languages.begin(), languages.end(), en) != languages.end();
  if (has_en) {
    out.push_back({en, en});
    for (const auto& l : languages)
      if (l != en) out.push_back({en, l});
  }
  for (const auto& l : languages)
    if (l != en) out.push_back({l, l});
  return out;
}

}  // namespace xmrc
