#pragma once

// Parallel MRC corpora in the SQuAD v1.1 layout, one file per language
// (`<corpus>.<lang>.json`), aligned by question id.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmrc {

inline constexpr std::string_view kEnglish = "en";

struct Answer {
  std::string text;
  /// Offset into the context in code points, as stored in SQuAD files.
  std::size_t answer_start = 0;
  /// The same offset in UTF-8 bytes; filled in by validation.
  std::size_t byte_start = 0;

  bool operator==(const Answer&) const = default;
};

struct SampleEntry {
  std::string context;
  std::string question;
  std::vector<Answer> answers;

  bool operator==(const SampleEntry&) const = default;
};

struct ParallelSample {
  std::string id;
  std::map<std::string, SampleEntry> entries;  // keyed by language code

  const SampleEntry& entry(std::string_view lang) const;
  bool operator==(const ParallelSample&) const = default;
};

/// A (question language, context language) evaluation setting. Written as
/// "<context>-<question>", so "en-de" is a German question over an English
/// context and "de-de" is monolingual German.
struct Direction {
  std::string context_lang;
  std::string question_lang;

  bool is_en_x() const { return context_lang == kEnglish; }
  bool is_monolingual() const { return context_lang == question_lang; }
  bool is_en_en() const { return is_en_x() && is_monolingual(); }
  std::string str() const { return context_lang + "-" + question_lang; }
  static Direction parse(std::string_view text);

  auto operator<=>(const Direction&) const = default;
};

struct ParallelCorpus {
  std::string name;
  std::vector<std::string> languages;
  std::vector<ParallelSample> samples;  // sorted by id

  /// Throws ValidationError on the first violated invariant. Also fills
  /// Answer::byte_start.
  void validate();
  bool has_language(std::string_view lang) const;
  void check_direction(const Direction& direction) const;
  /// Canonical digest over ids, texts, and offsets.
  std::string digest() const;
};

/// Loads `<dir>/<name>.<lang>.json` for each language. `prefix` is
/// `<dir>/<name>`. With no explicit languages, every matching file is used.
ParallelCorpus load_corpus(const std::filesystem::path& prefix, std::span<const std::string> languages = {});

/// Writes one SQuAD v1.1 file per language, one paragraph per sample.
void save_corpus(const ParallelCorpus& corpus, const std::filesystem::path& dir);

/// Seeded uniform draw of `k` samples, shared by every direction so that all
/// directions see the same demonstrations.
std::vector<ParallelSample> select_demonstrations(const ParallelCorpus& corpus, std::size_t k, std::uint64_t seed);

/// en-en, then en-x for every other language, then x-x.
std::vector<Direction> standard_directions(std::span<const std::string> languages);

}  // namespace xmrc
