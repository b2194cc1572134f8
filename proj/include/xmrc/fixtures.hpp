#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "xmrc/corpus.hpp"

namespace xmrc {

/// Small parallel corpus of templated four-sentence paragraphs about
/// invented organizations, with one question per sample. English, German,
/// and Spanish get real sentence templates; other codes get a marked
/// pseudo-translation of the English text. Entity names and numbers are
/// shared across languages, as in real parallel data.
ParallelCorpus make_synthetic_corpus(std::span<const std::string> languages, std::size_t samples,
                                     std::uint64_t seed = 1, std::string name = "synthetic");

}  // namespace xmrc
