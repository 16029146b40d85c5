////////////////////////////////////////////////////////////////////////////////
// synthetic.hpp
//
// Template-driven corpus generator for desk-scale runs. Sentences follow
// "prefix CAUSE connective EFFECT suffix" (or the reversed order) with gold
// spans taken straight from the template slots.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cetag/corpus.hpp"

namespace cetag {

struct SyntheticSpec {
  std::vector<std::vector<std::string>> cause_phrases;
  std::vector<std::vector<std::string>> effect_phrases;
  // Forward templates read "CAUSE connective EFFECT"; reverse templates read
  // "EFFECT connective CAUSE".
  std::vector<std::vector<std::string>> connectives_forward;
  std::vector<std::vector<std::string>> connectives_reverse;
  std::vector<std::string> fillers;
  std::size_t max_prefix = 3;
  std::size_t max_suffix = 3;
  double reverse_fraction = 0.3;
};

// Ten cause and ten effect phrases over disjoint vocabularies, bigram length
// mode on both sides.
SyntheticSpec default_synthetic_spec();

// Throws CorpusError when phrase lists are unusable or when any token appears
// in more than one of the four vocabularies (cause, effect, connective,
// filler); shared tokens would blur the per-role frequency ratios the
// knowledge pipeline ranks by.
void validate_synthetic_spec(const SyntheticSpec& spec);

// Deterministic in (spec, size, seed). Every sentence carries exactly one
// cause span and one effect span; ids run "syn-0", "syn-1", ...
std::vector<AnnotatedSentence> generate_synthetic_corpus(
    const SyntheticSpec& spec, std::size_t size, std::uint64_t seed);

}  // namespace cetag
