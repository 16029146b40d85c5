////////////////////////////////////////////////////////////////////////////////
// corpus.hpp
// Span-annotated causality corpora: validation, BIO codec, statistics, splits,
// JSONL / CoNLL-TSV input and output
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cetag/util.hpp"

namespace cetag {

// Half-open token interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class Role { cause, effect };

const char* role_name(Role r);
Role role_from_name(const std::string& s);  // throws CorpusError

struct AnnotatedSentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Span> cause_spans;
  std::vector<Span> effect_spans;
  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

// Tag order is load-bearing: Viterbi tie-breaking picks the lowest index.
enum class Tag : int { O = 0, BC = 1, IC = 2, BE = 3, IE = 4 };
inline constexpr int kTagCount = 5;

const char* tag_name(Tag t);
Tag tag_from_name(const std::string& s);  // throws CorpusError

using TagSequence = std::vector<Tag>;

struct LengthMode {
  std::size_t length = 0;
  double proportion = 0.0;
  friend bool operator==(const LengthMode&, const LengthMode&) = default;
};

struct CorpusStats {
  double avg_sentence_length = 0.0;
  double mean_causal_distance = 0.0;
  LengthMode cause_length_mode;
  LengthMode effect_length_mode;
  double avg_cause_length = 0.0;
  double avg_effect_length = 0.0;
};

// Throws CorpusError naming the violated invariant. Spans must lie inside the
// token range and no two spans of any role may overlap. A sentence without
// spans is valid here; training entry points enforce span presence themselves.
void validate_sentence(const AnnotatedSentence& s);

// Sentence -> 5-tag BIO sequence, one tag per token.
TagSequence encode_bio(const AnnotatedSentence& s);

enum class Repair { strict, coerce };

struct DecodedSpans {
  std::vector<Span> cause;
  std::vector<Span> effect;
  friend bool operator==(const DecodedSpans&, const DecodedSpans&) = default;
};

// strict: throws CorpusError at the first I-* without a compatible
// predecessor. coerce: such an I-* is read as B-*.
DecodedSpans decode_bio(const TagSequence& tags, Repair repair);

// The six corpus statistics. Requires a non-empty corpus where every sentence
// carries at least one cause and one effect span.
CorpusStats compute_stats(const std::vector<AnnotatedSentence>& corpus);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplits {
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> dev;
  std::vector<AnnotatedSentence> test;
};

// Seeded shuffle, then contiguous train/dev/test slices. Dev and test sizes
// are floored; train takes the remainder. An empty part on a non-empty corpus
// is an error.
CorpusSplits split_corpus(const std::vector<AnnotatedSentence>& corpus,
                          SplitRatios ratios, std::uint64_t seed);

enum class CorpusFormat { jsonl, conll_tsv };

CorpusFormat format_from_name(const std::string& s);  // throws CorpusError

// Records with overlapping spans are rejected but reported, never silently
// dropped; all other malformed records throw.
struct LoadReport {
  struct Rejected {
    std::size_t line = 0;
    std::string id;
    std::string reason;
  };
  std::vector<Rejected> rejected;
};

// Throws CorpusError (with line number) on malformed records. Overlap
// rejections go to `report` when given; with report == nullptr they throw too.
std::vector<AnnotatedSentence> load_corpus(const std::string& path,
                                           CorpusFormat format,
                                           LoadReport* report = nullptr);

void save_corpus(const std::string& path,
                 const std::vector<AnnotatedSentence>& corpus,
                 CorpusFormat format);

}  // namespace cetag
