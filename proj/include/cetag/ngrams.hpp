////////////////////////////////////////////////////////////////////////////////
// ngrams.hpp
// Frequent cause/effect n-grams: strided extraction, per-sentence span
// counting, smoothed frequency-ratio scoring, top-fraction selection
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cetag/corpus.hpp"

namespace cetag {

using Ngram = std::vector<std::string>;

std::string ngram_text(const Ngram& g);  // tokens joined with spaces, for messages

// Windows of n tokens taken every `step` positions, in sentence order.
// floor((len - n) / step) + 1 windows when len >= n, none otherwise.
std::vector<Ngram> extract_ngrams(const std::vector<std::string>& tokens, int n,
                                  int step);

struct NgramCounts {
  long long cause = 0;
  long long effect = 0;
};

// Per-window-size counts. A sentence contributes at most 1 to an n-gram's
// cause count, and only when the n-gram lies wholly inside a cause span;
// symmetrically for effect. Totals are the column sums.
struct NgramTable {
  int window_size = 0;
  std::map<Ngram, NgramCounts> entries;
  long long cause_total = 0;
  long long effect_total = 0;
};

NgramTable count_ngrams(const std::vector<AnnotatedSentence>& corpus, int n);

// r = ((cause_count + b) / cause_total) / ((effect_count + b) / effect_total).
// Smoothing touches only the numerators; zero totals are an error.
double score_ngram(const NgramTable& table, const Ngram& w, double b);

struct RankedNgrams {
  int window_size = 0;
  Role role = Role::cause;
  double smoothing = 1.0;
  std::vector<std::pair<Ngram, double>> items;  // (ngram, r), best-first
};

// Cause role ranks by r descending, effect role by r ascending. Keeps
// ceil(fraction * entries) items. Ties break on higher role count, then
// lexicographic n-gram.
RankedNgrams select_top(const NgramTable& table, Role role, double fraction,
                        double b = 1.0);

}  // namespace cetag
