////////////////////////////////////////////////////////////////////////////////
// ngrams.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/ngrams.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cetag {

std::string ngram_text(const Ngram& g) {
  std::string s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) s += ' ';
    s += g[i];
  }
  return s;
}

std::vector<Ngram> extract_ngrams(const std::vector<std::string>& tokens, int n,
                                  int step) {
  if (n <= 0) throw KnowledgeError("extract_ngrams: n must be >= 1");
  if (step <= 0) throw KnowledgeError("extract_ngrams: step must be >= 1");
  std::vector<Ngram> out;
  std::size_t len = tokens.size();
  auto un = static_cast<std::size_t>(n);
  if (len < un) return out;
  for (std::size_t start = 0; start + un <= len;
       start += static_cast<std::size_t>(step))
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                     tokens.begin() + static_cast<std::ptrdiff_t>(start + un));
  return out;
}

NgramTable count_ngrams(const std::vector<AnnotatedSentence>& corpus, int n) {
  if (n <= 0) throw KnowledgeError("count_ngrams: n must be >= 1");
  NgramTable table;
  table.window_size = n;
  for (const auto& s : corpus) {
    // Sentence-level counting: collect the distinct within-span n-grams first.
    std::set<Ngram> in_cause, in_effect;
    auto collect = [&](const std::vector<Span>& spans, std::set<Ngram>& sink) {
      for (const Span& sp : spans) {
        std::vector<std::string> inside(
            s.tokens.begin() + static_cast<std::ptrdiff_t>(sp.start),
            s.tokens.begin() + static_cast<std::ptrdiff_t>(sp.end));
        for (auto& g : extract_ngrams(inside, n, 1)) sink.insert(std::move(g));
      }
    };
    collect(s.cause_spans, in_cause);
    collect(s.effect_spans, in_effect);
    for (const Ngram& g : in_cause) {
      ++table.entries[g].cause;
      ++table.cause_total;
    }
    for (const Ngram& g : in_effect) {
      ++table.entries[g].effect;
      ++table.effect_total;
    }
  }
  return table;
}

double score_ngram(const NgramTable& table, const Ngram& w, double b) {
  if (!(b > 0.0)) throw KnowledgeError("score_ngram: smoothing b must be > 0");
  if (table.cause_total <= 0 || table.effect_total <= 0)
    throw KnowledgeError("score_ngram: table has a zero cause or effect total");
  NgramCounts c;
  if (auto it = table.entries.find(w); it != table.entries.end()) c = it->second;
  double num = (static_cast<double>(c.cause) + b) /
               static_cast<double>(table.cause_total);
  double den = (static_cast<double>(c.effect) + b) /
               static_cast<double>(table.effect_total);
  return num / den;
}

RankedNgrams select_top(const NgramTable& table, Role role, double fraction,
                        double b) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw KnowledgeError("select_top: fraction must lie in (0, 1]");
  if (table.entries.empty()) throw KnowledgeError("select_top: empty table");

  RankedNgrams out;
  out.window_size = table.window_size;
  out.role = role;
  out.smoothing = b;

  struct Row {
    const Ngram* g;
    double r;
    long long role_count;
  };
  std::vector<Row> rows;
  rows.reserve(table.entries.size());
  for (const auto& [g, counts] : table.entries) {
    double r = score_ngram(table, g, b);
    rows.push_back({&g, r, role == Role::cause ? counts.cause : counts.effect});
  }

  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& z) {
    double ka = role == Role::cause ? a.r : -a.r;
    double kz = role == Role::cause ? z.r : -z.r;
    if (ka != kz) return ka > kz;
    if (a.role_count != z.role_count) return a.role_count > z.role_count;
    return *a.g < *z.g;
  });

  auto keep = static_cast<std::size_t>(std::ceil(
      fraction * static_cast<double>(rows.size())));
  keep = std::min(keep, rows.size());
  for (std::size_t i = 0; i < keep; ++i)
    out.items.emplace_back(*rows[i].g, rows[i].r);
  return out;
}

}  // namespace cetag
