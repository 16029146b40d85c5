////////////////////////////////////////////////////////////////////////////////
// corpus.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace cetag {

using json = nlohmann::json;

const char* role_name(Role r) { return r == Role::cause ? "cause" : "effect"; }

Role role_from_name(const std::string& s) {
  if (s == "cause") return Role::cause;
  if (s == "effect") return Role::effect;
  throw CorpusError("unknown span role '" + s + "'");
}

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::O: return "O";
    case Tag::BC: return "B-C";
    case Tag::IC: return "I-C";
    case Tag::BE: return "B-E";
    case Tag::IE: return "I-E";
  }
  return "?";
}

Tag tag_from_name(const std::string& s) {
  if (s == "O") return Tag::O;
  if (s == "B-C") return Tag::BC;
  if (s == "I-C") return Tag::IC;
  if (s == "B-E") return Tag::BE;
  if (s == "I-E") return Tag::IE;
  throw CorpusError("unknown tag '" + s + "'");
}

CorpusFormat format_from_name(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "conll-tsv") return CorpusFormat::conll_tsv;
  throw CorpusError("unknown corpus format '" + s + "' (expected jsonl or conll-tsv)");
}

namespace {

// Bounds check for one span; returns a reason string or empty.
std::string span_bounds_issue(const Span& sp, std::size_t len) {
  if (sp.start >= sp.end)
    return "span start " + std::to_string(sp.start) + " must be < end " +
           std::to_string(sp.end);
  if (sp.end > len)
    return "span end " + std::to_string(sp.end) + " exceeds token count " +
           std::to_string(len);
  return {};
}

std::string overlap_issue(const AnnotatedSentence& s) {
  std::vector<Span> all = s.cause_spans;
  all.insert(all.end(), s.effect_spans.begin(), s.effect_spans.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].start < all[i - 1].end)
      return "spans [" + std::to_string(all[i - 1].start) + "," +
             std::to_string(all[i - 1].end) + ") and [" +
             std::to_string(all[i].start) + "," + std::to_string(all[i].end) +
             ") overlap";
  }
  return {};
}

}  // namespace

void validate_sentence(const AnnotatedSentence& s) {
  for (const auto* spans : {&s.cause_spans, &s.effect_spans}) {
    for (const Span& sp : *spans) {
      std::string issue = span_bounds_issue(sp, s.tokens.size());
      if (!issue.empty())
        throw CorpusError("sentence '" + s.id + "': " + issue);
    }
  }
  std::string issue = overlap_issue(s);
  if (!issue.empty()) throw CorpusError("sentence '" + s.id + "': " + issue);
}

TagSequence encode_bio(const AnnotatedSentence& s) {
  TagSequence tags(s.tokens.size(), Tag::O);
  for (const Span& sp : s.cause_spans) {
    tags[sp.start] = Tag::BC;
    for (std::size_t i = sp.start + 1; i < sp.end; ++i) tags[i] = Tag::IC;
  }
  for (const Span& sp : s.effect_spans) {
    tags[sp.start] = Tag::BE;
    for (std::size_t i = sp.start + 1; i < sp.end; ++i) tags[i] = Tag::IE;
  }
  return tags;
}

DecodedSpans decode_bio(const TagSequence& tags, Repair repair) {
  DecodedSpans out;
  // Open span state: role + start index, or none.
  bool open = false;
  Role open_role = Role::cause;
  std::size_t open_start = 0;

  auto close = [&](std::size_t end) {
    if (!open) return;
    (open_role == Role::cause ? out.cause : out.effect)
        .push_back(Span{open_start, end});
    open = false;
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    Tag t = tags[i];
    switch (t) {
      case Tag::O:
        close(i);
        break;
      case Tag::BC:
      case Tag::BE: {
        close(i);
        open = true;
        open_role = (t == Tag::BC) ? Role::cause : Role::effect;
        open_start = i;
        break;
      }
      case Tag::IC:
      case Tag::IE: {
        Role r = (t == Tag::IC) ? Role::cause : Role::effect;
        if (open && open_role == r) break;  // continuation
        if (repair == Repair::strict)
          throw CorpusError("invalid BIO transition at index " +
                            std::to_string(i) + ": " + tag_name(t) +
                            " without a compatible predecessor");
        // coerce: treat as B-*
        close(i);
        open = true;
        open_role = r;
        open_start = i;
        break;
      }
    }
  }
  close(tags.size());
  return out;
}

namespace {

// Token gap between the closest boundaries of the nearest cause/effect pair.
std::size_t causal_distance(const AnnotatedSentence& s) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (const Span& c : s.cause_spans) {
    for (const Span& e : s.effect_spans) {
      std::size_t gap = e.start >= c.end ? e.start - c.end : c.start - e.end;
      best = std::min(best, gap);
    }
  }
  return best;
}

LengthMode length_mode(const std::map<std::size_t, std::size_t>& hist,
                       std::size_t total) {
  LengthMode m;
  std::size_t best = 0;
  for (const auto& [len, count] : hist) {
    if (count > best) {  // ties go to the smallest attained length
      best = count;
      m.length = len;
    }
  }
  m.proportion = static_cast<double>(best) / static_cast<double>(total);
  return m;
}

}  // namespace

CorpusStats compute_stats(const std::vector<AnnotatedSentence>& corpus) {
  if (corpus.empty()) throw CorpusError("compute_stats: empty corpus");

  CorpusStats st;
  double len_sum = 0.0, dist_sum = 0.0;
  double cause_len_sum = 0.0, effect_len_sum = 0.0;
  std::size_t cause_n = 0, effect_n = 0;
  std::map<std::size_t, std::size_t> cause_hist, effect_hist;

  for (const auto& s : corpus) {
    if (s.cause_spans.empty() || s.effect_spans.empty())
      throw CorpusError("compute_stats: sentence '" + s.id +
                        "' lacks a cause or effect span");
    len_sum += static_cast<double>(s.tokens.size());
    dist_sum += static_cast<double>(causal_distance(s));
    for (const Span& sp : s.cause_spans) {
      std::size_t L = sp.end - sp.start;
      cause_len_sum += static_cast<double>(L);
      ++cause_hist[L];
      ++cause_n;
    }
    for (const Span& sp : s.effect_spans) {
      std::size_t L = sp.end - sp.start;
      effect_len_sum += static_cast<double>(L);
      ++effect_hist[L];
      ++effect_n;
    }
  }

  double n = static_cast<double>(corpus.size());
  st.avg_sentence_length = len_sum / n;
  st.mean_causal_distance = dist_sum / n;
  st.avg_cause_length = cause_len_sum / static_cast<double>(cause_n);
  st.avg_effect_length = effect_len_sum / static_cast<double>(effect_n);
  st.cause_length_mode = length_mode(cause_hist, cause_n);
  st.effect_length_mode = length_mode(effect_hist, effect_n);
  return st;
}

CorpusSplits split_corpus(const std::vector<AnnotatedSentence>& corpus,
                          SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.dev <= 0 || ratios.test <= 0)
    throw CorpusError("split_corpus: ratios must be positive");
  if (std::fabs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw CorpusError("split_corpus: ratios must sum to 1");

  std::size_t n = corpus.size();
  auto n_dev = static_cast<std::size_t>(std::floor(ratios.dev * static_cast<double>(n)));
  auto n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
  std::size_t n_train = n - n_dev - n_test;
  if (n > 0 && (n_train == 0 || n_dev == 0 || n_test == 0))
    throw CorpusError("split_corpus: ratios produce an empty part for " +
                      std::to_string(n) + " sentences");

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  CorpusSplits out;
  for (std::size_t i = 0; i < n_train; ++i) out.train.push_back(corpus[idx[i]]);
  for (std::size_t i = n_train; i < n_train + n_dev; ++i) out.dev.push_back(corpus[idx[i]]);
  for (std::size_t i = n_train + n_dev; i < n; ++i) out.test.push_back(corpus[idx[i]]);
  return out;
}

namespace {

AnnotatedSentence parse_jsonl_record(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw CorpusError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
  }
  if (!j.is_object())
    throw CorpusError("line " + std::to_string(lineno) + ": record is not an object");

  AnnotatedSentence s;
  s.id = j.contains("id") && j["id"].is_string()
             ? j["id"].get<std::string>()
             : "line" + std::to_string(lineno);

  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw CorpusError("line " + std::to_string(lineno) + ": missing 'tokens' array");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string())
      throw CorpusError("line " + std::to_string(lineno) + ": non-string token");
    s.tokens.push_back(t.get<std::string>());
  }

  if (j.contains("spans")) {
    if (!j["spans"].is_array())
      throw CorpusError("line " + std::to_string(lineno) + ": 'spans' is not an array");
    for (const auto& sp : j["spans"]) {
      if (!sp.is_object() || !sp.contains("role") || !sp.contains("start") ||
          !sp.contains("end") || !sp["role"].is_string() ||
          !sp["start"].is_number_unsigned() || !sp["end"].is_number_unsigned())
        throw CorpusError("line " + std::to_string(lineno) +
                          ": span needs string 'role' and unsigned 'start'/'end'");
      Role role;
      try {
        role = role_from_name(sp["role"].get<std::string>());
      } catch (const CorpusError& e) {
        throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
      }
      Span v{sp["start"].get<std::size_t>(), sp["end"].get<std::size_t>()};
      (role == Role::cause ? s.cause_spans : s.effect_spans).push_back(v);
    }
  }
  return s;
}

std::vector<AnnotatedSentence> load_jsonl(std::istream& in, LoadReport* report) {
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    AnnotatedSentence s = parse_jsonl_record(line, lineno);
    for (const auto* spans : {&s.cause_spans, &s.effect_spans}) {
      for (const Span& sp : *spans) {
        std::string issue = span_bounds_issue(sp, s.tokens.size());
        if (!issue.empty())
          throw CorpusError("line " + std::to_string(lineno) + ": " + issue);
      }
    }
    std::string overlap = overlap_issue(s);
    if (!overlap.empty()) {
      if (report == nullptr)
        throw CorpusError("line " + std::to_string(lineno) + ": " + overlap);
      report->rejected.push_back({lineno, s.id, overlap});
      continue;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<AnnotatedSentence> load_conll_tsv(std::istream& in, LoadReport* report) {
  std::vector<AnnotatedSentence> out;
  std::vector<std::string> tokens;
  TagSequence tags;
  std::size_t lineno = 0, sentence_line = 1, sentence_idx = 0;

  auto flush = [&]() {
    if (tokens.empty()) return;
    AnnotatedSentence s;
    s.id = "s" + std::to_string(sentence_idx++);
    s.tokens = std::move(tokens);
    tokens.clear();
    DecodedSpans spans;
    try {
      spans = decode_bio(tags, Repair::strict);
    } catch (const CorpusError& e) {
      throw CorpusError("sentence starting at line " +
                        std::to_string(sentence_line) + ": " + e.what());
    }
    tags.clear();
    s.cause_spans = std::move(spans.cause);
    s.effect_spans = std::move(spans.effect);
    out.push_back(std::move(s));
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      flush();
      sentence_line = lineno + 1;
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw CorpusError("line " + std::to_string(lineno) +
                        ": expected 'token<TAB>tag'");
    std::string tok = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    try {
      tags.push_back(tag_from_name(tag));
    } catch (const CorpusError& e) {
      throw CorpusError("line " + std::to_string(lineno) + ": " + e.what());
    }
    tokens.push_back(std::move(tok));
  }
  flush();
  (void)report;  // TSV carries tags, so overlap cannot arise
  return out;
}

}  // namespace

std::vector<AnnotatedSentence> load_corpus(const std::string& path,
                                           CorpusFormat format,
                                           LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file '" + path + "'");
  std::vector<AnnotatedSentence> corpus =
      format == CorpusFormat::jsonl ? load_jsonl(in, report)
                                    : load_conll_tsv(in, report);
  for (const auto& s : corpus) validate_sentence(s);
  return corpus;
}

void save_corpus(const std::string& path,
                 const std::vector<AnnotatedSentence>& corpus,
                 CorpusFormat format) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot open '" + path + "' for writing");
  if (format == CorpusFormat::jsonl) {
    for (const auto& s : corpus) {
      json spans = json::array();
      for (const Span& sp : s.cause_spans)
        spans.push_back({{"role", "cause"}, {"start", sp.start}, {"end", sp.end}});
      for (const Span& sp : s.effect_spans)
        spans.push_back({{"role", "effect"}, {"start", sp.start}, {"end", sp.end}});
      json j{{"id", s.id}, {"tokens", s.tokens}, {"spans", spans}};
      out << j.dump() << "\n";
    }
  } else {
    bool first = true;
    for (const auto& s : corpus) {
      if (!first) out << "\n";  // exactly one blank line between sentences
      first = false;
      TagSequence tags = encode_bio(s);
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        out << s.tokens[i] << "\t" << tag_name(tags[i]) << "\n";
    }
  }
  if (!out) throw CorpusError("write to '" + path + "' failed");
}

}  // namespace cetag
