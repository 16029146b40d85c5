////////////////////////////////////////////////////////////////////////////////
// synthetic.cpp
////////////////////////////////////////////////////////////////////////////////

#include "cetag/synthetic.hpp"

#include <map>
#include <set>

#include "cetag/util.hpp"

namespace cetag {

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.cause_phrases = {
      {"heavy", "rain"},      {"strong", "winds"},  {"late", "frost"},
      {"budget", "cuts"},     {"fuel", "shortage"}, {"grid", "failure"},
      {"credit", "crunch"},   {"poor", "harvest"},  {"drought"},
      {"sudden", "cold", "snap"},
  };
  spec.effect_phrases = {
      {"street", "flooding"}, {"crop", "losses"},  {"power", "outage"},
      {"price", "spike"},     {"travel", "chaos"}, {"factory", "closures"},
      {"job", "attrition"},   {"food", "scarcity"}, {"blackouts"},
      {"broad", "market", "slump"},
  };
  spec.connectives_forward = {
      {"caused"}, {"led", "to"}, {"resulted", "in"}, {"triggered"},
      {"brought", "about"},
  };
  spec.connectives_reverse = {
      {"because", "of"}, {"followed"}, {"was", "driven", "by"},
      {"stemmed", "from"},
  };
  spec.fillers = {"the",       "a",    "reports", "say",  "officials",
                  "yesterday", "this", "week",    "again", "analysts"};
  return spec;
}

namespace {

void collect(const std::vector<std::vector<std::string>>& phrases,
             const char* which, std::map<std::string, std::string>& owner) {
  for (const auto& phrase : phrases) {
    if (phrase.empty())
      throw CorpusError(std::string("synthetic spec: empty ") + which +
                        " phrase");
    for (const std::string& token : phrase) {
      auto [it, fresh] = owner.emplace(token, which);
      if (!fresh && it->second != which)
        throw CorpusError("synthetic spec: token '" + token + "' appears in " +
                          it->second + " and " + which + " vocabularies");
    }
  }
}

}  // namespace

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.cause_phrases.empty())
    throw CorpusError("synthetic spec: no cause phrases");
  if (spec.effect_phrases.empty())
    throw CorpusError("synthetic spec: no effect phrases");
  if (spec.reverse_fraction < 0.0 || spec.reverse_fraction > 1.0)
    throw CorpusError("synthetic spec: reverse fraction outside [0, 1]");
  if (spec.reverse_fraction < 1.0 && spec.connectives_forward.empty())
    throw CorpusError("synthetic spec: forward sentences need forward "
                      "connectives");
  if (spec.reverse_fraction > 0.0 && spec.connectives_reverse.empty())
    throw CorpusError("synthetic spec: reverse sentences need reverse "
                      "connectives");
  if ((spec.max_prefix > 0 || spec.max_suffix > 0) && spec.fillers.empty())
    throw CorpusError("synthetic spec: prefix and suffix slots need fillers");

  std::map<std::string, std::string> owner;
  collect(spec.cause_phrases, "cause", owner);
  collect(spec.effect_phrases, "effect", owner);
  collect(spec.connectives_forward, "connective", owner);
  collect(spec.connectives_reverse, "connective", owner);
  std::vector<std::vector<std::string>> filler_rows;
  for (const std::string& f : spec.fillers) filler_rows.push_back({f});
  collect(filler_rows, "filler", owner);
}

std::vector<AnnotatedSentence> generate_synthetic_corpus(
    const SyntheticSpec& spec, std::size_t size, std::uint64_t seed) {
  validate_synthetic_spec(spec);
  Rng rng(derive_seed(seed, "synthetic"));
  std::vector<AnnotatedSentence> corpus;
  corpus.reserve(size);

  auto pick = [&rng](const std::vector<std::vector<std::string>>& from) {
    return from[rng.bounded(from.size())];
  };

  for (std::size_t i = 0; i < size; ++i) {
    bool reverse = rng.uniform() < spec.reverse_fraction;
    std::vector<std::string> cause = pick(spec.cause_phrases);
    std::vector<std::string> effect = pick(spec.effect_phrases);
    std::vector<std::string> connective =
        reverse ? pick(spec.connectives_reverse)
                : pick(spec.connectives_forward);
    std::size_t prefix = spec.max_prefix ? rng.bounded(spec.max_prefix + 1) : 0;
    std::size_t suffix = spec.max_suffix ? rng.bounded(spec.max_suffix + 1) : 0;

    AnnotatedSentence s;
    s.id = "syn-" + std::to_string(i);
    for (std::size_t p = 0; p < prefix; ++p)
      s.tokens.push_back(spec.fillers[rng.bounded(spec.fillers.size())]);

    const std::vector<std::string>& first = reverse ? effect : cause;
    const std::vector<std::string>& second = reverse ? cause : effect;
    Span first_span{s.tokens.size(), s.tokens.size() + first.size()};
    s.tokens.insert(s.tokens.end(), first.begin(), first.end());
    s.tokens.insert(s.tokens.end(), connective.begin(), connective.end());
    Span second_span{s.tokens.size(), s.tokens.size() + second.size()};
    s.tokens.insert(s.tokens.end(), second.begin(), second.end());
    for (std::size_t q = 0; q < suffix; ++q)
      s.tokens.push_back(spec.fillers[rng.bounded(spec.fillers.size())]);

    s.cause_spans.push_back(reverse ? second_span : first_span);
    s.effect_spans.push_back(reverse ? first_span : second_span);
    corpus.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace cetag
