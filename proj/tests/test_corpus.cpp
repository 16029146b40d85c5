////////////////////////////////////////////////////////////////////////////////
// test_corpus.cpp
////////////////////////////////////////////////////////////////////////////////

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "cetag/corpus.hpp"
#include "test_support.hpp"

using namespace cetag;

TEST_CASE("load_corpus jsonl maps fields directly") {
  std::string path = testsup::tmp_path("basic.jsonl");
  testsup::write_file(
      path,
      R"({"id":"s1","tokens":["a","b","c"],"spans":[{"role":"cause","start":0,"end":1},{"role":"effect","start":2,"end":3}]})"
      "\n");
  auto corpus = load_corpus(path, CorpusFormat::jsonl);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].id == "s1");
  CHECK(corpus[0].tokens == std::vector<std::string>{"a", "b", "c"});
  CHECK(corpus[0].cause_spans == std::vector<Span>{{0, 1}});
  CHECK(corpus[0].effect_spans == std::vector<Span>{{2, 3}});
}

TEST_CASE("load_corpus empty file gives empty corpus") {
  std::string path = testsup::tmp_path("empty.jsonl");
  testsup::write_file(path, "");
  CHECK(load_corpus(path, CorpusFormat::jsonl).empty());
}

TEST_CASE("load_corpus rejects span past token count with line number") {
  std::string path = testsup::tmp_path("oob.jsonl");
  testsup::write_file(path,
                      "{\"id\":\"ok\",\"tokens\":[\"a\"],\"spans\":[]}\n"
                      "{\"id\":\"bad\",\"tokens\":[\"a\",\"b\"],\"spans\":[{\"role\":\"cause\",\"start\":0,\"end\":3}]}\n");
  try {
    load_corpus(path, CorpusFormat::jsonl);
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("exceeds token count") != std::string::npos);
  }
}

TEST_CASE("load_corpus malformed json names the line") {
  std::string path = testsup::tmp_path("garbage.jsonl");
  testsup::write_file(path, "{\"id\":\"s\",\"tokens\":[\"a\"]}\nnot json\n");
  CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl),
                       doctest::Contains("line 2"), CorpusError);
}

TEST_CASE("load_corpus collects overlap rejections instead of dropping") {
  std::string path = testsup::tmp_path("overlap.jsonl");
  testsup::write_file(
      path,
      R"({"id":"good","tokens":["a","b"],"spans":[{"role":"cause","start":0,"end":1}]})"
      "\n"
      R"({"id":"clash","tokens":["a","b","c"],"spans":[{"role":"cause","start":0,"end":2},{"role":"effect","start":1,"end":3}]})"
      "\n");
  LoadReport report;
  auto corpus = load_corpus(path, CorpusFormat::jsonl, &report);
  CHECK(corpus.size() == 1);
  CHECK(corpus[0].id == "good");
  REQUIRE(report.rejected.size() == 1);
  CHECK(report.rejected[0].line == 2);
  CHECK(report.rejected[0].id == "clash");
  // without a report sink the overlap is a hard error
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::jsonl), CorpusError);
}

TEST_CASE("encode_bio basics") {
  AnnotatedSentence s{"x", {"a", "b", "c", "d"}, {{0, 2}}, {{3, 4}}};
  CHECK(encode_bio(s) == TagSequence{Tag::BC, Tag::IC, Tag::O, Tag::BE});

  AnnotatedSentence empty{"y", {"a", "b"}, {}, {}};
  CHECK(encode_bio(empty) == TagSequence{Tag::O, Tag::O});

  AnnotatedSentence adjacent{"z", {"a", "b", "c"}, {{0, 1}, {1, 2}}, {}};
  CHECK(encode_bio(adjacent) == TagSequence{Tag::BC, Tag::BC, Tag::O});
}

TEST_CASE("decode_bio inverse and repair") {
  DecodedSpans d = decode_bio({Tag::BC, Tag::IC, Tag::O, Tag::BE}, Repair::strict);
  CHECK(d.cause == std::vector<Span>{{0, 2}});
  CHECK(d.effect == std::vector<Span>{{3, 4}});

  DecodedSpans c = decode_bio({Tag::IC, Tag::O}, Repair::coerce);
  CHECK(c.cause == std::vector<Span>{{0, 1}});
  CHECK(c.effect.empty());

  CHECK_THROWS_WITH_AS(decode_bio({Tag::IC, Tag::O}, Repair::strict),
                       doctest::Contains("index 0"), CorpusError);

  // role switch without B is invalid in strict mode
  CHECK_THROWS_AS(decode_bio({Tag::BC, Tag::IE}, Repair::strict), CorpusError);
}

TEST_CASE("coerce repair matches the exhaustive 2-token oracle") {
  // Oracle: apply the stated repair rule (I-* with no compatible predecessor
  // acts as B-*), then collect spans directly.
  auto reference = [](TagSequence tags) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
      auto compatible = [&](Tag prev, Tag t) {
        if (t == Tag::IC) return prev == Tag::BC || prev == Tag::IC;
        return prev == Tag::BE || prev == Tag::IE;
      };
      if (tags[i] == Tag::IC || tags[i] == Tag::IE) {
        if (i == 0 || !compatible(tags[i - 1], tags[i]))
          tags[i] = tags[i] == Tag::IC ? Tag::BC : Tag::BE;
      }
    }
    // now a valid BIO sequence; collect spans
    DecodedSpans out;
    std::size_t i = 0;
    while (i < tags.size()) {
      if (tags[i] == Tag::O) { ++i; continue; }
      Role r = (tags[i] == Tag::BC || tags[i] == Tag::IC) ? Role::cause : Role::effect;
      std::size_t j = i + 1;
      Tag cont = r == Role::cause ? Tag::IC : Tag::IE;
      while (j < tags.size() && tags[j] == cont) ++j;
      (r == Role::cause ? out.cause : out.effect).push_back({i, j});
      i = j;
    }
    return out;
  };

  const Tag all[] = {Tag::O, Tag::BC, Tag::IC, Tag::BE, Tag::IE};
  int cases = 0;
  for (Tag a : all)
    for (Tag b : all) {
      TagSequence seq{a, b};
      CHECK(decode_bio(seq, Repair::coerce) == reference(seq));
      ++cases;
    }
  CHECK(cases == 25);
}

TEST_CASE("bio round trip on random span sets") {
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    auto s = testsup::random_sentence(rng, static_cast<std::size_t>(i));
    TagSequence tags = encode_bio(s);
    CHECK(tags.size() == s.tokens.size());
    DecodedSpans d = decode_bio(tags, Repair::strict);
    auto sorted = [](std::vector<Span> v) { std::sort(v.begin(), v.end()); return v; };
    CHECK(sorted(d.cause) == sorted(s.cause_spans));
    CHECK(sorted(d.effect) == sorted(s.effect_spans));
    // B counts equal span counts, all non-span positions O
    std::size_t bc = 0, be = 0;
    for (Tag t : tags) {
      if (t == Tag::BC) ++bc;
      if (t == Tag::BE) ++be;
    }
    CHECK(bc == s.cause_spans.size());
    CHECK(be == s.effect_spans.size());
  }
}

TEST_CASE("compute_stats on small fixtures") {
  AnnotatedSentence a{"a", {"t", "t", "t"}, {{0, 1}}, {{2, 3}}};
  AnnotatedSentence b{"b", {"t", "t", "t", "t", "t"}, {{0, 2}}, {{3, 5}}};
  auto st = compute_stats({a, b});
  CHECK(st.avg_sentence_length == doctest::Approx(4.0));

  AnnotatedSentence c{"c", {"t", "t", "t", "t", "t", "t"}, {{0, 2}}, {{5, 6}}};
  auto st2 = compute_stats({c});
  CHECK(st2.mean_causal_distance == doctest::Approx(3.0));

  // cause lengths {2,2,4} -> mode (2, 2/3)
  AnnotatedSentence d{"d", {"t", "t", "t", "t", "t", "t", "t", "t"},
                      {{0, 2}, {3, 5}}, {{6, 7}}};
  AnnotatedSentence e{"e", {"t", "t", "t", "t", "t", "t"}, {{0, 4}}, {{5, 6}}};
  auto st3 = compute_stats({d, e});
  CHECK(st3.cause_length_mode == LengthMode{2, 2.0 / 3.0});
}

TEST_CASE("compute_stats rejects empty and spanless input") {
  CHECK_THROWS_AS(compute_stats({}), CorpusError);
  AnnotatedSentence s{"s", {"a"}, {}, {}};
  CHECK_THROWS_AS(compute_stats({s}), CorpusError);
}

TEST_CASE("compute_stats is permutation invariant") {
  Rng rng(123);
  std::vector<AnnotatedSentence> corpus;
  for (std::size_t i = 0; i < 20; ++i)
    corpus.push_back(testsup::random_training_sentence(rng, i));
  auto st1 = compute_stats(corpus);
  std::vector<AnnotatedSentence> shuffled = corpus;
  rng.shuffle(shuffled);
  auto st2 = compute_stats(shuffled);
  CHECK(st1.avg_sentence_length == st2.avg_sentence_length);
  CHECK(st1.mean_causal_distance == st2.mean_causal_distance);
  CHECK(st1.cause_length_mode == st2.cause_length_mode);
  CHECK(st1.effect_length_mode == st2.effect_length_mode);
  CHECK(st1.avg_cause_length == st2.avg_cause_length);
  CHECK(st1.avg_effect_length == st2.avg_effect_length);
}

TEST_CASE("split_corpus sizes, determinism, errors") {
  Rng rng(7);
  std::vector<AnnotatedSentence> corpus;
  for (std::size_t i = 0; i < 10; ++i)
    corpus.push_back(testsup::random_training_sentence(rng, i));

  auto sp = split_corpus(corpus, {0.8, 0.1, 0.1}, 7);
  CHECK(sp.train.size() == 8);
  CHECK(sp.dev.size() == 1);
  CHECK(sp.test.size() == 1);

  auto sp2 = split_corpus(corpus, {0.8, 0.1, 0.1}, 7);
  CHECK(sp.train == sp2.train);
  CHECK(sp.dev == sp2.dev);
  CHECK(sp.test == sp2.test);

  // partition is exhaustive and disjoint
  std::vector<std::string> ids;
  for (const auto* part : {&sp.train, &sp.dev, &sp.test})
    for (const auto& s : *part) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  CHECK(std::unique(ids.begin(), ids.end()) == ids.end());
  CHECK(ids.size() == corpus.size());

  CHECK_THROWS_AS(split_corpus(corpus, {0.5, 0.5, 0.0}, 1), CorpusError);
  CHECK_THROWS_AS(split_corpus(corpus, {0.98, 0.01, 0.01}, 1), CorpusError);
}

TEST_CASE("jsonl save/load round trip reproduces the object graph") {
  Rng rng(55);
  std::vector<AnnotatedSentence> corpus;
  for (std::size_t i = 0; i < 25; ++i)
    corpus.push_back(testsup::random_sentence(rng, i));
  std::string path = testsup::tmp_path("roundtrip.jsonl");
  save_corpus(path, corpus, CorpusFormat::jsonl);
  auto loaded = load_corpus(path, CorpusFormat::jsonl);
  CHECK(loaded == corpus);
}

TEST_CASE("conll-tsv save/load preserves tokens and spans") {
  Rng rng(56);
  std::vector<AnnotatedSentence> corpus;
  for (std::size_t i = 0; i < 10; ++i)
    corpus.push_back(testsup::random_sentence(rng, i));
  std::string path = testsup::tmp_path("roundtrip.tsv");
  save_corpus(path, corpus, CorpusFormat::conll_tsv);
  auto loaded = load_corpus(path, CorpusFormat::conll_tsv);
  REQUIRE(loaded.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(loaded[i].tokens == corpus[i].tokens);
    auto sorted = [](std::vector<Span> v) { std::sort(v.begin(), v.end()); return v; };
    CHECK(sorted(loaded[i].cause_spans) == sorted(corpus[i].cause_spans));
    CHECK(sorted(loaded[i].effect_spans) == sorted(corpus[i].effect_spans));
  }
}

TEST_CASE("conll-tsv rejects malformed lines") {
  std::string path = testsup::tmp_path("bad.tsv");
  testsup::write_file(path, "a\tB-C\nb no-tab\n");
  CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::conll_tsv),
                       doctest::Contains("line 2"), CorpusError);

  testsup::write_file(path, "a\tB-Q\n");
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::conll_tsv), CorpusError);
}

TEST_CASE("missing corpus file names the path") {
  CHECK_THROWS_WITH_AS(load_corpus("/nonexistent/x.jsonl", CorpusFormat::jsonl),
                       doctest::Contains("/nonexistent/x.jsonl"), CorpusError);
}
