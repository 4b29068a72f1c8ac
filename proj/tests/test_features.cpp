#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lbas/features.hpp"

using namespace lbas;
using lbas::testing::flat_criteria;
using lbas::testing::make_corpus;
using lbas::testing::make_essay;

namespace {

Resources tiny_resources() {
  Resources r;
  r.lexicon = {"the", "cat",  "sleeps", "eats",  "and", "a",  "dog", "good",
               "is",  "very", "it",     "story", "on",  "to", "we",  "walk"};
  r.academic_words = {"story"};
  r.connectives = {"and"};
  r.function_words = {"the", "and", "a", "is", "it", "on", "to", "we", "very"};
  return r;
}

// Inventory with one NonPrompt 3-gram and one Prompt 4-gram, counts planted
// by hand for a single essay.
BundleInventory planted_inventory(const std::string& essay_id, std::int64_t nonprompt3,
                                  std::int64_t prompt4) {
  BundleInventory inv;
  LexicalBundle three;
  three.words = {"it", "is", "good"};
  three.length = 3;
  three.raw_count = nonprompt3;
  three.range = 1;
  three.prompt_type = PromptType::NonPrompt;
  if (nonprompt3 > 0) three.per_essay_counts = {{essay_id, nonprompt3}};
  LexicalBundle four;
  four.words = {"on", "the", "other", "hand"};
  four.length = 4;
  four.raw_count = prompt4;
  four.range = 1;
  four.prompt_type = PromptType::Prompt;
  if (prompt4 > 0) four.per_essay_counts = {{essay_id, prompt4}};
  inv.bundles = {four, three};
  inv.rebuild_essay_index();
  return inv;
}

}  // namespace

TEST_CASE("lb features normalize per 100 words") {
  int counter = 0;
  TokenizedEssay essay = make_essay("e1", testing::filler_text(250, counter));
  BundleInventory inv = planted_inventory("e1", 5, 0);
  LBFeatureSet fs = compute_lb_features(essay, inv);
  CHECK(fs.total_nonprompt == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fs.total_prompt == 0.0);
  CHECK(fs.total_overall == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fs.nonprompt[0] == doctest::Approx(2.0));  // the 3-gram slot
  CHECK(fs.total[0] == doctest::Approx(2.0));
}

TEST_CASE("lb features zero case and missing essay") {
  int counter = 0;
  TokenizedEssay essay = make_essay("e1", testing::filler_text(100, counter));
  BundleInventory empty_inv = planted_inventory("someone_else", 3, 2);
  LBFeatureSet fs = compute_lb_features(essay, empty_inv);
  for (double v : fs.as_row()) CHECK(v == 0.0);
}

TEST_CASE("per-length prompt feature from a planted fixture") {
  int counter = 0;
  TokenizedEssay essay = make_essay("e1", testing::filler_text(100, counter));
  BundleInventory inv = planted_inventory("e1", 0, 3);
  LBFeatureSet fs = compute_lb_features(essay, inv);
  CHECK(fs.prompt[4 - 3] == doctest::Approx(3.0).epsilon(1e-12));  // 4-word slot
  CHECK(fs.total_prompt == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fs.total_overall == doctest::Approx(3.0).epsilon(1e-12));

  // perword normalization divides by the word count only
  LBFeatureSet pw = compute_lb_features(essay, inv, Normalization::PerWord);
  CHECK(pw.prompt[1] == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("lb feature identities hold on mined corpora") {
  // mine a real inventory, then check sums and scale invariance per essay
  Corpus corpus = make_corpus({
      make_essay("a", "it is good and it is good and it is good", "ARA", "P1"),
      make_essay("b", "it is good to walk on the other hand we walk", "FRA", "P2"),
      make_essay("c", "on the other hand we sleep it is good", "ZHO", "P1"),
  });
  BundleInventory inv = identify_bundles(corpus, flat_criteria(1.0, 2),
                                         OverlapPolicy::SubsumeLongest);
  REQUIRE(inv.n_total() > 0);
  for (const auto& essay : corpus.essays) {
    LBFeatureSet fs = compute_lb_features(essay, inv);
    double sum_lengths = 0.0;
    for (int i = 0; i < 7; ++i) {
      CHECK(fs.total[i] == fs.prompt[i] + fs.nonprompt[i]);
      sum_lengths += fs.total[i];
    }
    CHECK(fs.total_overall == doctest::Approx(sum_lengths).epsilon(1e-12));
    CHECK(fs.total_overall == doctest::Approx(fs.total_prompt + fs.total_nonprompt));

    // doubling the essay (tokens and counts) leaves per-100-words flat
    TokenizedEssay doubled = essay;
    doubled.meta.essay_id = essay.meta.essay_id + "_double";
    doubled.tokens.insert(doubled.tokens.end(), essay.tokens.begin(), essay.tokens.end());
    BundleInventory doubled_inv = inv;
    for (auto& b : doubled_inv.bundles)
      for (auto& [id, count] : b.per_essay_counts)
        if (id == essay.meta.essay_id) {
          b.per_essay_counts.emplace_back(doubled.meta.essay_id, count * 2);
          break;
        }
    doubled_inv.rebuild_essay_index();
    LBFeatureSet fs2 = compute_lb_features(doubled, doubled_inv);
    for (std::size_t i = 0; i < fs.as_row().size(); ++i)
      CHECK(fs2.as_row()[i] == doctest::Approx(fs.as_row()[i]).epsilon(1e-12));
  }
}

TEST_CASE("native baseline zero-miss and full-miss spelling") {
  Resources res = tiny_resources();
  TokenizedEssay clean = make_essay("c", "the cat sleeps and the dog eats");
  BaselineFeatures bf = compute_native_baseline(clean, res);
  CHECK(bf.values["misspelling_per_100_words"] == 0.0);

  // 100 tokens, 4 outside the lexicon
  std::string text;
  for (int i = 0; i < 96; ++i) text += "cat ";
  text += "zzq zzw zze zzr";
  TokenizedEssay miss = make_essay("m", text);
  BaselineFeatures bf2 = compute_native_baseline(miss, res);
  CHECK(bf2.values["misspelling_per_100_words"] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("native baseline sentence overlap") {
  Resources res = tiny_resources();
  TokenizedEssay essay = make_essay("s", "the cat sleeps. the cat eats.");
  BaselineFeatures bf = compute_native_baseline(essay, res);
  CHECK(bf.values["adjacent_overlap_binary_all_sent"] == doctest::Approx(1.0));

  TokenizedEssay disjoint = make_essay("d", "the cat sleeps. a dog walks.");
  BaselineFeatures bf2 = compute_native_baseline(disjoint, res);
  CHECK(bf2.values["adjacent_overlap_binary_all_sent"] == 0.0);

  TokenizedEssay single = make_essay("one", "the cat sleeps");
  BaselineFeatures bf3 = compute_native_baseline(single, res);
  CHECK(bf3.values["adjacent_overlap_binary_all_sent"] == 0.0);
  REQUIRE(bf3.warnings.size() >= 1);
  CHECK(bf3.warnings[0].find("fewer than 2 sentences") != std::string::npos);
}

TEST_CASE("native baseline paragraph overlap and ratios") {
  Resources res = tiny_resources();
  TokenizedEssay essay =
      make_essay("p", "the cat sleeps and eats.\n\nthe cat walks. a good story.");
  BaselineFeatures bf = compute_native_baseline(essay, res);
  // paragraph 2 content lemmas: {cat, walk, good, story}; shared with
  // paragraph 1 {cat, sleep, eat}: {cat} -> 1/4
  CHECK(bf.values["adjacent_overlap_all_para_div_seg"] == doctest::Approx(0.25));

  // lexical density: content types / total types
  TokenizedEssay simple = make_essay("ld", "the cat and a dog");
  BaselineFeatures bfs = compute_native_baseline(simple, res);
  CHECK(bfs.values["lexical_density_type"] == doctest::Approx(2.0 / 5.0));
  CHECK(bfs.values["all_connective"] == doctest::Approx(1.0 / 5.0));

  TokenizedEssay acad = make_essay("aw", "a good story");
  BaselineFeatures bfa = compute_native_baseline(acad, res);
  CHECK(bfa.values["acad_collexeme_ratio_type"] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("native baseline typographical heuristics") {
  Resources res = tiny_resources();
  // one repeated-punctuation run, two lowercase sentence starts after
  // repair ("the cat!" and "eats ..."), one unmatched bracket: 4 typos
  // over 6 words
  TokenizedEssay essay = make_essay("t", "the cat!! eats (and the dog");
  BaselineFeatures bf = compute_native_baseline(essay, res);
  CHECK(bf.values["typographical_per_100_words"] == doctest::Approx(400.0 / 6.0));
}

TEST_CASE("native baseline marks parser features missing") {
  Resources res = tiny_resources();
  TokenizedEssay essay = make_essay("x", "the cat sleeps. the dog eats.");
  BaselineFeatures bf = compute_native_baseline(essay, res);
  for (const auto& name : external_only_names()) CHECK(bf.values.count(name) == 0);
  for (const auto& name : native_baseline_names()) CHECK(bf.values.count(name) == 1);

  // native features stay in their documented ranges
  for (const auto& [name, value] : bf.values) {
    CHECK(value >= 0.0);
    if (name.find("per_100_words") != std::string::npos)
      CHECK(value <= 100.0);
    else
      CHECK(value <= 1.0);
  }

  // the typographical rate is capped at 100 even under bracket spam
  TokenizedEssay spam = make_essay("spam", ")))))))))) cat");
  BaselineFeatures capped = compute_native_baseline(spam, res);
  CHECK(capped.values["typographical_per_100_words"] <= 100.0);
}

TEST_CASE("crude lemma stripping") {
  CHECK(crude_lemma("cats") == "cat");
  CHECK(crude_lemma("studies") == "study");
  CHECK(crude_lemma("boxes") == "box");
  CHECK(crude_lemma("walked") == "walk");
  CHECK(crude_lemma("stopped") == "stop");
  CHECK(crude_lemma("running") == "run");
  CHECK(crude_lemma("class") == "class");  // -ss guarded
  CHECK(crude_lemma("is") == "is");
  CHECK(crude_lemma("being") == "being");  // too short for -ing strip
}

TEST_CASE("merge_features selection, precedence and errors") {
  std::vector<std::string> ids = {"e1", "e2"};
  std::vector<ScoreLevel> levels = {ScoreLevel::Low, ScoreLevel::High};
  std::map<std::string, std::map<std::string, double>> native = {
      {"e1", {{"misspelling_per_100_words", 3.0}, {"lexical_density_type", 0.5}}},
      {"e2", {{"misspelling_per_100_words", 1.0}, {"lexical_density_type", 0.6}}}};
  std::map<std::string, std::map<std::string, double>> external = {
      {"e1", {{"misspelling_per_100_words", 9.0}, {"nsubj_stdev", 0.4}}},
      {"e2", {{"nsubj_stdev", 0.7}}}};

  FeatureTable t = merge_features(ids, levels, native, external,
                                  {"misspelling_per_100_words", "nsubj_stdev"});
  REQUIRE(t.names.size() == 2);
  CHECK(t.columns[0][0] == 9.0);  // external overrides native
  CHECK(t.columns[0][1] == 1.0);  // native fills the gap
  CHECK(t.columns[1][0] == 0.4);

  CHECK_THROWS_WITH_AS(merge_features(ids, levels, native, external, {}),
                       "empty feature selection", std::runtime_error);

  try {
    merge_features(ids, levels, native, external, {"dobj_stdev"});
    FAIL("expected missing-feature error");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("dobj_stdev") != std::string::npos);
    CHECK(msg.find("e1") != std::string::npos);
    CHECK(msg.find("e2") != std::string::npos);
  }
}

TEST_CASE("full baseline selection completes with external parser features") {
  Resources res = tiny_resources();
  std::vector<TokenizedEssay> essays = {
      make_essay("e1", "the cat sleeps. the cat eats."),
      make_essay("e2", "a good story. we walk to it and walk."),
  };
  std::map<std::string, std::map<std::string, double>> native;
  std::vector<std::string> ids;
  std::vector<ScoreLevel> levels = {ScoreLevel::Low, ScoreLevel::High};
  for (const auto& essay : essays) {
    BaselineFeatures bf = compute_native_baseline(essay, res);
    native[essay.meta.essay_id] = bf.values;
    ids.push_back(essay.meta.essay_id);
  }
  auto external = read_external_features(
      "essay_id,grammar_per_100_words,nsubj_stdev,pobj_stdev,dobj_stdev\n"
      "e1,2.5,0.4,0.3,0.2\n"
      "e2,1.0,0.5,0.6,0.1\n");

  // without the externals the selection cannot complete
  CHECK_THROWS_AS(merge_features(ids, levels, native, {}, baseline_feature_names()),
                  std::runtime_error);

  FeatureTable t =
      merge_features(ids, levels, native, external, baseline_feature_names());
  REQUIRE(t.names == baseline_feature_names());
  for (const auto& col : t.columns)
    for (double v : col) CHECK_FALSE(std::isnan(v));
  CHECK(t.columns[static_cast<std::size_t>(t.column("grammar_per_100_words"))][0] == 2.5);
  CHECK(t.columns[static_cast<std::size_t>(t.column("dobj_stdev"))][1] == 0.1);
}

TEST_CASE("merge_features ignores external row order") {
  std::vector<std::string> ids = {"a", "b", "c"};
  std::vector<ScoreLevel> levels = {ScoreLevel::Low, ScoreLevel::Medium, ScoreLevel::High};
  std::map<std::string, std::map<std::string, double>> native;
  for (const auto& id : ids) native[id]["f"] = 1.0;

  auto ext1 = read_external_features("essay_id,g\na,1\nb,2\nc,3\n");
  auto ext2 = read_external_features("essay_id,g\nc,3\na,1\nb,2\n");
  FeatureTable t1 = merge_features(ids, levels, native, ext1, {"f", "g"});
  FeatureTable t2 = merge_features(ids, levels, native, ext2, {"f", "g"});
  CHECK(t1.to_csv() == t2.to_csv());
}

TEST_CASE("external feature CSV treats empty cells as missing") {
  auto ext = read_external_features("essay_id,g,h\na,1.5,\nb,,2.5\n");
  CHECK(ext["a"].count("g") == 1);
  CHECK(ext["a"].count("h") == 0);
  CHECK(ext["b"].count("g") == 0);
  CHECK(ext["b"]["h"] == 2.5);
}

TEST_CASE("feature table round-trips through CSV") {
  FeatureTable t;
  t.essay_ids = {"e1", "e2"};
  t.levels = {ScoreLevel::Low, ScoreLevel::High};
  t.names = {"alpha", "beta"};
  t.columns = {{1.25, 2.5}, {std::nan(""), 0.1}};
  std::string text = t.to_csv();
  FeatureTable back = FeatureTable::from_csv(text);
  CHECK(back.essay_ids == t.essay_ids);
  CHECK(back.names == t.names);
  CHECK(back.columns[0][0] == 1.25);
  CHECK(std::isnan(back.columns[1][0]));
  CHECK(back.columns[1][1] == 0.1);
  CHECK(back.levels[1] == ScoreLevel::High);
  CHECK(back.to_csv() == text);
}

TEST_CASE("canonical lb feature names") {
  const auto& names = lb_feature_names();
  REQUIRE(names.size() == 24);
  CHECK(names.front() == "lb3_nonprompt");
  CHECK(names[20] == "lb9_total");
  CHECK(names[21] == "total_prompt");
  CHECK(names.back() == "total_overall");
  CHECK(lb_aggregate_names().size() == 3);
}
