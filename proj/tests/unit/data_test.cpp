#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "coldrec/data/csv.hpp"
#include "coldrec/data/dataset.hpp"
#include "coldrec/data/split.hpp"
#include "coldrec/data/synth.hpp"

namespace coldrec::data {
namespace {

namespace fs = std::filesystem;

Manifest scale_1_5() {
  Manifest m;
  m.scale = {1.0, 5.0};
  return m;
}

Dataset parse(const std::string& text, const Manifest& m = scale_1_5()) {
  std::istringstream in(text);
  return parse_interactions(in, m);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coldrec_data_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Csv, QuotedFields) {
  const auto f = split_csv_line("a,\"b,c\",\"say \"\"hi\"\"\",\r", 3);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "say \"hi\"");
  EXPECT_EQ(f[3], "");
}

TEST(Csv, UnterminatedQuoteNamesLine) {
  try {
    split_csv_line("a,\"b", 7);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
}

TEST(Csv, FieldRoundTrip) {
  for (const std::string v : {"plain", "with,comma", "q\"uote", ""}) {
    const auto f = split_csv_line(csv_record({v, "x"}), 1);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f[0], v);
  }
}

TEST(Interactions, ParsesAndNormalizes) {
  const Dataset d = parse("user_id,item_id,rating,timestamp\nu1,i1,5,100\nu2,i1,1,\nu1,i2,3,\n");
  ASSERT_EQ(d.interactions.size(), 3u);
  EXPECT_EQ(d.users.size(), 2u);
  EXPECT_EQ(d.items.size(), 2u);
  EXPECT_EQ(d.interactions[0].normalized, 1.0);
  EXPECT_EQ(d.interactions[1].normalized, 0.0);
  EXPECT_EQ(d.interactions[2].normalized, 0.5);
  EXPECT_EQ(d.interactions[0].timestamp, 100);
  EXPECT_FALSE(d.interactions[1].timestamp.has_value());
}

TEST(Interactions, EmptyFileRejected) {
  EXPECT_THROW(parse(""), LoadError);
  EXPECT_THROW(parse("user_id,item_id,rating,timestamp\n"), LoadError);
}

TEST(Interactions, OutOfScaleRatingNamesLine) {
  try {
    parse("user_id,item_id,rating,timestamp\nu1,i1,4,\nu1,i2,6,\n");
    FAIL();
  } catch (const ScaleError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Interactions, UnknownColumnRejected) {
  try {
    parse("user_id,item_id,score,timestamp\nu1,i1,4,\n");
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("score"), std::string::npos);
  }
}

TEST(Interactions, MalformedRowsRejected) {
  const std::string h = "user_id,item_id,rating,timestamp\n";
  EXPECT_THROW(parse(h + "u1,i1,4\n"), LoadError);
  EXPECT_THROW(parse(h + "u1,i1,four,\n"), LoadError);
  EXPECT_THROW(parse(h + "u1,i1,4,1.5\n"), LoadError);
  EXPECT_THROW(parse(h + ",i1,4,\n"), LoadError);
  EXPECT_THROW(parse(h + "u1,i1,nan,\n"), LoadError);
}

TEST(Interactions, DuplicateKeepsLaterRatingInFirstPosition) {
  const Dataset d = parse("user_id,item_id,rating,timestamp\nu1,i1,2,\nu2,i1,3,\nu1,i1,4,\n");
  ASSERT_EQ(d.interactions.size(), 2u);
  EXPECT_EQ(d.duplicate_rows, 1u);
  EXPECT_EQ(d.users.id(d.interactions[0].user), "u1");
  EXPECT_EQ(d.interactions[0].rating, 4.0);
}

TEST(Interactions, CsvRoundTrip) {
  const Dataset d = parse("user_id,item_id,rating,timestamp\nu1,i1,2.125,7\nu2,i1,3,\n");
  const Dataset e = parse(interactions_to_csv(d));
  EXPECT_EQ(d.interactions, e.interactions);
  EXPECT_EQ(interactions_to_csv(d), interactions_to_csv(e));
}

TEST(Manifest, JsonRoundTripAndRejections) {
  Manifest m = scale_1_5();
  m.side_columns = {SideColumn{"age", false, {}}, SideColumn{"tier", true, {"a", "b", "c"}}};
  m.description = "x";
  EXPECT_EQ(manifest_from_json(to_json(m)), m);
  EXPECT_EQ(m.side_width(), 4u);
  EXPECT_THROW(manifest_from_json(Json{{"rating_scale", {5, 1}}}), ConfigError);
  EXPECT_THROW(manifest_from_json(Json{{"rating_scale", {1, 5}}, {"extra", 1}}), ConfigError);
  EXPECT_THROW(manifest_from_json(Json{{"side_features", {{{"name", "t"}, {"type", "categorical"}}}}}),
               ConfigError);
}

TEST(SideFeatures, OneHotAndNewEntities) {
  Manifest m = scale_1_5();
  m.side_columns = {SideColumn{"age", false, {}}, SideColumn{"tier", true, {"a", "b", "c"}}};
  Dataset d = parse("user_id,item_id,rating,timestamp\nu1,i1,2,\n", m);
  std::istringstream in(
      "entity_id,kind,age,tier\nu1,user,30,b\nu9,user,1.5,a\ni1,item,0,c\n");
  parse_side_features(in, d);
  ASSERT_EQ(d.users.size(), 2u);
  EXPECT_EQ(d.user_side[d.users.index("u1")], (Vector{30, 0, 1, 0}));
  EXPECT_EQ(d.user_side[d.users.index("u9")], (Vector{1.5, 1, 0, 0}));
  EXPECT_EQ(d.item_side[0], (Vector{0, 0, 0, 1}));
  EXPECT_EQ(d.users.id(d.interactions[0].user), "u1");
}

TEST(SideFeatures, Rejections) {
  Manifest m = scale_1_5();
  m.side_columns = {SideColumn{"tier", true, {"a", "b"}}};
  const std::string rows = "user_id,item_id,rating,timestamp\nu1,i1,2,\n";
  auto attempt = [&](const std::string& side) {
    Dataset d = parse(rows, m);
    std::istringstream in(side);
    parse_side_features(in, d);
  };
  EXPECT_THROW(attempt("entity_id,kind,tier\nu1,user,z\ni1,item,a\n"), LoadError);
  EXPECT_THROW(attempt("entity_id,kind,tier\nu1,user,a\n"), LoadError);
  EXPECT_THROW(attempt("entity_id,kind,tier\nu1,robot,a\ni1,item,a\n"), LoadError);
  EXPECT_THROW(attempt("entity_id,kind,color\nu1,user,a\ni1,item,a\n"), LoadError);
  EXPECT_THROW(attempt("entity_id,kind,tier\nu1,user,a\nu1,user,b\ni1,item,a\n"), LoadError);
}

TEST(KFold, SizesFor82InFive) {
  const auto a = kfold_split(82, 5, 1);
  EXPECT_EQ(a.sizes(), (std::vector<std::size_t>{17, 17, 16, 16, 16}));
}

TEST(KFold, PartitionProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 10 + seed * 7;
    const std::size_t folds = 2 + seed % 6;
    const auto a = kfold_split(n, folds, seed);
    std::vector<int> hits(n, 0);
    for (std::size_t f = 0; f < folds; ++f) {
      const auto in = a.members(f);
      const auto out = a.complement(f);
      EXPECT_EQ(in.size() + out.size(), n);
      for (std::size_t k : in) ++hits[k];
      const auto s = a.sizes();
      EXPECT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1u);
    }
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST(KFold, LeaveOneOut) {
  const auto a = kfold_split(9, 9, 3);
  EXPECT_EQ(a.sizes(), std::vector<std::size_t>(9, 1));
}

TEST(KFold, TooManyFoldsRejected) {
  EXPECT_THROW(kfold_split(4, 5, 0), ArgumentError);
  EXPECT_THROW(kfold_split(4, 1, 0), ArgumentError);
}

TEST(KFold, DeterministicAndSeedSensitive) {
  EXPECT_EQ(kfold_split(100, 4, 9).fold_of, kfold_split(100, 4, 9).fold_of);
  EXPECT_NE(kfold_split(100, 4, 9).fold_of, kfold_split(100, 4, 10).fold_of);
}

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  return s;
}

TEST(Synth, FullDensityGrid) {
  SynthSpec s;
  s.users = 5;
  s.items = 4;
  s.density = 1.0;
  const auto r = synth_generate(s);
  EXPECT_EQ(r.bundle.dataset.interactions.size(), 20u);
}

TEST(Synth, CountConcentratesAndIsFixedBySeed) {
  SynthSpec s;
  s.users = 200;
  s.items = 300;
  s.density = 0.02;
  s.seed = 7;
  const auto a = synth_generate(s);
  const std::size_t n = a.bundle.dataset.interactions.size();
  EXPECT_GE(n, 1080u);
  EXPECT_LE(n, 1320u);
  EXPECT_EQ(synth_generate(s).bundle.dataset.interactions.size(), n);
}

TEST(Synth, CountsStayNearExpectationAcrossSeeds) {
  // Binomial(60000, 0.02): mean 1200, sd about 34.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto n = synth_generate(small_spec(seed)).bundle.dataset.interactions.size();
    EXPECT_GE(n, 1080u) << seed;
    EXPECT_LE(n, 1320u) << seed;
  }
}

TEST(Synth, RatingsOnScaleAndEntitiesComplete) {
  const auto r = synth_generate(small_spec(3));
  const Dataset& d = r.bundle.dataset;
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& x : d.interactions) {
    EXPECT_TRUE(d.manifest.scale.contains(x.rating));
    EXPECT_NEAR(x.normalized, d.manifest.scale.normalize(x.rating), 1e-15);
    EXPECT_TRUE(pairs.emplace(x.user, x.item).second);
  }
  EXPECT_EQ(r.bundle.embeddings.size(), 2 * (d.users.size() + d.items.size()));
  EXPECT_EQ(d.user_side.size(), d.users.size());
  EXPECT_EQ(d.item_side.size(), d.items.size());
  EXPECT_EQ(r.user_latents.rows(), d.users.size());
}

TEST(Synth, PositivesCarryPreferenceSignal) {
  // Observed pairs should have a higher mean latent affinity than random pairs.
  const auto r = synth_generate(small_spec(5));
  const Dataset& d = r.bundle.dataset;
  double observed = 0.0;
  for (const auto& x : d.interactions) {
    observed += dot(r.user_latents.row(x.user), r.item_latents.row(x.item));
  }
  observed /= static_cast<double>(d.interactions.size());
  double all = 0.0;
  for (std::size_t u = 0; u < d.users.size(); ++u) {
    for (std::size_t i = 0; i < d.items.size(); ++i) {
      all += dot(r.user_latents.row(u), r.item_latents.row(i));
    }
  }
  all /= static_cast<double>(d.users.size() * d.items.size());
  EXPECT_GT(observed, all + 0.5);
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec s;
  s.density = 0.0;
  EXPECT_THROW(synth_generate(s), ArgumentError);
  s = SynthSpec{};
  s.users = 1;
  EXPECT_THROW(synth_generate(s), ArgumentError);
  EXPECT_THROW(synth_spec_from_json(Json{{"density", 1.5}}), ConfigError);
  EXPECT_THROW(synth_spec_from_json(Json{{"dense", 0.5}}), ConfigError);
}

TEST(Synth, SpecJsonRoundTrip) {
  SynthSpec s;
  s.users = 11;
  s.density = 0.125;
  s.side_features = false;
  s.seed = 99;
  const SynthSpec t = synth_spec_from_json(to_json(s));
  EXPECT_EQ(to_json(t), to_json(s));
}

TEST(Synth, DirectoryIsByteIdenticalAndLoadsBack) {
  SynthSpec s;
  s.users = 30;
  s.items = 40;
  s.density = 0.2;
  s.seed = 11;
  const auto a = scratch("a");
  const auto b = scratch("b");
  write_synth_dir(synth_generate(s), s, a.string());
  write_synth_dir(synth_generate(s), s, b.string());
  for (const char* f : {"manifest.json", "interactions.csv", "side_features.csv", "embeddings.jsonl",
                        "latents.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto original = synth_generate(s);
  const DatasetBundle loaded = load_dataset_dir(a.string());
  EXPECT_EQ(loaded.dataset.interactions, original.bundle.dataset.interactions);
  EXPECT_EQ(loaded.dataset.users, original.bundle.dataset.users);
  EXPECT_EQ(loaded.dataset.user_side, original.bundle.dataset.user_side);
  EXPECT_EQ(loaded.dataset.item_side, original.bundle.dataset.item_side);
  EXPECT_EQ(loaded.embeddings, original.bundle.embeddings);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Synth, DifferentSeedsDiffer) {
  EXPECT_NE(interactions_to_csv(synth_generate(small_spec(1)).bundle.dataset),
            interactions_to_csv(synth_generate(small_spec(2)).bundle.dataset));
}

class ColdStart : public ::testing::Test {
 protected:
  static const Dataset& data() {
    static const Dataset d = synth_generate(small_spec(21)).bundle.dataset;
    return d;
  }
};

TEST_F(ColdStart, ThirtyPercentOfTwoHundred) {
  const auto s = build_cold_start_scenario(data(), 0.3, 0.0, 4);
  EXPECT_EQ(s.cold.users.size(), 60u);
  EXPECT_TRUE(s.cold.items.empty());
}

TEST_F(ColdStart, ColdUsersAbsentFromTrainAndPresentInTest) {
  const auto s = build_cold_start_scenario(data(), 0.3, 0.1, 4);
  const std::set<std::size_t> cu(s.cold.users.begin(), s.cold.users.end());
  const std::set<std::size_t> ci(s.cold.items.begin(), s.cold.items.end());
  for (std::size_t k : s.train) {
    EXPECT_FALSE(cu.count(data().interactions[k].user));
    EXPECT_FALSE(ci.count(data().interactions[k].item));
  }
  std::set<std::size_t> tested_users, tested_items;
  for (std::size_t k : s.test) {
    tested_users.insert(data().interactions[k].user);
    tested_items.insert(data().interactions[k].item);
  }
  for (std::size_t u : cu) EXPECT_TRUE(tested_users.count(u));
  for (std::size_t i : ci) EXPECT_TRUE(tested_items.count(i));
}

TEST_F(ColdStart, TrainAndTestPartitionInteractions) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = build_cold_start_scenario(data(), 0.2, 0.2, seed);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(data().interactions.size());
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(all, expected);
  }
}

TEST_F(ColdStart, ZeroFractionsGiveEightyTwenty) {
  const auto s = build_cold_start_scenario(data(), 0.0, 0.0, 4);
  const std::size_t n = data().interactions.size();
  EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n))));
  EXPECT_EQ(s.train.size() + s.test.size(), n);
}

TEST_F(ColdStart, FractionOutOfRangeRejected) {
  EXPECT_THROW(build_cold_start_scenario(data(), 0.95, 0.0, 1), ArgumentError);
  EXPECT_THROW(build_cold_start_scenario(data(), -0.1, 0.0, 1), ArgumentError);
}

TEST_F(ColdStart, FoldsShareColdEntitiesAndCoverWarmOnce) {
  const auto folds = cold_start_folds(data(), 0.3, 0.0, 3, 8);
  ASSERT_EQ(folds.size(), 3u);
  std::vector<int> warm_tests(data().interactions.size(), 0);
  const std::set<std::size_t> cu(folds[0].cold.users.begin(), folds[0].cold.users.end());
  for (const auto& f : folds) {
    EXPECT_EQ(f.cold.users, folds[0].cold.users);
    EXPECT_EQ(f.train.size() + f.test.size(), data().interactions.size());
    for (std::size_t k : f.train) EXPECT_FALSE(cu.count(data().interactions[k].user));
    for (std::size_t k : f.test) {
      if (!cu.count(data().interactions[k].user)) ++warm_tests[k];
    }
  }
  for (std::size_t k = 0; k < warm_tests.size(); ++k) {
    if (!cu.count(data().interactions[k].user)) EXPECT_EQ(warm_tests[k], 1) << k;
  }
}

TEST_F(ColdStart, Deterministic) {
  const auto a = build_cold_start_scenario(data(), 0.3, 0.0, 17);
  const auto b = build_cold_start_scenario(data(), 0.3, 0.0, 17);
  EXPECT_EQ(a.cold.users, b.cold.users);
  EXPECT_EQ(a.train, b.train);
}

}  // namespace
}  // namespace coldrec::data
