#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cctb/cctb.hpp"

using namespace cctb;

namespace {

CampaignConfig small_merging(PolicyKind kind = PolicyKind::SafeTwoPhase) {
  CampaignConfig c;
  c.grid.x_a_values = {0, 20, 40};
  c.grid.x_f_values = {0, 10, 40};
  c.grid.repeats = 2;
  c.policy.kind = kind;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Seeds, MixingIsDeterministicAndSpreadsCells) {
  EXPECT_EQ(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 50; ++cell) {
    for (std::uint64_t r = 0; r < 10; ++r) seen.insert(mix_seed(7, cell, r));
  }
  EXPECT_EQ(seen.size(), 500u);
  // Reference value of the splitmix64 finalizer.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Campaign, GridShapeAndSafeVerdicts) {
  const CampaignRecord rec = run_campaign(small_merging());
  ASSERT_TRUE(rec.complete);
  ASSERT_EQ(rec.grids.size(), 1u);
  const GridRecord& g = rec.grids[0];
  EXPECT_EQ(g.x_a_values, (std::vector<double>{0, 20, 40, 45.7}));
  EXPECT_EQ(g.x_f_values, (std::vector<double>{0, 5.3, 10, 40}));
  EXPECT_EQ(g.cells.size(), 16u);
  for (const CellRecord& c : g.cells) {
    EXPECT_EQ(c.verdicts.size(), 2u);
    EXPECT_TRUE(is_safe(parse_verdict(c.result.dominant).category)) << c.result.dominant;
  }
  EXPECT_EQ(g.at(3, 1).result.dominant, "PS");
  EXPECT_EQ(g.at(0, 0).result.dominant, "CS");
  EXPECT_FALSE(has_unsafe_verdict(rec));
}

TEST(Campaign, ParallelRunsMatchSerialRuns) {
  CampaignConfig c = small_merging(PolicyKind::Noisy);
  c.policy.sigma = 0.15;
  c.grid.repeats = 3;
  const CampaignRecord a = run_campaign(c, 1);
  const CampaignRecord b = run_campaign(c, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(record_to_json(a, false).dump(), record_to_json(b, false).dump());
  EXPECT_EQ(b.runtime.jobs, 5);
}

TEST(Campaign, AggressivePolicyIsFlaggedUnsafe) {
  const CampaignRecord rec = run_campaign(small_merging(PolicyKind::Aggressive));
  EXPECT_TRUE(has_unsafe_verdict(rec));
  const ComparisonReport cmp = compare_record(rec, 70.0);
  EXPECT_EQ(cmp.cells.size(), 16u);
}

TEST(Campaign, RecordJsonRoundTrips) {
  CampaignConfig c = small_merging();
  c.refine.enabled = true;
  const CampaignRecord rec = run_campaign(c);
  ASSERT_FALSE(rec.refinements.empty());
  const CampaignRecord back = record_from_json(nlohmann::json::parse(record_to_json(rec).dump()));
  EXPECT_EQ(back, rec);
  EXPECT_EQ(back.runtime.jobs, rec.runtime.jobs);
  EXPECT_EQ(config_to_json(config_from_json(rec.config)), rec.config);
}

TEST(Campaign, RefinementBracketsTheArrivingBoundary) {
  CampaignConfig c = small_merging();
  c.refine.enabled = true;
  const CampaignRecord rec = run_campaign(c);
  const double x_a_hat = *rec.grids[0].critical.x_a_hat;
  bool found = false;
  for (const RefinementRecord& r : rec.refinements) {
    if (r.axis != Axis::XA || r.status != RefineStatus::Bracketed || r.fixed < 5.3) continue;
    found = true;
    EXPECT_LE(r.lo, x_a_hat + 1e-6);
    EXPECT_GE(r.hi, x_a_hat - c.refine.tol);
    EXPECT_LE(r.hi - r.lo, c.refine.tol);
  }
  EXPECT_TRUE(found);
}

TEST(Campaign, SpeedsAboveTheProfileAreRejectedBeforeRunning) {
  CampaignConfig c = small_merging();
  c.v_e_values = {0.0, 9.0};
  EXPECT_THROW(run_campaign(c), ConfigError);
}

TEST(Report, CsvHasHeaderRowsAndSnapshot) {
  const CampaignRecord rec = run_campaign(small_merging());
  const std::string csv = grid_to_csv(rec, rec.grids[0]);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x_a\\x_f,0,5.3,10,40");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0,CS(2/2),", 0), 0u) << line;
  EXPECT_NE(csv.find("# seed=3 config={"), std::string::npos);
  EXPECT_NE(csv.find("# v_e=0 x_e=0"), std::string::npos);
}

TEST(Report, AnsiUsesThePalette) {
  const CampaignRecord rec = run_campaign(small_merging(PolicyKind::Aggressive));
  const std::string ansi = grid_to_ansi(rec, rec.grids[0]);
  EXPECT_NE(ansi.find("\x1b[48;5;160m"), std::string::npos);
  EXPECT_EQ(palette_color(Category::PS), 34);
  EXPECT_EQ(palette_color(Category::Blk), 244);
  EXPECT_EQ(palette_color(Category::RouteFault), 91);
}

TEST(Report, AbsentArrivingRowIsLabelled) {
  CampaignConfig c;
  c.context.type = ConfigType::CrossLight;
  c.grid.x_f_values = {0, 40};
  c.grid.repeats = 1;
  const CampaignRecord rec = run_campaign(c);
  EXPECT_NE(grid_to_csv(rec, rec.grids[0]).find("\nnone,"), std::string::npos);
  const auto j = record_to_json(rec);
  EXPECT_TRUE(j["grids"][0]["x_a_values"][0].is_null());
}
