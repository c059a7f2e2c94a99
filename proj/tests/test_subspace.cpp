#include "projdebias/subspace.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "projdebias/default_data.hpp"
#include "projdebias/error.hpp"
#include "support/linear_stub.hpp"

using namespace projdebias;
using projdebias::testing::LinearStubEncoder;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_same_basis(const Basis& a, const Basis& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a.weights[i], b.weights[i], tol);
    for (std::size_t k = 0; k < a.dim(); ++k) EXPECT_NEAR(a.vectors[i][k], b.vectors[i][k], tol);
  }
}

}  // namespace

TEST(Subspace, SegmentSplitting) {
  EXPECT_EQ(split_segments("he came. it was late."), (std::pair<std::string, std::string>{"he came.", " it was late."}));
  EXPECT_EQ(split_segments("he came."), (std::pair<std::string, std::string>{"he came.", "he came."}));
  EXPECT_EQ(split_segments("no terminator"), (std::pair<std::string, std::string>{"no terminator", "no terminator"}));
}

TEST(Subspace, SentRecoversGenderAxis) {
  const LinearStubEncoder stub;
  const GenderSubspace s = estimate_subspace(stub, default_gender_pairs(), Location::sent(), 1);
  ASSERT_EQ(s.basis.size(), 1u);
  EXPECT_GT(s.basis.vectors[0][0], 0.999);
  EXPECT_GT(s.basis.weights[0], 0.99);
  EXPECT_NO_THROW(s.basis.validate());
}

TEST(Subspace, AttentionHeadWithGenderAxisIsExact) {
  const LinearStubEncoder stub;
  const GenderSubspace s = estimate_subspace(stub, default_gender_pairs(), Location::penult_attn(0, AttnRole::Key), 1);
  EXPECT_NEAR(s.basis.vectors[0][0], 1.0, 1e-12);
  EXPECT_NEAR(s.basis.vectors[0][1], 0.0, 1e-12);
  EXPECT_NEAR(s.basis.weights[0], 1.0, 1e-12);
}

TEST(Subspace, DifferenceRowCounts) {
  const LinearStubEncoder stub;
  const GenderPairSet one{{"he walked into the room. it was late.", "she walked into the room. it was late."}};
  EXPECT_EQ(collect_differences(stub, one, Location::sent()).rows(), 1u);
  EXPECT_EQ(collect_differences(stub, one, Location::final_cls()).rows(), 1u);
  // [CLS] he walked into the room . [SEP] it was late . [SEP]
  EXPECT_EQ(collect_differences(stub, one, Location::penult_tokens()).rows(), 13u);
  const GenderPairSet three{one[0], one[0], {"the boy ran.", "the girl ran."}};
  // 13 + 13 + 11, a single sentence fills both segments
  const Matrix rows = collect_differences(stub, three, Location::penult_attn(1, AttnRole::Value));
  EXPECT_EQ(rows.rows(), 37u);
  EXPECT_EQ(rows.cols(), 2u);
}

TEST(Subspace, PairLengthMismatch) {
  const LinearStubEncoder stub;
  const GenderPairSet pairs{{"he ran.", "she ran."}, {"the man ran.", "she ran."}};
  try {
    collect_differences(stub, pairs, Location::sent());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("pair length mismatch at pair 1"), std::string::npos) << e.what();
  }
}

TEST(Subspace, DimensionLimits) {
  const LinearStubEncoder stub;
  const auto pairs = default_gender_pairs();
  EXPECT_THROW(estimate_subspace(stub, pairs, Location::sent(), 2), Error);
  EXPECT_THROW(estimate_subspace(stub, pairs, Location::penult_attn(0, AttnRole::Query), 2), Error);
  EXPECT_THROW(estimate_subspace(stub, pairs, Location::final_cls(), 3), Error);
  EXPECT_THROW(estimate_subspace(stub, pairs, Location::penult_attn(2, AttnRole::Query), 1), Error);
  EXPECT_EQ(estimate_subspace(stub, pairs, Location::final_cls(), 2).basis.size(), 2u);
}

TEST(Subspace, SwapAndDuplicateInvariance) {
  const LinearStubEncoder stub;
  const GenderPairSet pairs = default_gender_pairs();
  GenderPairSet swapped;
  GenderPairSet doubled = pairs;
  for (const auto& p : pairs) {
    swapped.push_back({p.female, p.male});
    doubled.push_back(p);
  }
  for (const auto& [loc, dims] : grid_locations(stub.shape())) {
    const Basis base = estimate_subspace(stub, pairs, loc, dims).basis;
    expect_same_basis(base, estimate_subspace(stub, swapped, loc, dims).basis, 1e-9);
    expect_same_basis(base, estimate_subspace(stub, doubled, loc, dims).basis, 1e-9);
  }
}

TEST(Subspace, GridLocations) {
  EXPECT_EQ(grid_locations({64, 4, 16, 4}).size(), 15u);
  const auto locs = grid_locations({4, 2, 2, 2});
  ASSERT_EQ(locs.size(), 9u);
  EXPECT_EQ(locs[0].first.key(), "sent");
  EXPECT_EQ(locs[0].second, 1u);
  EXPECT_EQ(locs[1].first.key(), "final_cls");
  EXPECT_EQ(locs[1].second, 2u);
  EXPECT_EQ(locs[2].first.key(), "penult_tokens");
  EXPECT_EQ(locs[3].first.key(), "penult_attn.h0.k");
  EXPECT_EQ(locs[8].first.key(), "penult_attn.h1.v");
}

TEST(Subspace, LocationKeysRoundTrip) {
  for (const auto& [loc, dims] : grid_locations({64, 4, 16, 4})) EXPECT_EQ(Location::parse(loc.key()), loc);
  EXPECT_THROW(Location::parse("penult_attn.h0.x"), Error);
  EXPECT_THROW(Location::parse("cls"), Error);
}

TEST(Subspace, EstimateAllMatchesSingleEstimates) {
  const LinearStubEncoder stub;
  const auto pairs = default_gender_pairs();
  const SubspaceSet all = estimate_all(stub, pairs);
  ASSERT_EQ(all.size(), 9u);
  for (const auto& [loc, dims] : grid_locations(stub.shape())) {
    expect_same_basis(all.at(loc).basis, estimate_subspace(stub, pairs, loc, dims).basis, 1e-12);
  }
}

TEST(Subspace, CacheRoundTripIsByteIdentical) {
  const fs::path dir = fs::temp_directory_path() / "projdebias_subspace_cache";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const LinearStubEncoder stub;
  const SubspaceSet all = estimate_all(stub, default_gender_pairs());
  all.save(dir / "a.manifest", {{"seed", "3"}});
  const SubspaceSet loaded = SubspaceSet::load(dir / "a.manifest");
  ASSERT_EQ(loaded.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(loaded.items()[i].location, all.items()[i].location);
    EXPECT_EQ(loaded.items()[i].basis.vectors, all.items()[i].basis.vectors);
    EXPECT_EQ(loaded.items()[i].basis.weights, all.items()[i].basis.weights);
  }
  loaded.save(dir / "b.manifest", {{"seed", "3"}});
  EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
  EXPECT_THROW(SubspaceSet().at(Location::sent()), Error);
  fs::remove_all(dir);
}

TEST(Subspace, PairFileErrorsNameTheLine) {
  const fs::path path = fs::temp_directory_path() / "projdebias_pairs_bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"male": "he ran.", "female": "she ran."})" << "\n";
    out << R"({"male": "he ran.", "female": )" << "\n";
  }
  try {
    load_gender_pairs(path);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  save_gender_pairs(path, default_gender_pairs());
  const auto back = load_gender_pairs(path);
  ASSERT_EQ(back.size(), 40u);
  EXPECT_EQ(back[3].female, default_gender_pairs()[3].female);
  fs::remove(path);
}
