#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "uwfqa/errors.hpp"
#include "uwfqa/labels.hpp"
#include "uwfqa/manifest.hpp"

using namespace uwfqa;

namespace {

std::string header() { return std::string(kManifestHeader) + "\n"; }

DatasetManifest parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in);
}

}  // namespace

TEST(Labels, NamesRoundTrip) {
  for (auto a : kAllArtifacts) {
    EXPECT_EQ(artifact_from_name(name_of(a)), a);
  }
  EXPECT_FALSE(artifact_from_name("eyelash").has_value());
}

TEST(Labels, BitsAndMask) {
  const std::array<int, 6> bits{1, 0, 1, 1, 0, 1};
  const auto v = ArtifactLabelVector::from_bits(bits);
  EXPECT_EQ(v.to_bits(), bits);
  EXPECT_EQ(ArtifactLabelVector::from_mask(v.to_mask()), v);
  EXPECT_EQ(v.count(), 4u);
  EXPECT_TRUE(v[Artifact::kEyelashPresent]);
  EXPECT_FALSE(v[Artifact::kLowerEyelidObstructing]);
}

TEST(Labels, RejectsNonBinary) {
  const std::array<int, 6> bits{1, 0, 2, 0, 0, 0};
  EXPECT_THROW(ArtifactLabelVector::from_bits(bits), ValidationError);
  const std::array<int, 5> short_bits{1, 0, 1, 0, 0};
  EXPECT_THROW(ArtifactLabelVector::from_bits(short_bits), ValidationError);
}

TEST(Manifest, HeaderOnlyIsEmpty) {
  const auto m = parse(header());
  EXPECT_EQ(m.n_total(), 0u);
  for (auto c : m.class_positive_counts()) EXPECT_EQ(c, 0u);
}

TEST(Manifest, ReferenceCountsFixture) {
  // 243 rows whose per-class positives are 232, 41, 200, 83, 204, 99.
  const std::array<std::size_t, 6> counts{232, 41, 200, 83, 204, 99};
  std::ostringstream text;
  text << header();
  for (std::size_t i = 0; i < 243; ++i) {
    text << "r" << i << ",img/" << i << ".png";
    for (auto c : counts) text << "," << (i < c ? 1 : 0);
    text << ",\n";
  }
  const auto m = parse(text.str());
  EXPECT_EQ(m.n_total(), 243u);
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    EXPECT_EQ(m.class_positive_counts()[c], counts[c]) << name_of(kAllArtifacts[c]);
  }
}

TEST(Manifest, LabelTwoFailsAtItsRow) {
  // Rows are file lines; the header is row 1.
  const auto text = header() + "a,a.png,0,0,0,0,0,0,\n" + "b,b.png,0,2,0,0,0,0,\n";
  try {
    parse(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Manifest, DuplicateIdRejected) {
  const auto text = header() + "a,a.png,0,0,0,0,0,0,\n" + "a,b.png,0,0,0,0,0,0,\n";
  EXPECT_THROW(parse(text), ValidationError);
}

TEST(Manifest, WrongHeaderRejected) {
  EXPECT_THROW(parse("id,path,a,b,c,d,e,f,split\n"), ParseError);
}

TEST(Manifest, BadSplitRejected) {
  EXPECT_THROW(parse(header() + "a,a.png,0,0,0,0,0,0,holdout\n"), ParseError);
}

TEST(Manifest, QuotedFieldsAndCrlf) {
  const auto text = header() + "\"x,1\",\"dir/with \"\"quote\"\".png\",1,0,0,0,0,1,train\r\n";
  const auto m = parse(text);
  ASSERT_EQ(m.n_total(), 1u);
  EXPECT_EQ(m.records()[0].id, "x,1");
  EXPECT_EQ(m.records()[0].image_path, "dir/with \"quote\".png");
  EXPECT_EQ(m.records()[0].split, Split::kTrain);
}

TEST(Manifest, RenderParseRoundTrip) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto labels = testutil::random_labels(gen, gen() % 40);
    std::vector<ImageRecord> records;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto split = static_cast<Split>(gen() % 4);
      records.push_back({"id" + std::to_string(i) + (i % 3 == 0 ? ",q" : ""),
                         "images/" + std::to_string(i) + ".png", labels[i], split});
    }
    const DatasetManifest m(records);
    const auto again = parse(render_manifest(m));
    EXPECT_EQ(render_manifest(again), render_manifest(m));
    EXPECT_EQ(again.digest(), m.digest());
    EXPECT_EQ(again.class_positive_counts(), m.class_positive_counts());
  }
}

TEST(Manifest, SaveLoadResolvesAgainstItsDirectory) {
  testutil::TempDir dir;
  const DatasetManifest m({{"a", "sub/a.png", {}, Split::kTest}});
  save_manifest(m, dir / "m.csv");
  const auto loaded = load_manifest(dir / "m.csv");
  EXPECT_EQ(loaded.resolve(loaded.records()[0]), dir.path() / "sub/a.png");
  EXPECT_EQ(loaded.count(Split::kTest), 1u);
}
