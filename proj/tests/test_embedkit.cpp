#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "surveyeval/digest.hpp"
#include "surveyeval/embedkit.hpp"
#include "surveyeval/mock.hpp"
#include "surveyeval/text.hpp"

using namespace surveyeval;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

EmbeddingUnit unit(std::string survey, Component c, int index, Vector v, std::string text = "t") {
  return EmbeddingUnit{std::move(survey), c, index, std::move(text), normalized_or_throw(v)};
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "surveyeval_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({0, 1})), 0.0);
  Vector d = vec({1, 1}) / std::sqrt(2.0);
  EXPECT_NEAR(cosine(d, vec({1, 0})), 0.7071, 1e-4);
}

TEST(Cosine, Errors) {
  try {
    cosine(vec({1, 0}), vec({1, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  try {
    cosine(vec({0, 0}), vec({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

TEST(Cosine, SymmetricAndExactOnSelf) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(16), b(16);
    for (int i = 0; i < 16; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
    EXPECT_NEAR(cosine(a, b), cosine(b, a), 1e-12);
    EXPECT_EQ(cosine(a, a), 1.0);
  }
}

TEST(EmbedTexts, MockDeterministicAndNormalized) {
  MockEmbeddingProvider p(3);
  std::vector<std::string> texts{"abc", "abc", "xyz"};
  auto v = embed_texts(texts, p);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_LT(cosine(v[0], v[2]), 1.0);
  for (const auto& x : v) EXPECT_NEAR(x.norm(), 1.0, 1e-6);
}

TEST(EmbedTexts, RejectsEmptyTextAndDimensionChange) {
  MockEmbeddingProvider p(3, 8);
  std::vector<std::string> empty{""};
  EXPECT_THROW(embed_texts(empty, p), Error);
  std::vector<std::string> texts{"a"};
  try {
    embed_texts(texts, p, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(VectorIndex, ValidatesUnits) {
  VectorIndex idx(2);
  idx.add(unit("h", Component::outline, 1, vec({1, 0})));
  try {
    idx.add(unit("h", Component::outline, 1, vec({0, 1})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
  }
  try {
    idx.add(unit("h", Component::outline, 2, vec({1, 0, 0})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(idx.add(EmbeddingUnit{"h", Component::outline, 3, "t", vec({2, 0})}), Error);
}

TEST(NearestHumanMatch, SelfMatch) {
  MockEmbeddingProvider p(5);
  VectorIndex idx(kMockDimension);
  const char* texts[] = {"alpha", "beta", "gamma"};
  for (int i = 0; i < 3; ++i) idx.add(EmbeddingUnit{"h", Component::content, i + 1, texts[i], p.embed_one(texts[i])});
  EmbeddingUnit g{"g", Component::content, 1, "beta", p.embed_one("beta")};
  auto m = nearest_human_match(g, idx, "h");
  EXPECT_EQ(m.matched_index, 2);
  EXPECT_EQ(m.similarity, 1.0);
}

TEST(NearestHumanMatch, SingleHumanUnit) {
  VectorIndex idx(2);
  idx.add(unit("h", Component::outline, 4, vec({0, 1})));
  auto m = nearest_human_match(unit("g", Component::outline, 1, vec({1, 0})), idx, "h");
  EXPECT_EQ(m.matched_index, 4);
  EXPECT_NEAR(m.similarity, 0.0, 1e-15);
}

TEST(NearestHumanMatch, BruteForceAgreement) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  auto random_vec = [&] {
    Vector v(8);
    for (int i = 0; i < 8; ++i) v[i] = g(rng);
    return v;
  };
  for (int trial = 0; trial < 100; ++trial) {
    VectorIndex idx(8);
    for (int i = 1; i <= 3; ++i) idx.add(unit("h", Component::reference, i, random_vec()));
    auto q = unit("g", Component::reference, 1, random_vec());
    int best = 0;
    double best_cos = -2.0;
    for (int i = 1; i <= 3; ++i) {
      const auto* h = idx.find(UnitKey{"h", Component::reference, i});
      double c = q.vector.dot(h->vector) / (q.vector.norm() * h->vector.norm());
      if (c > best_cos) {
        best_cos = c;
        best = i;
      }
    }
    auto m = nearest_human_match(q, idx, "h");
    EXPECT_EQ(m.matched_index, best);
    EXPECT_NEAR(m.similarity, best_cos, 1e-12);
  }
}

TEST(NearestHumanMatch, TieGoesToLowestIndex) {
  VectorIndex idx(2);
  idx.add(unit("h", Component::outline, 7, vec({1, 0})));
  idx.add(unit("h", Component::outline, 3, vec({1, 0})));
  auto m = nearest_human_match(unit("g", Component::outline, 1, vec({1, 0})), idx, "h");
  EXPECT_EQ(m.matched_index, 3);
}

TEST(NearestHumanMatch, EmptyHumanSide) {
  VectorIndex idx(2);
  idx.add(unit("h", Component::outline, 1, vec({1, 0})));
  try {
    nearest_human_match(unit("g", Component::content, 1, vec({1, 0})), idx, "h");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyHumanSide);
  }
}

TEST(IndexFile, RoundTripAndStableBytes) {
  MockEmbeddingProvider p(9, 32);
  VectorIndex idx(32);
  for (int i = 1; i <= 10; ++i) {
    auto t = "unit text " + std::to_string(i);
    idx.add(EmbeddingUnit{i % 2 ? "a" : "b", kComponents[i % 3], i, t, p.embed_one(t)});
  }
  auto path = temp_path("roundtrip.bin");
  save_index(idx, path);
  auto first = text::read_file(path);
  save_index(idx, path);
  EXPECT_EQ(sha256_hex(first), sha256_hex(text::read_file(path)));
  auto back = load_index(path);
  EXPECT_EQ(back.size(), idx.size());
  EXPECT_TRUE(back == idx);
}

TEST(IndexFile, TruncatedAndCorrupted) {
  VectorIndex idx(2);
  idx.add(unit("h", Component::outline, 1, vec({1, 0})));
  auto bytes = serialize_index(idx);
  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      deserialize_index(std::string_view(bytes).substr(0, cut));
      FAIL() << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CorruptIndex);
    }
  }
  auto flipped = bytes;
  flipped.back() ^= 0x01;
  try {
    deserialize_index(flipped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptIndex);
  }
}

TEST(IndexFile, MissingFile) {
  try {
    load_index(temp_path("does-not-exist.bin"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
  }
}
