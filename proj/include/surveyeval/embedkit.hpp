#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "surveyeval/component.hpp"
#include "surveyeval/error.hpp"

namespace surveyeval {

using Vector = Eigen::VectorXd;

inline constexpr double kUnitNormTolerance = 1e-6;

struct EmbeddingUnit {
  std::string survey_id;
  Component component = Component::outline;
  int index = 0;
  std::string text;
  Vector vector;

  bool operator==(const EmbeddingUnit& o) const {
    return survey_id == o.survey_id && component == o.component && index == o.index && text == o.text &&
           vector.size() == o.vector.size() && vector == o.vector;
  }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string model_id() const = 0;
  // One vector per text, same order. Throws Error(ProviderUnavailable).
  virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
};

// Embeds and L2-normalizes. `expected_dimension` pins the corpus
// dimensionality across calls.
std::vector<Vector> embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider,
                                std::optional<Eigen::Index> expected_dimension = std::nullopt);

template <typename Derived>
typename Derived::PlainObject normalized_or_throw(const Eigen::MatrixBase<Derived>& v) {
  auto squared = v.dot(v);
  if (!(squared > 0) || !std::isfinite(squared)) throw Error(ErrorCode::ZeroVector, "cannot normalize zero vector");
  return v / std::sqrt(squared);
}

// Cosine similarity. Identical inputs give exactly 1 and the result is
// symmetric in its arguments.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with different sizes");
  const Scalar aa = a.dot(a);
  const Scalar bb = b.dot(b);
  if (!(aa > 0) || !(bb > 0)) throw Error(ErrorCode::ZeroVector, "cosine of zero vector");
  const Scalar c = a.dot(b) / std::sqrt(aa * bb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

struct UnitKey {
  std::string survey_id;
  Component component;
  int index;

  auto operator<=>(const UnitKey&) const = default;
};

class VectorIndex {
 public:
  VectorIndex() = default;
  explicit VectorIndex(Eigen::Index dimension) : dimension_(dimension) {}

  // Validates dimension, unit norm and key uniqueness.
  void add(EmbeddingUnit unit);

  const EmbeddingUnit* find(const UnitKey& key) const;
  // Units of one survey and component, ordered by index.
  std::vector<const EmbeddingUnit*> units(std::string_view survey_id, Component component) const;

  std::size_t size() const { return units_.size(); }
  Eigen::Index dimension() const { return dimension_; }
  const std::map<UnitKey, EmbeddingUnit>& all() const { return units_; }

  bool operator==(const VectorIndex& o) const { return dimension_ == o.dimension_ && units_ == o.units_; }

 private:
  Eigen::Index dimension_ = 0;
  std::map<UnitKey, EmbeddingUnit> units_;
};

struct Match {
  int matched_index = 0;
  double similarity = 0.0;
};

// Exhaustive argmax-cosine; ties resolve to the lowest index.
Match nearest_match(const Vector& query, std::span<const EmbeddingUnit* const> candidates);

Match nearest_human_match(const EmbeddingUnit& unit, const VectorIndex& index, std::string_view human_survey_id);

// Binary v1 layout: "SEVIDXv1", u64 dimension, u64 unit count, 32-byte SHA-256
// of the record body, then records (u32 id length, id, u8 component, i64 index,
// u32 text length, text, dimension x f64). All integers little-endian.
std::string serialize_index(const VectorIndex& index);
VectorIndex deserialize_index(std::string_view bytes);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace surveyeval
