#include "surveyeval/embedkit.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>

#include "surveyeval/digest.hpp"
#include "surveyeval/text.hpp"

namespace surveyeval {

namespace {

constexpr std::string_view kMagic = "SEVIDXv1";
constexpr std::size_t kHeaderSize = 8 + 8 + 8 + 32;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::CorruptIndex, "index file truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(Component c) {
  switch (c) {
    case Component::outline: return "outline";
    case Component::content: return "content";
    case Component::reference: return "reference";
  }
  return "unknown";
}

Component component_from_string(std::string_view s) {
  if (s == "outline") return Component::outline;
  if (s == "content") return Component::content;
  if (s == "reference") return Component::reference;
  throw Error(ErrorCode::InvalidConfig, "unknown component '" + std::string(s) + "'");
}

std::vector<Vector> embed_texts(std::span<const std::string> texts, EmbeddingProvider& provider,
                                std::optional<Eigen::Index> expected_dimension) {
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw Error(ErrorCode::PreconditionViolation, "cannot embed an empty text");
  }
  if (texts.empty()) return {};
  auto raw = provider.embed(texts);
  if (raw.size() != texts.size()) {
    throw Error(ErrorCode::ProviderUnavailable, "provider returned " + std::to_string(raw.size()) +
                                                    " vectors for " + std::to_string(texts.size()) + " texts");
  }
  Eigen::Index dim = expected_dimension.value_or(raw.front().size());
  std::vector<Vector> out;
  out.reserve(raw.size());
  for (const auto& v : raw) {
    if (v.size() != dim || dim == 0) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected dimension " + std::to_string(dim) + ", provider returned " + std::to_string(v.size()));
    }
    out.push_back(normalized_or_throw(v));
  }
  return out;
}

void VectorIndex::add(EmbeddingUnit unit) {
  if (unit.vector.size() == 0) throw Error(ErrorCode::ZeroVector, "empty vector for " + unit.survey_id);
  if (dimension_ == 0) dimension_ = unit.vector.size();
  if (unit.vector.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "unit " + unit.survey_id + " has dimension " +
                                                  std::to_string(unit.vector.size()) + ", index has " +
                                                  std::to_string(dimension_));
  }
  double norm = unit.vector.norm();
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "zero vector for " + unit.survey_id);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::PreconditionViolation, "stored vectors must be unit-normalized");
  }
  UnitKey key{unit.survey_id, unit.component, unit.index};
  auto [it, inserted] = units_.try_emplace(std::move(key), std::move(unit));
  if (!inserted) {
    throw Error(ErrorCode::DuplicateId, "duplicate unit " + it->first.survey_id + "/" +
                                            std::string(to_string(it->first.component)) + "/" +
                                            std::to_string(it->first.index));
  }
}

const EmbeddingUnit* VectorIndex::find(const UnitKey& key) const {
  auto it = units_.find(key);
  return it == units_.end() ? nullptr : &it->second;
}

std::vector<const EmbeddingUnit*> VectorIndex::units(std::string_view survey_id, Component component) const {
  std::vector<const EmbeddingUnit*> out;
  UnitKey lo{std::string(survey_id), component, std::numeric_limits<int>::min()};
  for (auto it = units_.lower_bound(lo); it != units_.end(); ++it) {
    if (it->first.survey_id != survey_id || it->first.component != component) break;
    out.push_back(&it->second);
  }
  return out;
}

Match nearest_match(const Vector& query, std::span<const EmbeddingUnit* const> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyHumanSide, "no candidate units to match against");
  Match best{candidates.front()->index, cosine(query, candidates.front()->vector)};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    double s = cosine(query, candidates[i]->vector);
    if (s > best.similarity || (s == best.similarity && candidates[i]->index < best.matched_index)) {
      best = {candidates[i]->index, s};
    }
  }
  return best;
}

Match nearest_human_match(const EmbeddingUnit& unit, const VectorIndex& index, std::string_view human_survey_id) {
  auto human = index.units(human_survey_id, unit.component);
  if (human.empty()) {
    throw Error(ErrorCode::EmptyHumanSide, "no " + std::string(to_string(unit.component)) + " units for survey " +
                                               std::string(human_survey_id));
  }
  return nearest_match(unit.vector, human);
}

std::string serialize_index(const VectorIndex& index) {
  Writer body;
  for (const auto& [key, unit] : index.all()) {
    body.str(unit.survey_id);
    body.u8(static_cast<std::uint8_t>(unit.component));
    body.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(unit.index)));
    body.str(unit.text);
    for (Eigen::Index i = 0; i < unit.vector.size(); ++i) body.f64(unit.vector[i]);
  }
  Sha256 h;
  h.update(body.bytes());
  auto checksum = h.finish();

  Writer out;
  out.bytes().append(kMagic);
  out.u64(static_cast<std::uint64_t>(index.dimension()));
  out.u64(index.size());
  out.bytes().append(reinterpret_cast<const char*>(checksum.data()), checksum.size());
  out.bytes().append(body.bytes());
  return std::move(out.bytes());
}

VectorIndex deserialize_index(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::CorruptIndex, "bad index header");
  }
  Reader header(bytes.substr(kMagic.size(), 16));
  auto dimension = header.u64();
  auto count = header.u64();
  auto stored = bytes.substr(24, 32);
  auto body = bytes.substr(kHeaderSize);
  Sha256 h;
  h.update(body);
  auto actual = h.finish();
  if (std::memcmp(actual.data(), stored.data(), actual.size()) != 0) {
    throw Error(ErrorCode::CorruptIndex, "index checksum mismatch");
  }

  VectorIndex index(static_cast<Eigen::Index>(dimension));
  Reader r(body);
  for (std::uint64_t n = 0; n < count; ++n) {
    EmbeddingUnit unit;
    unit.survey_id = r.str();
    auto c = r.u8();
    if (c > 2) throw Error(ErrorCode::CorruptIndex, "bad component tag");
    unit.component = static_cast<Component>(c);
    unit.index = static_cast<int>(static_cast<std::int64_t>(r.u64()));
    unit.text = r.str();
    unit.vector.resize(static_cast<Eigen::Index>(dimension));
    for (std::uint64_t i = 0; i < dimension; ++i) unit.vector[static_cast<Eigen::Index>(i)] = r.f64();
    try {
      index.add(std::move(unit));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptIndex, e.what());
    }
  }
  if (!r.done()) throw Error(ErrorCode::CorruptIndex, "trailing bytes after last record");
  return index;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  text::write_file(path, serialize_index(index));
}

VectorIndex load_index(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return deserialize_index(text::read_file(path));
}

}  // namespace surveyeval
