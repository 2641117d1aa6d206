#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "skillrank/datastore.hpp"
#include "test_support.hpp"

using namespace skillrank;

namespace {

std::vector<std::uint8_t> header(std::uint32_t rows, std::uint32_t dim) {
  std::vector<std::uint8_t> b = {'S', 'K', 'F', '1'};
  for (std::uint32_t v : {rows, dim}) {
    for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  return b;
}

void push_float(std::vector<std::uint8_t>& b, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

FeatureSequence seq(const std::string& id, Modality m, std::size_t rows, std::size_t dim,
                    float base = 0.0f) {
  std::vector<float> v(rows * dim);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = base + static_cast<float>(k);
  return FeatureSequence(id, m, dim, v);
}

// Writes a manifest with `videos` videos; each gets a spatial and temporal file.
std::filesystem::path make_manifest(const TempDir& dir, std::size_t videos,
                                    std::size_t spatial_dim = 4) {
  Manifest m;
  m.task_id = "task";
  m.modalities = {Modality::kSpatial, Modality::kTemporal};
  m.base_dir = dir.path();
  for (std::size_t v = 0; v < videos; ++v) {
    const std::string id = "vid" + std::to_string(v);
    ManifestVideo mv;
    mv.id = id;
    for (Modality mod : m.modalities) {
      const std::string rel = "f/" + id + "." + std::string(modality_name(mod));
      write_feature_sequence(dir / rel, seq(id, mod, 5, mod == Modality::kSpatial ? spatial_dim : 3,
                                            static_cast<float>(v)));
      mv.files[mod] = rel;
    }
    mv.score = static_cast<double>(v);
    m.videos.push_back(mv);
  }
  write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

}  // namespace

TEST_CASE("decode: 3x2 header with 6 finite values gives 3 rows") {
  auto b = header(3, 2);
  for (int k = 0; k < 6; ++k) push_float(b, 0.5f * static_cast<float>(k));
  const auto s = decode_feature_sequence(b, "a", Modality::kSpatial);
  CHECK(s.rows() == 3);
  CHECK(s.dim() == 2);
  CHECK(s.row(2)[1] == doctest::Approx(2.5));
}

TEST_CASE("decode: header rows=3 but only 4 values is a truncation error") {
  auto b = header(3, 2);
  for (int k = 0; k < 4; ++k) push_float(b, 1.0f);
  try {
    decode_feature_sequence(b, "a", Modality::kSpatial);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.code() == ErrorCode::kTruncatedPayload);
    CHECK(e.offset() == b.size());
  }
}

TEST_CASE("decode: NaN reports its row and byte offset") {
  auto b = header(3, 2);
  for (int k = 0; k < 6; ++k) {
    push_float(b, k == 3 ? std::numeric_limits<float>::quiet_NaN() : 1.0f);
  }
  try {
    decode_feature_sequence(b, "a", Modality::kSpatial);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteValue);
    REQUIRE(e.row().has_value());
    CHECK(*e.row() == 1);
    CHECK(e.offset() == 12 + 3 * 4);
  }
}

TEST_CASE("decode: each documented malformation maps to one error code") {
  SUBCASE("short file") {
    std::vector<std::uint8_t> b = {'S', 'K', 'F'};
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kMalformedHeader);
  }
  SUBCASE("bad magic") {
    auto b = header(1, 1);
    b[3] = '2';
    push_float(b, 1.0f);
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kMalformedHeader);
  }
  SUBCASE("zero rows") {
    auto b = header(0, 2);
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kMalformedHeader);
  }
  SUBCASE("zero dim") {
    auto b = header(2, 0);
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kMalformedHeader);
  }
  SUBCASE("trailing bytes") {
    auto b = header(1, 1);
    push_float(b, 1.0f);
    push_float(b, 1.0f);
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kMalformedHeader);
  }
  SUBCASE("infinity") {
    auto b = header(1, 1);
    push_float(b, std::numeric_limits<float>::infinity());
    CHECK_THROWS_CODE(decode_feature_sequence(b, "a", Modality::kSpatial),
                      ErrorCode::kNonFiniteValue);
  }
}

TEST_CASE("write then load is bit-identical") {
  TempDir dir("ds-roundtrip");
  std::mt19937 rng(7);
  std::normal_distribution<float> normal;
  std::vector<float> v(37 * 5);
  for (auto& x : v) x = normal(rng);
  v[3] = -0.0f;
  v[4] = std::numeric_limits<float>::denorm_min();
  const FeatureSequence s("clip", Modality::kTemporal, 5, v);
  write_feature_sequence(dir / "clip.skf", s);
  const auto back = load_feature_sequence(dir / "clip.skf", {}, Modality::kTemporal);
  CHECK(back.video_id() == "clip");
  REQUIRE(back.values().size() == v.size());
  CHECK(std::memcmp(back.values().data(), v.data(), v.size() * sizeof(float)) == 0);
  CHECK(encode_feature_sequence(back) == encode_feature_sequence(s));
}

TEST_CASE("load of a missing file is an io error") {
  CHECK_THROWS_CODE(load_feature_sequence("/nonexistent/x.skf"), ErrorCode::kIo);
}

TEST_CASE("FeatureSequence rejects invalid construction") {
  CHECK_THROWS_CODE(FeatureSequence("a", Modality::kSpatial, 0, {1.0f}), ErrorCode::kValidation);
  CHECK_THROWS_CODE(FeatureSequence("a", Modality::kSpatial, 2, {1.0f}), ErrorCode::kValidation);
  CHECK_THROWS_CODE(FeatureSequence("a", Modality::kSpatial, 1, {}), ErrorCode::kValidation);
  CHECK_THROWS_CODE(FeatureSequence("a", Modality::kSpatial, 1, {std::nanf("")}),
                    ErrorCode::kNonFiniteValue);
}

TEST_CASE("validate_dataset: 36 videos with both modalities") {
  TempDir dir("ds-36");
  const auto path = make_manifest(dir, 36);
  const TaskDataset d = validate_dataset(path);
  CHECK(d.videos.size() == 36);
  CHECK(d.modalities.size() == 2);
  CHECK(d.dim(Modality::kSpatial) == 4);
  CHECK(d.dim(Modality::kTemporal) == 3);
  CHECK(d.scores.size() == 36);
  CHECK(std::is_sorted(d.videos.begin(), d.videos.end()));
}

TEST_CASE("validate_dataset: a video lacking its temporal file") {
  TempDir dir("ds-missing");
  const auto path = make_manifest(dir, 3);
  SUBCASE("file deleted") {
    std::filesystem::remove(dir / "f/vid1.temporal");
    CHECK_THROWS_CODE(validate_dataset(path), ErrorCode::kMissingModality);
  }
  SUBCASE("entry absent from the manifest") {
    Manifest m = read_manifest(path);
    m.videos[1].files.erase(Modality::kTemporal);
    CHECK_THROWS_CODE(assemble_dataset(m), ErrorCode::kMissingModality);
  }
}

TEST_CASE("validate_dataset: dims 64 and 128 in one modality") {
  TempDir dir("ds-dim");
  const auto path = make_manifest(dir, 2, 64);
  write_feature_sequence(dir / "f/vid1.spatial", seq("vid1", Modality::kSpatial, 5, 128));
  CHECK_THROWS_CODE(validate_dataset(path), ErrorCode::kDimMismatch);
}

TEST_CASE("validate_dataset: duplicate video id") {
  TempDir dir("ds-dup");
  const auto path = make_manifest(dir, 2);
  Manifest m = read_manifest(path);
  m.videos.push_back(m.videos.front());
  CHECK_THROWS_CODE(assemble_dataset(m), ErrorCode::kDuplicateVideo);
}

TEST_CASE("manifest: malformed documents are rejected") {
  CHECK_THROWS_CODE(parse_manifest("not json", "."), ErrorCode::kInvalidManifest);
  CHECK_THROWS_CODE(parse_manifest(R"({"modalities":["spatial"],"videos":[]})", "."),
                    ErrorCode::kInvalidManifest);
  CHECK_THROWS_CODE(parse_manifest(R"({"task_id":"t","modalities":[],"videos":[]})", "."),
                    ErrorCode::kInvalidManifest);
  CHECK_THROWS_CODE(
      parse_manifest(R"({"task_id":"t","modalities":["spatial"],"videos":[{"id":"a","score":"x"}]})",
                     "."),
      ErrorCode::kInvalidManifest);
}

TEST_CASE("manifest: json round trip keeps scores, times and normalization") {
  const std::string text = R"({
    "task_id": "t",
    "modalities": ["spatial"],
    "videos": [{"id": "a", "files": {"spatial": "a.skf"}, "score": 2.5, "time": 30}],
    "normalization": {"spatial": {"mean": [1, 2], "std": [3, 4]}}
  })";
  const Manifest m = parse_manifest(text, "/base");
  const Manifest back = parse_manifest(manifest_to_json(m), "/base");
  REQUIRE(back.videos.size() == 1);
  CHECK(back.videos[0].score == 2.5);
  CHECK(back.videos[0].time == 30.0);
  CHECK(back.normalization.at(Modality::kSpatial).std == std::vector<double>{3, 4});
  CHECK(back.videos[0].files.at(Modality::kSpatial) == "a.skf");
}

TEST_CASE("normalization: computed stats z-score the dataset") {
  TempDir dir("ds-norm");
  const auto path = make_manifest(dir, 4);
  Manifest m = read_manifest(path);
  const TaskDataset raw = assemble_dataset(m, false);
  m.normalization = compute_normalization(raw);
  const TaskDataset z = assemble_dataset(m, true);
  for (Modality mod : z.modalities) {
    const std::size_t dim = z.dim(mod);
    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    std::size_t n = 0;
    for (const auto& v : z.videos) {
      const auto& s = z.sequence(v, mod);
      for (std::size_t r = 0; r < s.rows(); ++r, ++n) {
        for (std::size_t d = 0; d < dim; ++d) {
          sum[d] += s.row(r)[d];
          sq[d] += s.row(r)[d] * s.row(r)[d];
        }
      }
    }
    for (std::size_t d = 0; d < dim; ++d) {
      CHECK(sum[d] / n == doctest::Approx(0.0).epsilon(1e-5));
      CHECK(sq[d] / n == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("normalize: zero std centers without scaling") {
  const FeatureSequence s("a", Modality::kSpatial, 2, {1.0f, 5.0f, 3.0f, 5.0f});
  const auto z = normalize(s, {{2.0, 5.0}, {1.0, 0.0}});
  CHECK(z.row(0)[0] == -1.0f);
  CHECK(z.row(0)[1] == 0.0f);
  CHECK_THROWS_CODE(normalize(s, {{0.0}, {1.0}}), ErrorCode::kDimMismatch);
}

TEST_CASE("TaskDataset lookups report the missing piece") {
  TempDir dir("ds-lookup");
  const TaskDataset d = validate_dataset(make_manifest(dir, 2));
  CHECK(d.has_video("vid0"));
  CHECK_FALSE(d.has_video("zzz"));
  CHECK_THROWS_CODE(d.sequence("zzz", Modality::kSpatial), ErrorCode::kMissingVideo);
}

TEST_CASE("canonicalize stores each unordered pair once") {
  CHECK(canonicalize({"a", "b", 1}) == PairLabel{"a", "b", 1});
  CHECK(canonicalize({"a", "b", -1}) == PairLabel{"b", "a", 1});
  CHECK(canonicalize({"b", "a", 0}) == PairLabel{"a", "b", 0});
  CHECK_THROWS_CODE(canonicalize({"a", "a", 1}), ErrorCode::kValidation);
  CHECK_THROWS_CODE(canonicalize({"a", "b", 2}), ErrorCode::kValidation);
}

TEST_CASE("pairs jsonl round trip") {
  TempDir dir("ds-pairs");
  const std::vector<PairLabel> pairs = {{"a", "b", 1}, {"c", "d", 0}, {"e", "f", -1}};
  write_pairs_jsonl(dir / "p.jsonl", pairs);
  CHECK(read_pairs_jsonl(dir / "p.jsonl") ==
        std::vector<PairLabel>{{"a", "b", 1}, {"c", "d", 0}, {"f", "e", 1}});
  CHECK(parse_pairs_jsonl("\n").empty());
  CHECK_THROWS_CODE(parse_pairs_jsonl(R"({"i":"a"})"), ErrorCode::kValidation);
}
