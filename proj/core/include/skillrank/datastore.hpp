#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skillrank {

enum class Modality { kSpatial, kTemporal };

std::string_view modality_name(Modality modality);
Modality parse_modality(std::string_view name);

// Ordered per-snippet feature rows of one video in one modality. Rows are
// stored row-major as 32-bit floats, the same layout as the on-disk format.
class FeatureSequence {
 public:
  // Throws Error when dim == 0, values is empty or not a multiple of dim, or
  // any value is non-finite.
  FeatureSequence(std::string video_id, Modality modality, std::size_t dim,
                  std::vector<float> values);

  const std::string& video_id() const noexcept { return video_id_; }
  Modality modality() const noexcept { return modality_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return values_.size() / dim_; }

  std::span<const float> row(std::size_t index) const;
  std::span<const float> values() const noexcept { return values_; }

 private:
  std::string video_id_;
  Modality modality_;
  std::size_t dim_;
  std::vector<float> values_;
};

// Binary feature file: "SKF1", u32 rows, u32 dim, rows*dim f32, all
// little-endian. Decoding failures raise LoadError with the byte offset.
inline constexpr std::size_t kFeatureHeaderBytes = 12;

FeatureSequence decode_feature_sequence(std::span<const std::uint8_t> bytes,
                                        std::string video_id,
                                        Modality modality);
std::vector<std::uint8_t> encode_feature_sequence(const FeatureSequence& seq);

FeatureSequence load_feature_sequence(const std::filesystem::path& path,
                                      std::string video_id = {},
                                      Modality modality = Modality::kSpatial);
void write_feature_sequence(const std::filesystem::path& path,
                            const FeatureSequence& seq);

struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;
};

// z-scores every row; a zero std component leaves that coordinate centered
// but unscaled.
FeatureSequence normalize(const FeatureSequence& seq, const Normalization& norm);

struct ManifestVideo {
  std::string id;
  std::map<Modality, std::string> files;  // relative to the manifest directory
  std::optional<double> score;
  std::optional<double> time;  // completion time, when known
};

struct Manifest {
  std::string task_id;
  std::vector<Modality> modalities;
  std::vector<ManifestVideo> videos;
  std::map<Modality, Normalization> normalization;
  std::filesystem::path base_dir;
};

Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view json_text,
                        const std::filesystem::path& base_dir);
std::string manifest_to_json(const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct TaskDataset {
  std::string task_id;
  std::vector<Modality> modalities;
  std::vector<std::string> videos;  // sorted
  std::map<std::string, std::map<Modality, FeatureSequence>> sequences;
  std::map<std::string, double> scores;
  std::map<std::string, double> times;

  bool has_video(const std::string& video) const;
  bool has_modality(Modality modality) const;
  const FeatureSequence& sequence(const std::string& video,
                                  Modality modality) const;
  std::size_t dim(Modality modality) const;
};

// Loads every feature file a manifest names, checks the dataset invariants
// and applies the manifest's normalization when present.
TaskDataset assemble_dataset(const Manifest& manifest,
                             bool apply_normalization = true);
TaskDataset validate_dataset(const std::filesystem::path& manifest_path);

// Per-dimension mean and population std over every row of every video.
std::map<Modality, Normalization> compute_normalization(
    const TaskDataset& dataset);

// An ordered comparison. label is 1 when i shows more skill, -1 when j does,
// 0 when neither is preferred.
struct PairLabel {
  std::string i;
  std::string j;
  int label = 1;

  friend bool operator==(const PairLabel&, const PairLabel&) = default;
  friend auto operator<=>(const PairLabel&, const PairLabel&) = default;
};

// Canonical storage form: label -1 is flipped to 1 with the endpoints swapped;
// label 0 orders the endpoints lexicographically. Throws on i == j or a label
// outside {-1, 0, 1}.
PairLabel canonicalize(PairLabel pair);

std::vector<PairLabel> read_pairs_jsonl(const std::filesystem::path& path);
std::vector<PairLabel> parse_pairs_jsonl(std::string_view text);
std::string pairs_to_jsonl(std::span<const PairLabel> pairs);
void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const PairLabel> pairs);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace skillrank
