#include "skillrank/datastore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "skillrank/error.hpp"

namespace skillrank {

using json = nlohmann::json;

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'K', 'F', '1'};

std::uint32_t read_u32_le(std::span<const std::uint8_t> bytes,
                          std::size_t offset) {
  return static_cast<std::uint32_t>(bytes[offset]) |
         static_cast<std::uint32_t>(bytes[offset + 1]) << 8 |
         static_cast<std::uint32_t>(bytes[offset + 2]) << 16 |
         static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
}

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void manifest_error(const std::string& what) {
  throw Error(ErrorCode::kInvalidManifest, "manifest: " + what);
}

std::vector<double> number_array(const json& j, const std::string& what) {
  if (!j.is_array()) manifest_error(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) manifest_error(what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string_view modality_name(Modality modality) {
  return modality == Modality::kSpatial ? "spatial" : "temporal";
}

Modality parse_modality(std::string_view name) {
  if (name == "spatial") return Modality::kSpatial;
  if (name == "temporal") return Modality::kTemporal;
  throw Error(ErrorCode::kConfiguration,
              "unknown modality '" + std::string(name) + "'");
}

FeatureSequence::FeatureSequence(std::string video_id, Modality modality,
                                 std::size_t dim, std::vector<float> values)
    : video_id_(std::move(video_id)),
      modality_(modality),
      dim_(dim),
      values_(std::move(values)) {
  if (dim_ == 0) {
    throw Error(ErrorCode::kValidation, "feature sequence dim must be positive");
  }
  if (values_.empty() || values_.size() % dim_ != 0) {
    throw Error(ErrorCode::kValidation,
                "feature sequence must hold a positive whole number of rows");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "non-finite feature value at row " + std::to_string(k / dim_));
    }
  }
}

std::span<const float> FeatureSequence::row(std::size_t index) const {
  if (index >= rows()) {
    throw Error(ErrorCode::kValidation, "row index out of range");
  }
  return std::span<const float>(values_).subspan(index * dim_, dim_);
}

FeatureSequence decode_feature_sequence(std::span<const std::uint8_t> bytes,
                                        std::string video_id,
                                        Modality modality) {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw LoadError(ErrorCode::kMalformedHeader,
                    "feature file shorter than its 12-byte header", bytes.size());
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw LoadError(ErrorCode::kMalformedHeader, "bad magic, expected SKF1", 0);
  }
  const std::uint32_t rows = read_u32_le(bytes, 4);
  const std::uint32_t dim = read_u32_le(bytes, 8);
  if (rows == 0) {
    throw LoadError(ErrorCode::kMalformedHeader, "row count is zero", 4);
  }
  if (dim == 0) {
    throw LoadError(ErrorCode::kMalformedHeader, "dim is zero", 8);
  }
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * dim;
  const std::uint64_t expected = kFeatureHeaderBytes + count * 4;
  if (bytes.size() < expected) {
    const std::uint64_t whole = (bytes.size() - kFeatureHeaderBytes) / 4;
    throw LoadError(ErrorCode::kTruncatedPayload,
                    "payload truncated: header declares " +
                        std::to_string(count) + " values, file holds " +
                        std::to_string(whole),
                    bytes.size());
  }
  if (bytes.size() > expected) {
    throw LoadError(ErrorCode::kMalformedHeader,
                    "header declares fewer values than the payload holds",
                    expected);
  }

  std::vector<float> values(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::size_t offset = kFeatureHeaderBytes + k * 4;
    values[k] = std::bit_cast<float>(read_u32_le(bytes, offset));
    if (!std::isfinite(values[k])) {
      const std::size_t row = k / dim;
      throw LoadError(ErrorCode::kNonFiniteValue,
                      "non-finite value at row " + std::to_string(row) +
                          ", byte offset " + std::to_string(offset),
                      offset, row);
    }
  }
  return FeatureSequence(std::move(video_id), modality, dim, std::move(values));
}

std::vector<std::uint8_t> encode_feature_sequence(const FeatureSequence& seq) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kFeatureHeaderBytes + seq.values().size() * 4);
  append_u32_le(out, static_cast<std::uint32_t>(seq.rows()));
  append_u32_le(out, static_cast<std::uint32_t>(seq.dim()));
  for (float v : seq.values()) append_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureSequence load_feature_sequence(const std::filesystem::path& path,
                                      std::string video_id, Modality modality) {
  if (video_id.empty()) video_id = path.stem().string();
  const auto bytes = read_binary_file(path);
  return decode_feature_sequence(bytes, std::move(video_id), modality);
}

void write_feature_sequence(const std::filesystem::path& path,
                            const FeatureSequence& seq) {
  const auto bytes = encode_feature_sequence(seq);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

FeatureSequence normalize(const FeatureSequence& seq, const Normalization& norm) {
  if (norm.mean.size() != seq.dim() || norm.std.size() != seq.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "normalization for " + std::string(modality_name(seq.modality())) +
                    " has the wrong dim for video " + seq.video_id());
  }
  std::vector<float> values(seq.values().begin(), seq.values().end());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const std::size_t d = k % seq.dim();
    const double scale = norm.std[d] > 0.0 ? norm.std[d] : 1.0;
    values[k] = static_cast<float>((values[k] - norm.mean[d]) / scale);
  }
  return FeatureSequence(seq.video_id(), seq.modality(), seq.dim(),
                         std::move(values));
}

Manifest parse_manifest(std::string_view json_text,
                        const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    manifest_error(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) manifest_error("top level must be an object");

  Manifest m;
  m.base_dir = base_dir;
  if (!doc.contains("task_id") || !doc["task_id"].is_string()) {
    manifest_error("missing task_id");
  }
  m.task_id = doc["task_id"].get<std::string>();

  if (!doc.contains("modalities") || !doc["modalities"].is_array() ||
      doc["modalities"].empty()) {
    manifest_error("modalities must be a nonempty array");
  }
  for (const auto& mod : doc["modalities"]) {
    if (!mod.is_string()) manifest_error("modality names must be strings");
    const Modality parsed = parse_modality(mod.get<std::string>());
    if (std::find(m.modalities.begin(), m.modalities.end(), parsed) !=
        m.modalities.end()) {
      manifest_error("modality listed twice");
    }
    m.modalities.push_back(parsed);
  }

  if (!doc.contains("videos") || !doc["videos"].is_array()) {
    manifest_error("videos must be an array");
  }
  for (const auto& v : doc["videos"]) {
    ManifestVideo video;
    if (!v.contains("id") || !v["id"].is_string()) {
      manifest_error("every video needs a string id");
    }
    video.id = v["id"].get<std::string>();
    if (v.contains("files")) {
      if (!v["files"].is_object()) manifest_error("files must be an object");
      for (const auto& [name, file] : v["files"].items()) {
        if (!file.is_string()) manifest_error("file paths must be strings");
        video.files[parse_modality(name)] = file.get<std::string>();
      }
    }
    if (v.contains("score") && !v["score"].is_null()) {
      if (!v["score"].is_number()) manifest_error("score must be a number");
      video.score = v["score"].get<double>();
    }
    if (v.contains("time") && !v["time"].is_null()) {
      if (!v["time"].is_number()) manifest_error("time must be a number");
      video.time = v["time"].get<double>();
    }
    m.videos.push_back(std::move(video));
  }

  if (doc.contains("normalization") && !doc["normalization"].is_null()) {
    if (!doc["normalization"].is_object()) {
      manifest_error("normalization must be an object");
    }
    for (const auto& [name, entry] : doc["normalization"].items()) {
      if (!entry.is_object() || !entry.contains("mean") ||
          !entry.contains("std")) {
        manifest_error("normalization entries need mean and std");
      }
      Normalization norm{number_array(entry["mean"], "normalization mean"),
                         number_array(entry["std"], "normalization std")};
      if (norm.mean.size() != norm.std.size()) {
        manifest_error("normalization mean/std lengths differ");
      }
      m.normalization[parse_modality(name)] = std::move(norm);
    }
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  json doc;
  doc["task_id"] = manifest.task_id;
  doc["modalities"] = json::array();
  for (auto mod : manifest.modalities) {
    doc["modalities"].push_back(std::string(modality_name(mod)));
  }
  doc["videos"] = json::array();
  for (const auto& v : manifest.videos) {
    json entry;
    entry["id"] = v.id;
    entry["files"] = json::object();
    for (const auto& [mod, file] : v.files) {
      entry["files"][std::string(modality_name(mod))] = file;
    }
    if (v.score) entry["score"] = *v.score;
    if (v.time) entry["time"] = *v.time;
    doc["videos"].push_back(std::move(entry));
  }
  if (!manifest.normalization.empty()) {
    doc["normalization"] = json::object();
    for (const auto& [mod, norm] : manifest.normalization) {
      doc["normalization"][std::string(modality_name(mod))] = {
          {"mean", norm.mean}, {"std", norm.std}};
    }
  }
  return doc.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_text_file(path, manifest_to_json(manifest));
}

bool TaskDataset::has_video(const std::string& video) const {
  return sequences.count(video) != 0;
}

bool TaskDataset::has_modality(Modality modality) const {
  return std::find(modalities.begin(), modalities.end(), modality) !=
         modalities.end();
}

const FeatureSequence& TaskDataset::sequence(const std::string& video,
                                             Modality modality) const {
  auto it = sequences.find(video);
  if (it == sequences.end()) {
    throw Error(ErrorCode::kMissingVideo, "unknown video '" + video + "'");
  }
  auto jt = it->second.find(modality);
  if (jt == it->second.end()) {
    throw Error(ErrorCode::kMissingModality,
                "video '" + video + "' has no " +
                    std::string(modality_name(modality)) + " sequence");
  }
  return jt->second;
}

std::size_t TaskDataset::dim(Modality modality) const {
  if (videos.empty()) {
    throw Error(ErrorCode::kData, "dataset has no videos");
  }
  return sequence(videos.front(), modality).dim();
}

TaskDataset assemble_dataset(const Manifest& manifest, bool apply_normalization) {
  TaskDataset ds;
  ds.task_id = manifest.task_id;
  ds.modalities = manifest.modalities;

  std::set<std::string> seen;
  std::map<Modality, std::size_t> dims;
  for (const auto& v : manifest.videos) {
    if (!seen.insert(v.id).second) {
      throw Error(ErrorCode::kDuplicateVideo, "duplicate video id '" + v.id + "'");
    }
    auto& per_modality = ds.sequences[v.id];
    for (auto mod : manifest.modalities) {
      auto file = v.files.find(mod);
      if (file == v.files.end()) {
        throw Error(ErrorCode::kMissingModality,
                    "video '" + v.id + "' lists no " +
                        std::string(modality_name(mod)) + " file");
      }
      const auto path = manifest.base_dir / file->second;
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::kMissingModality,
                    "video '" + v.id + "' " + std::string(modality_name(mod)) +
                        " file not found: " + path.string());
      }
      FeatureSequence seq = load_feature_sequence(path, v.id, mod);
      auto [it, inserted] = dims.emplace(mod, seq.dim());
      if (!inserted && it->second != seq.dim()) {
        throw Error(ErrorCode::kDimMismatch,
                    std::string(modality_name(mod)) + " dim mismatch: video '" +
                        v.id + "' has " + std::to_string(seq.dim()) +
                        ", expected " + std::to_string(it->second));
      }
      if (apply_normalization) {
        auto norm = manifest.normalization.find(mod);
        if (norm != manifest.normalization.end()) {
          seq = normalize(seq, norm->second);
        }
      }
      per_modality.emplace(mod, std::move(seq));
    }
    if (v.score) ds.scores[v.id] = *v.score;
    if (v.time) ds.times[v.id] = *v.time;
  }
  ds.videos.assign(seen.begin(), seen.end());
  return ds;
}

TaskDataset validate_dataset(const std::filesystem::path& manifest_path) {
  return assemble_dataset(read_manifest(manifest_path));
}

std::map<Modality, Normalization> compute_normalization(
    const TaskDataset& dataset) {
  std::map<Modality, Normalization> out;
  for (auto mod : dataset.modalities) {
    const std::size_t dim = dataset.dim(mod);
    std::vector<double> sum(dim, 0.0);
    std::size_t n = 0;
    for (const auto& video : dataset.videos) {
      const auto& seq = dataset.sequence(video, mod);
      for (std::size_t k = 0; k < seq.values().size(); ++k) {
        sum[k % dim] += seq.values()[k];
      }
      n += seq.rows();
    }
    Normalization norm{std::vector<double>(dim), std::vector<double>(dim, 0.0)};
    for (std::size_t d = 0; d < dim; ++d) norm.mean[d] = sum[d] / n;
    for (const auto& video : dataset.videos) {
      const auto& seq = dataset.sequence(video, mod);
      for (std::size_t k = 0; k < seq.values().size(); ++k) {
        const double dev = seq.values()[k] - norm.mean[k % dim];
        norm.std[k % dim] += dev * dev;
      }
    }
    for (auto& s : norm.std) s = std::sqrt(s / n);
    out.emplace(mod, std::move(norm));
  }
  return out;
}

PairLabel canonicalize(PairLabel pair) {
  if (pair.i == pair.j) {
    throw Error(ErrorCode::kValidation, "pair endpoints must differ: " + pair.i);
  }
  switch (pair.label) {
    case 1:
      break;
    case -1:
      std::swap(pair.i, pair.j);
      pair.label = 1;
      break;
    case 0:
      if (pair.j < pair.i) std::swap(pair.i, pair.j);
      break;
    default:
      throw Error(ErrorCode::kValidation,
                  "pair label must be 1, -1 or 0, got " +
                      std::to_string(pair.label));
  }
  return pair;
}

std::vector<PairLabel> parse_pairs_jsonl(std::string_view text) {
  std::vector<PairLabel> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back(canonicalize({j.at("i").get<std::string>(),
                                  j.at("j").get<std::string>(),
                                  j.at("label").get<int>()}));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidation, "pairs line " + std::to_string(line_no) +
                                              ": " + e.what());
    }
  }
  return out;
}

std::vector<PairLabel> read_pairs_jsonl(const std::filesystem::path& path) {
  return parse_pairs_jsonl(read_text_file(path));
}

std::string pairs_to_jsonl(std::span<const PairLabel> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    json j;
    j["i"] = p.i;
    j["j"] = p.j;
    j["label"] = p.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_pairs_jsonl(const std::filesystem::path& path,
                       std::span<const PairLabel> pairs) {
  write_text_file(path, pairs_to_jsonl(pairs));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace skillrank
