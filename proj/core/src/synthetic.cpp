#include "skillrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {

namespace {

struct Projection {
  std::vector<double> slope;
  std::vector<double> wiggle;
  std::vector<double> freq;
  std::vector<double> phase;
  std::vector<double> noise_std;
};

double signal(const Projection& p, std::size_t d, double s) {
  return p.slope[d] * s + p.wiggle[d] * std::sin(p.freq[d] * s + p.phase[d]);
}

Projection make_projection(std::size_t dim, double snr, Rng& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Projection p;
  for (std::size_t d = 0; d < dim; ++d) {
    p.slope.push_back(normal(rng));
    p.wiggle.push_back(0.25 * normal(rng));
    p.freq.push_back(std::numbers::pi * (1.0 + unit(rng)));
    p.phase.push_back(2.0 * std::numbers::pi * unit(rng));
  }
  // Signal variance under s ~ U(0, 1), by quadrature.
  constexpr int kGrid = 512;
  for (std::size_t d = 0; d < dim; ++d) {
    double sum = 0.0;
    double sq = 0.0;
    for (int g = 0; g < kGrid; ++g) {
      const double v = signal(p, d, (g + 0.5) / kGrid);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / kGrid;
    const double var = std::max(sq / kGrid - mean * mean, 1e-12);
    p.noise_std.push_back(std::sqrt(var / snr));
  }
  return p;
}

std::string video_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%03zu", index);
  return buf;
}

}  // namespace

SyntheticTask make_synthetic_task(const SyntheticConfig& cfg) {
  if (cfg.videos < 2 || cfg.min_rows == 0 || cfg.min_rows > cfg.max_rows ||
      cfg.spatial_dim == 0 || (cfg.temporal && cfg.temporal_dim == 0) ||
      !(cfg.snr > 0.0) || cfg.signal_fraction <= 0.0 || cfg.signal_fraction > 1.0 ||
      cfg.similar_clusters * cfg.cluster_size > cfg.videos) {
    throw Error(ErrorCode::kConfiguration, "invalid synthetic configuration");
  }

  SyntheticTask task;
  task.dataset.task_id = cfg.task_id;
  task.dataset.modalities.push_back(Modality::kSpatial);
  if (cfg.temporal) task.dataset.modalities.push_back(Modality::kTemporal);

  Rng skill_rng(derive_seed(cfg.seed, "skill"));
  std::uniform_real_distribution<double> unit;
  std::map<std::string, double> annotated;
  std::size_t next = 0;
  for (std::size_t c = 0; c < cfg.similar_clusters; ++c) {
    const double centre = unit(skill_rng);
    for (std::size_t k = 0; k < cfg.cluster_size; ++k, ++next) {
      const std::string id = video_name(next);
      const double jitter = cfg.cluster_jitter * (unit(skill_rng) - 0.5);
      task.skill[id] = std::clamp(centre + jitter, 0.0, 1.0);
      annotated[id] = centre;
    }
  }
  for (; next < cfg.videos; ++next) {
    const std::string id = video_name(next);
    const double s = unit(skill_rng);
    task.skill[id] = s;
    annotated[id] = cfg.score_levels > 0
                        ? std::floor(s * cfg.score_levels) / cfg.score_levels
                        : s;
  }

  std::map<Modality, Projection> projections;
  for (Modality m : task.dataset.modalities) {
    Rng rng(derive_seed(cfg.seed, {"projection", modality_name(m)}));
    const std::size_t dim = m == Modality::kSpatial ? cfg.spatial_dim : cfg.temporal_dim;
    projections.emplace(m, make_projection(dim, cfg.snr, rng));
  }

  for (const auto& [id, s] : task.skill) {
    Rng len_rng(derive_seed(cfg.seed, {"rows", id}));
    std::uniform_int_distribution<std::size_t> length(cfg.min_rows, cfg.max_rows);
    const std::size_t rows = length(len_rng);
    const auto signal_rows = static_cast<std::size_t>(
        std::ceil(cfg.signal_fraction * static_cast<double>(rows)));
    for (Modality m : task.dataset.modalities) {
      const Projection& p = projections.at(m);
      const std::size_t dim = p.slope.size();
      Rng noise_rng(derive_seed(cfg.seed, {"noise", id, modality_name(m)}));
      std::normal_distribution<double> normal;
      std::vector<float> values(rows * dim);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double clean = r < signal_rows ? signal(p, d, s) : signal(p, d, 0.5);
          values[r * dim + d] = static_cast<float>(clean + p.noise_std[d] * normal(noise_rng));
        }
      }
      task.dataset.sequences[id].emplace(m, FeatureSequence(id, m, dim, std::move(values)));
    }
    task.dataset.videos.push_back(id);
    task.dataset.scores[id] = annotated.at(id);
  }
  task.pairs = pairs_from_scores(annotated);
  return task;
}

std::filesystem::path write_synthetic_task(const SyntheticTask& task,
                                           const std::filesystem::path& dir) {
  Manifest manifest;
  manifest.task_id = task.dataset.task_id;
  manifest.modalities = task.dataset.modalities;
  manifest.base_dir = dir;
  for (const auto& id : task.dataset.videos) {
    ManifestVideo video;
    video.id = id;
    for (Modality m : task.dataset.modalities) {
      const std::string rel =
          "features/" + id + "." + std::string(modality_name(m)) + ".skf";
      write_feature_sequence(dir / rel, task.dataset.sequence(id, m));
      video.files[m] = rel;
    }
    video.score = task.dataset.scores.at(id);
    manifest.videos.push_back(std::move(video));
  }
  const auto path = dir / "manifest.json";
  write_manifest(path, manifest);
  return path;
}

}  // namespace skillrank
