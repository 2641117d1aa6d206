#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "skillrank/annotation.hpp"
#include "skillrank/datastore.hpp"

namespace skillrank {

// Planted latent-skill generator. Each video gets a skill s ~ U(0, 1); every
// row is a smooth function of s plus Gaussian noise whose per-dimension
// variance is the signal variance divided by snr.
struct SyntheticConfig {
  std::string task_id = "synthetic";
  std::size_t videos = 40;
  std::size_t min_rows = 60;
  std::size_t max_rows = 100;
  std::size_t spatial_dim = 16;
  std::size_t temporal_dim = 16;
  bool temporal = true;
  double snr = 5.0;
  int score_levels = 0;  // 0 keeps scores continuous
  // Clusters of videos that share one annotated score (and so form similar
  // pairs) while their latent skills differ by up to cluster_jitter.
  std::size_t similar_clusters = 0;
  std::size_t cluster_size = 2;
  double cluster_jitter = 0.05;
  // Rows past this fraction of each video carry noise only.
  double signal_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  TaskDataset dataset;
  std::map<std::string, double> skill;
  PairSets pairs;
};

SyntheticTask make_synthetic_task(const SyntheticConfig& cfg);

// Writes one feature file per video and stream plus manifest.json under dir
// and returns the manifest path.
std::filesystem::path write_synthetic_task(const SyntheticTask& task,
                                           const std::filesystem::path& dir);

}  // namespace skillrank
