#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "skillrank/annotation.hpp"

namespace skillrank {

inline constexpr std::size_t kPairsPerHit = 5;

struct HitPair {
  std::string i;
  std::string j;
  bool is_quality_control = false;
};

// One unit of annotation work: four task pairs and one quality-control pair.
struct Hit {
  std::string hit_id;
  std::string task_id;
  std::vector<HitPair> pairs;
  std::optional<std::string> assigned_worker;
};

// Every task pair lands in exactly workers_per_pair HITs, never twice in the
// same HIT. Throws Error(kInsufficientPairs) for fewer than four task pairs or
// an empty QC pool, Error(kConfiguration) when the pair-slot count is not a
// multiple of four.
std::vector<Hit> build_hits(const std::string& task_id,
                            std::span<const PairKey> task_pairs,
                            std::span<const PairLabel> qc_pool,
                            int workers_per_pair, std::uint64_t seed);

std::string hits_to_json(std::span<const Hit> hits);

// Serves HITs to workers and durably records their judgments in an
// append-only JSON-lines store. The in-memory index is rebuilt from the store
// at construction. All public members are safe to call concurrently.
class HitService {
 public:
  using Clock = std::function<std::string()>;

  HitService(std::string task_id, std::vector<Hit> hits,
             std::filesystem::path store_path, std::uint64_t seed = 0,
             Clock clock = {});

  const std::string& task_id() const { return task_id_; }

  // The worker's in-flight HIT if any, else the first unassigned HIT sharing
  // no pair with anything the worker has already seen; nullopt when none
  // remain.
  std::optional<Hit> get_hit(const std::string& worker_id);

  // Seed the client uses to shuffle pair order for this worker and HIT.
  std::uint64_t order_seed(const std::string& hit_id,
                           const std::string& worker_id) const;

  // Appends one Judgment per choice. Errors: kUnknownHit, kWrongWorker,
  // kValidation (choice count), kConflict (already submitted).
  std::vector<Judgment> submit_judgments(const std::string& hit_id,
                                         const std::string& worker_id,
                                         std::span<const Choice> choices);

  std::string export_judgments() const;
  std::size_t judgment_count() const;
  std::vector<Hit> hits() const;

 private:
  struct HitState {
    Hit hit;
    bool submitted = false;
  };

  void replay_store();
  std::size_t find_hit(const std::string& hit_id) const;

  std::string task_id_;
  std::filesystem::path store_path_;
  std::uint64_t seed_;
  Clock clock_;
  mutable std::mutex mu_;
  std::vector<HitState> hits_;
  std::map<std::string, std::size_t> hit_index_;
  std::map<std::string, std::set<PairKey>> seen_pairs_;
  std::map<std::string, std::size_t> in_flight_;
  std::vector<Judgment> judgments_;
};

// HTTP front end:
//   GET  /tasks/{task}/hit?worker=...
//   POST /tasks/{task}/hits/{hit}/judgments   {"worker_id", "choices": [...]}
//   GET  /tasks/{task}/judgments.jsonl
//   GET  /media/{video}
class AnnotationServer {
 public:
  AnnotationServer(HitService& service, std::filesystem::path media_dir);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  bool listen_after_bind();  // blocks until stop()
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skillrank
