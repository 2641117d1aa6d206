#include "skillrank/annotation_service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>

#include "httplib.h"
#include "json.hpp"
#include "skillrank/error.hpp"
#include "skillrank/seeding.hpp"

namespace skillrank {

using json = nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hit_name(const std::string& task_id, std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return task_id + "-h" + buf;
}

// Pair-slot sequence where every chunk of four holds distinct pairs.
void repair_chunks(std::vector<std::size_t>& slots) {
  const std::size_t n = slots.size();
  auto chunk_has = [&](std::size_t chunk, std::size_t value, std::size_t skip) {
    for (std::size_t q = chunk * 4; q < chunk * 4 + 4; ++q) {
      if (q != skip && slots[q] == value) return true;
    }
    return false;
  };
  for (std::size_t c = 0; c * 4 < n; ++c) {
    for (std::size_t pos = c * 4; pos < c * 4 + 4; ++pos) {
      bool dup = false;
      for (std::size_t q = c * 4; q < pos; ++q) dup |= slots[q] == slots[pos];
      if (!dup) continue;
      bool fixed = false;
      for (std::size_t q = c * 4 + 4; q < n && !fixed; ++q) {
        if (!chunk_has(c, slots[q], pos)) {
          std::swap(slots[pos], slots[q]);
          fixed = true;
        }
      }
      for (std::size_t q = 0; q < c * 4 && !fixed; ++q) {
        if (!chunk_has(c, slots[q], pos) && !chunk_has(q / 4, slots[pos], q)) {
          std::swap(slots[pos], slots[q]);
          fixed = true;
        }
      }
      if (!fixed) {
        throw Error(ErrorCode::kInsufficientPairs,
                    "cannot spread pairs over HITs without repeats");
      }
    }
  }
}

json hit_to_client_json(const Hit& hit, std::uint64_t order_seed) {
  json j;
  j["hit_id"] = hit.hit_id;
  j["task_id"] = hit.task_id;
  j["order_seed"] = order_seed;
  j["pairs"] = json::array();
  for (const auto& p : hit.pairs) j["pairs"].push_back({{"i", p.i}, {"j", p.j}});
  return j;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownHit: return 404;
    case ErrorCode::kWrongWorker: return 403;
    case ErrorCode::kConflict: return 409;
    default: return 400;
  }
}

std::string error_body(ErrorCode code, const std::string& message) {
  return json{{"error", {{"code", std::string(error_code_name(code))},
                         {"message", message}}}}
      .dump();
}

}  // namespace

std::vector<Hit> build_hits(const std::string& task_id,
                            std::span<const PairKey> task_pairs,
                            std::span<const PairLabel> qc_pool,
                            int workers_per_pair, std::uint64_t seed) {
  constexpr std::size_t kTaskPerHit = kPairsPerHit - 1;
  if (qc_pool.empty()) {
    throw Error(ErrorCode::kInsufficientPairs, "quality-control pool is empty");
  }
  if (task_pairs.size() < kTaskPerHit) {
    throw Error(ErrorCode::kInsufficientPairs,
                "need at least 4 task pairs to fill a HIT, have " +
                    std::to_string(task_pairs.size()));
  }
  if (workers_per_pair < 1) {
    throw Error(ErrorCode::kConfiguration, "workers_per_pair must be >= 1");
  }
  const std::size_t slots_needed = task_pairs.size() * workers_per_pair;
  if (slots_needed % kTaskPerHit != 0) {
    throw Error(ErrorCode::kConfiguration,
                "task pairs x workers_per_pair must be a multiple of 4");
  }
  std::set<PairKey> distinct(task_pairs.begin(), task_pairs.end());
  if (distinct.size() != task_pairs.size()) {
    throw Error(ErrorCode::kValidation, "task pairs contain duplicates");
  }

  std::vector<std::size_t> slots;
  slots.reserve(slots_needed);
  for (int r = 0; r < workers_per_pair; ++r) {
    std::vector<std::size_t> round(task_pairs.size());
    std::iota(round.begin(), round.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {"hit-round", std::to_string(r)}));
    std::shuffle(round.begin(), round.end(), rng);
    slots.insert(slots.end(), round.begin(), round.end());
  }
  repair_chunks(slots);

  std::vector<PairLabel> qc(qc_pool.begin(), qc_pool.end());
  for (auto& p : qc) p = canonicalize(p);
  Rng qc_rng(derive_seed(seed, "qc-order"));
  std::shuffle(qc.begin(), qc.end(), qc_rng);
  Rng pos_rng(derive_seed(seed, "qc-position"));
  std::uniform_int_distribution<std::size_t> position(0, kPairsPerHit - 1);

  std::vector<Hit> hits;
  for (std::size_t h = 0; h * kTaskPerHit < slots.size(); ++h) {
    Hit hit;
    hit.hit_id = hit_name(task_id, h);
    hit.task_id = task_id;
    for (std::size_t k = 0; k < kTaskPerHit; ++k) {
      const PairKey& key = task_pairs[slots[h * kTaskPerHit + k]];
      hit.pairs.push_back({key.a, key.b, false});
    }
    const PairLabel& q = qc[h % qc.size()];
    const auto at = static_cast<std::ptrdiff_t>(position(pos_rng));
    hit.pairs.insert(hit.pairs.begin() + at, HitPair{q.i, q.j, true});
    hits.push_back(std::move(hit));
  }
  return hits;
}

std::string hits_to_json(std::span<const Hit> hits) {
  json doc = json::array();
  for (const auto& h : hits) {
    json jh;
    jh["hit_id"] = h.hit_id;
    jh["task_id"] = h.task_id;
    jh["pairs"] = json::array();
    for (const auto& p : h.pairs) {
      jh["pairs"].push_back(
          {{"i", p.i}, {"j", p.j}, {"is_quality_control", p.is_quality_control}});
    }
    doc.push_back(std::move(jh));
  }
  return doc.dump(2) + "\n";
}

HitService::HitService(std::string task_id, std::vector<Hit> hits,
                       std::filesystem::path store_path, std::uint64_t seed,
                       Clock clock)
    : task_id_(std::move(task_id)),
      store_path_(std::move(store_path)),
      seed_(seed),
      clock_(clock ? std::move(clock) : Clock(utc_now)) {
  for (auto& h : hits) {
    if (h.pairs.size() != kPairsPerHit ||
        std::count_if(h.pairs.begin(), h.pairs.end(),
                      [](const HitPair& p) { return p.is_quality_control; }) != 1) {
      throw Error(ErrorCode::kValidation,
                  "HIT " + h.hit_id + " must hold 5 pairs with exactly one QC pair");
    }
    hit_index_[h.hit_id] = hits_.size();
    hits_.push_back({std::move(h), false});
  }
  replay_store();
}

void HitService::replay_store() {
  if (!std::filesystem::exists(store_path_)) return;
  judgments_ = read_judgments_jsonl(store_path_);
  for (const auto& j : judgments_) {
    auto it = hit_index_.find(j.hit_id);
    if (it == hit_index_.end()) {
      throw Error(ErrorCode::kConfiguration,
                  "store references unknown HIT " + j.hit_id);
    }
    auto& state = hits_[it->second];
    state.submitted = true;
    state.hit.assigned_worker = j.worker_id;
    if (!j.is_quality_control) seen_pairs_[j.worker_id].insert(PairKey::of(j.i, j.j));
  }
}

std::size_t HitService::find_hit(const std::string& hit_id) const {
  auto it = hit_index_.find(hit_id);
  if (it == hit_index_.end()) {
    throw Error(ErrorCode::kUnknownHit, "unknown HIT " + hit_id);
  }
  return it->second;
}

std::optional<Hit> HitService::get_hit(const std::string& worker_id) {
  if (worker_id.empty()) throw Error(ErrorCode::kValidation, "worker id is empty");
  std::lock_guard lock(mu_);
  if (auto it = in_flight_.find(worker_id); it != in_flight_.end()) {
    return hits_[it->second].hit;
  }
  const auto& seen = seen_pairs_[worker_id];
  for (std::size_t h = 0; h < hits_.size(); ++h) {
    auto& state = hits_[h];
    if (state.submitted || state.hit.assigned_worker) continue;
    const bool overlaps = std::any_of(
        state.hit.pairs.begin(), state.hit.pairs.end(), [&](const HitPair& p) {
          return !p.is_quality_control && seen.count(PairKey::of(p.i, p.j));
        });
    if (overlaps) continue;
    state.hit.assigned_worker = worker_id;
    in_flight_[worker_id] = h;
    auto& mine = seen_pairs_[worker_id];
    for (const auto& p : state.hit.pairs) {
      if (!p.is_quality_control) mine.insert(PairKey::of(p.i, p.j));
    }
    return state.hit;
  }
  return std::nullopt;
}

std::uint64_t HitService::order_seed(const std::string& hit_id,
                                     const std::string& worker_id) const {
  return derive_seed(seed_, {"order", hit_id, worker_id}) >> 11;
}

std::vector<Judgment> HitService::submit_judgments(const std::string& hit_id,
                                                   const std::string& worker_id,
                                                   std::span<const Choice> choices) {
  std::lock_guard lock(mu_);
  auto& state = hits_[find_hit(hit_id)];
  if (state.submitted && state.hit.assigned_worker == worker_id) {
    throw Error(ErrorCode::kConflict,
                "HIT " + hit_id + " already submitted by " + worker_id);
  }
  if (state.hit.assigned_worker != worker_id || state.submitted) {
    throw Error(ErrorCode::kWrongWorker,
                "HIT " + hit_id + " is not assigned to " + worker_id);
  }
  if (choices.size() != state.hit.pairs.size()) {
    throw Error(ErrorCode::kValidation,
                "expected " + std::to_string(state.hit.pairs.size()) +
                    " choices, got " + std::to_string(choices.size()));
  }

  const std::string stamp = clock_();
  std::vector<Judgment> fresh;
  for (std::size_t k = 0; k < choices.size(); ++k) {
    const auto& p = state.hit.pairs[k];
    fresh.push_back({hit_id, worker_id, p.i, p.j, choices[k], p.is_quality_control,
                     stamp});
  }
  {
    if (store_path_.has_parent_path()) {
      std::filesystem::create_directories(store_path_.parent_path());
    }
    std::ofstream out(store_path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + store_path_.string());
    out << judgments_to_jsonl(fresh);
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write to " + store_path_.string());
  }
  judgments_.insert(judgments_.end(), fresh.begin(), fresh.end());
  state.submitted = true;
  in_flight_.erase(worker_id);
  return fresh;
}

std::string HitService::export_judgments() const {
  std::lock_guard lock(mu_);
  return judgments_to_jsonl(judgments_);
}

std::size_t HitService::judgment_count() const {
  std::lock_guard lock(mu_);
  return judgments_.size();
}

std::vector<Hit> HitService::hits() const {
  std::lock_guard lock(mu_);
  std::vector<Hit> out;
  for (const auto& s : hits_) out.push_back(s.hit);
  return out;
}

struct AnnotationServer::Impl {
  HitService& service;
  std::filesystem::path media_dir;
  httplib::Server server;

  Impl(HitService& s, std::filesystem::path media)
      : service(s), media_dir(std::move(media)) {
    server.Get(R"(/tasks/([^/]+)/hit)", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      handle(res, [&] {
        check_task(req.matches[1]);
        const std::string worker = req.get_param_value("worker");
        if (worker.empty()) {
          throw Error(ErrorCode::kValidation, "missing worker query parameter");
        }
        auto hit = service.get_hit(worker);
        if (!hit) {
          res.status = 404;
          res.set_content(error_body(ErrorCode::kUnknownHit, "no HITs remaining"),
                          "application/json");
          return;
        }
        res.set_content(
            hit_to_client_json(*hit, service.order_seed(hit->hit_id, worker)).dump(),
            "application/json");
      });
    });

    server.Post(R"(/tasks/([^/]+)/hits/([^/]+)/judgments)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(res, [&] {
                    check_task(req.matches[1]);
                    json body;
                    try {
                      body = json::parse(req.body);
                    } catch (const json::exception& e) {
                      throw Error(ErrorCode::kValidation,
                                  std::string("body is not JSON: ") + e.what());
                    }
                    std::string worker;
                    std::vector<Choice> choices;
                    try {
                      worker = body.at("worker_id").get<std::string>();
                      for (const auto& c : body.at("choices")) {
                        choices.push_back(parse_choice(c.get<std::string>()));
                      }
                    } catch (const json::exception& e) {
                      throw Error(ErrorCode::kValidation, e.what());
                    }
                    const auto written =
                        service.submit_judgments(req.matches[2], worker, choices);
                    res.set_content(json{{"accepted", written.size()}}.dump(),
                                    "application/json");
                  });
                });

    server.Get(R"(/tasks/([^/]+)/judgments\.jsonl)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 handle(res, [&] {
                   check_task(req.matches[1]);
                   res.set_content(service.export_judgments(), "application/x-ndjson");
                 });
               });

    server.Get(R"(/media/([^/]+))", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      const std::string video = req.matches[1];
      if (video.find("..") != std::string::npos) {
        res.status = 400;
        return;
      }
      for (const char* ext : {".mp4", ".webm", ".ogv", ""}) {
        const auto path = media_dir / (video + ext);
        if (std::filesystem::is_regular_file(path)) {
          const std::string type = std::string(ext) == ".webm"  ? "video/webm"
                                   : std::string(ext) == ".ogv" ? "video/ogg"
                                   : std::string(ext) == ".mp4" ? "video/mp4"
                                                                : "application/octet-stream";
          res.set_content(read_text_file(path), type);
          return;
        }
      }
      res.status = 404;
    });
  }

  void check_task(const std::string& task) const {
    if (task != service.task_id()) {
      throw Error(ErrorCode::kUnknownHit, "unknown task " + task);
    }
  }

  template <class F>
  void handle(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(error_body(e.code(), e.what()), "application/json");
    }
  }
};

AnnotationServer::AnnotationServer(HitService& service, std::filesystem::path media_dir)
    : impl_(std::make_unique<Impl>(service, std::move(media_dir))) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool AnnotationServer::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() { impl_->server.stop(); }

bool AnnotationServer::is_running() const { return impl_->server.is_running(); }

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace skillrank
