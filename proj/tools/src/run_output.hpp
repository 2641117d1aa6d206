#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "skillrank/scorer.hpp"

namespace skillrank::cli {

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

// Fixed run-directory layout: params/, reports/, traces/, config.json and
// run_manifest.json. Nothing written here depends on wall-clock time.
class RunOutput {
 public:
  RunOutput(std::filesystem::path root, std::string command);

  const std::filesystem::path& root() const { return root_; }

  void add_input(const std::filesystem::path& path);
  void add_seed(const std::string& label, std::uint64_t value);
  void set_config(std::string config_json);

  std::filesystem::path write(const std::string& relative, std::string_view text);
  std::filesystem::path write_report(const std::string& name, std::string_view text);
  std::filesystem::path write_trace(const std::string& name, std::string_view text);
  std::filesystem::path write_params(const std::string& name, const ParamsFile& file);

  // Writes config.json and run_manifest.json.
  void finish() const;

 private:
  std::filesystem::path root_;
  std::string command_;
  std::string config_json_ = "{}";
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::uint64_t> seeds_;
  std::set<std::string> outputs_;
};

}  // namespace skillrank::cli
