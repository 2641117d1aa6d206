#include "run_output.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "json.hpp"
#include "skillrank/datastore.hpp"
#include "skillrank/error.hpp"

namespace skillrank::cli {

using json = nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < length; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

RunOutput::RunOutput(std::filesystem::path root, std::string command)
    : root_(std::move(root)), command_(std::move(command)) {}

void RunOutput::add_input(const std::filesystem::path& path) {
  inputs_[path.generic_string()] = file_sha256(path);
}

void RunOutput::add_seed(const std::string& label, std::uint64_t value) {
  seeds_[label] = value;
}

void RunOutput::set_config(std::string config_json) {
  config_json_ = std::move(config_json);
}

std::filesystem::path RunOutput::write(const std::string& relative,
                                       std::string_view text) {
  const auto path = root_ / relative;
  write_text_file(path, text);
  outputs_.insert(relative);
  return path;
}

std::filesystem::path RunOutput::write_report(const std::string& name,
                                              std::string_view text) {
  return write("reports/" + name, text);
}

std::filesystem::path RunOutput::write_trace(const std::string& name,
                                             std::string_view text) {
  return write("traces/" + name, text);
}

std::filesystem::path RunOutput::write_params(const std::string& name,
                                              const ParamsFile& file) {
  const auto bytes = encode_params_file(file);
  return write("params/" + name,
               std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void RunOutput::finish() const {
  write_text_file(root_ / "config.json", config_json_ + "\n");
  json manifest;
  manifest["command"] = command_;
  manifest["config"] = json::parse(config_json_);
  manifest["seeds"] = seeds_;
  manifest["inputs"] = json::object();
  for (const auto& [path, digest] : inputs_) manifest["inputs"][path] = {{"sha256", digest}};
  manifest["outputs"] = json::array();
  for (const auto& rel : outputs_) manifest["outputs"].push_back(rel);
  write_text_file(root_ / "run_manifest.json", manifest.dump(2) + "\n");
}

}  // namespace skillrank::cli
