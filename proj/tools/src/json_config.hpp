#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace skillrank::cli {

// CLI11 config reader for flat JSON objects whose keys are long flag names.
// Nested objects map to subcommand sections; arrays become repeated values.
// With a root app, top-level keys belong to its selected subcommand.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  const CLI::App* root_;
};

}  // namespace skillrank::cli
