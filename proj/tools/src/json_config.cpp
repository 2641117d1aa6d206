#include "json_config.hpp"

#include <istream>
#include <iterator>

#include "json.hpp"

namespace skillrank::cli {

using json = nlohmann::json;

namespace {

std::string scalar_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

void flatten(const json& object, std::vector<std::string> parents,
             std::vector<CLI::ConfigItem>& items) {
  for (const auto& [key, value] : object.items()) {
    if (value.is_object()) {
      auto nested = parents;
      nested.push_back(key);
      flatten(value, nested, items);
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar_text(v));
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    items.push_back(std::move(item));
  }
}

json typed(const std::string& text) {
  if (json::accept(text)) {
    json parsed = json::parse(text);
    if (parsed.is_number() || parsed.is_boolean()) return parsed;
  }
  return text;
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool,
                                  std::string) const {
  json doc = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || opt->get_lnames().empty()) {
      continue;
    }
    if (opt->get_expected_min() == 0) {
      if (opt->count() > 0 || default_also) doc[name] = opt->count() > 0;
      continue;
    }
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      if (!default_also || opt->get_default_str().empty()) continue;
      values.push_back(opt->get_default_str());
    }
    if (values.size() == 1 && opt->get_expected_max() <= 1) {
      doc[name] = typed(values.front());
    } else {
      json arr = json::array();
      for (const auto& v : values) arr.push_back(typed(v));
      doc[name] = arr;
    }
  }
  return doc.dump(2);
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  const std::string text{std::istreambuf_iterator<char>(input),
                         std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CLI::ConversionError(std::string("config is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CLI::ConversionError("config must be a JSON object");
  std::vector<std::string> parents;
  if (root_ != nullptr && !root_->get_subcommands().empty()) {
    parents.push_back(root_->get_subcommands().front()->get_name());
  }
  std::vector<CLI::ConfigItem> items;
  flatten(doc, parents, items);
  return items;
}

}  // namespace skillrank::cli
