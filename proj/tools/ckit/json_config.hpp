#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace ckit::cli {

// CLI11 config formatter reading and writing a flat JSON object of
// long-option names to values. When reading with a root app, every item is
// routed to the subcommand that was selected on the command line.
class JsonConfig : public CLI::Config {
 public:
  JsonConfig() = default;
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help" || name == "config" || name == "write-config") continue;
      if (opt->get_type_size() != 0) {
        if (opt->count() == 1 && opt->get_expected_max() <= 1) {
          j[name] = opt->results().at(0);
        } else if (opt->count() >= 1) {
          j[name] = opt->results();
        } else if (default_also && !opt->get_default_str().empty()) {
          j[name] = opt->get_default_str();
        }
      } else if (opt->count() > 0) {
        j[name] = true;
      } else if (default_also) {
        j[name] = false;
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    const auto parents = selected_path();
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v, it.key()));
      } else {
        item.inputs.push_back(scalar(*it, it.key()));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  std::vector<std::string> selected_path() const {
    std::vector<std::string> path;
    for (const CLI::App* app = root_; app != nullptr;) {
      const auto subs = app->get_subcommands();
      app = subs.empty() ? nullptr : subs.front();
      if (app != nullptr) path.push_back(app->get_name());
    }
    return path;
  }

  const CLI::App* root_ = nullptr;

  static std::string scalar(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value for '" + key + "'");
  }
};

}  // namespace ckit::cli
