#include "meanfield/config_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "meanfield/errors.hpp"

namespace meanfield {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + key + " is required");
  return *it;
}

double number_field(const json& value, const std::string& name) {
  if (!value.is_number()) throw ValidationError(name + " must be a number");
  return value.get<double>();
}

std::int64_t integer_field(const json& value, const std::string& name) {
  if (!value.is_number_integer()) throw ValidationError(name + " must be an integer");
  return value.get<std::int64_t>();
}

}  // namespace

SystemConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  static const char* const kKnown[] = {"groups", "T", "dt", "eta", "y0", "seed", "replications"};
  for (const auto& [key, _] : doc.items()) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw ValidationError("unknown config field: " + key);
  }

  SystemConfig cfg;
  const auto& groups = require(doc, "groups", "");
  if (!groups.is_array()) throw ValidationError("groups must be an array");
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    const std::string where = "groups[" + std::to_string(k) + "].";
    if (!g.is_object()) throw ValidationError("groups[" + std::to_string(k) + "] must be an object");
    GroupSpec spec;
    spec.alpha = number_field(require(g, "alpha", where), where + "alpha");
    spec.sigma = number_field(require(g, "sigma", where), where + "sigma");
    const auto count = integer_field(require(g, "count", where), where + "count");
    if (count < 1 || count > 1'000'000) throw ValidationError(where + "count must be in [1, 1000000]");
    spec.count = static_cast<int>(count);
    cfg.groups.push_back(spec);
  }
  cfg.T = number_field(require(doc, "T", ""), "T");
  cfg.eta = number_field(require(doc, "eta", ""), "eta");
  if (doc.contains("dt")) cfg.dt = number_field(doc["dt"], "dt");
  if (doc.contains("y0")) cfg.y0 = number_field(doc["y0"], "y0");
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (s.is_number_unsigned()) {
      cfg.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      throw ValidationError("seed must be a non-negative integer");
    }
  }
  if (doc.contains("replications")) cfg.replications = integer_field(doc["replications"], "replications");

  validate_and_expand(cfg);
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const SystemConfig& config) {
  json doc;
  doc["groups"] = json::array();
  for (const auto& g : config.groups)
    doc["groups"].push_back({{"alpha", g.alpha}, {"sigma", g.sigma}, {"count", g.count}});
  doc["T"] = config.T;
  doc["dt"] = config.dt;
  doc["eta"] = config.eta;
  doc["y0"] = config.y0;
  doc["seed"] = config.seed;
  doc["replications"] = config.replications;
  return doc.dump(2);
}

}  // namespace meanfield
