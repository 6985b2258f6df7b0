#include "malab/config.hpp"

#include <fstream>
#include <sstream>

#include "malab/linalg.hpp"

namespace malab {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const char* kKnownPrefixes[] = {"potential.", "grid.", "constants.", "experiment.",
                                "solutions.", "output."};

bool knownKey(const std::string& key) {
  if (key == "seed") return true;
  for (const char* p : kKnownPrefixes)
    if (key.rfind(p, 0) == 0) return true;
  return false;
}

}  // namespace

ExperimentConfig ExperimentConfig::fromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError("ConfigError", "path: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fromString(ss.str());
}

ExperimentConfig ExperimentConfig::fromString(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw LabError("ConfigError",
                     "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty() || val.find('=') != std::string::npos)
      throw LabError("ConfigError", "line " + std::to_string(lineno) + ": malformed entry");
    if (!knownKey(key))
      throw LabError("ConfigError", key + ": unknown key");
    cfg.kv_[key] = val;
  }
  return cfg;
}

double ExperimentConfig::getDouble(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw LabError("ConfigError", key + ": missing");
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw LabError("ConfigError", key + ": not a number: " + it->second);
  }
}

double ExperimentConfig::getDouble(const std::string& key, double fallback) const {
  return has(key) ? getDouble(key) : fallback;
}

std::int64_t ExperimentConfig::getInt(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  double v = getDouble(key);
  auto r = std::int64_t(v);
  if (double(r) != v) throw LabError("ConfigError", key + ": not an integer");
  return r;
}

std::string ExperimentConfig::getString(const std::string& key,
                                        const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string ExperimentConfig::require(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw LabError("ConfigError", key + ": missing");
  return it->second;
}

void ExperimentConfig::validate() const {
  require("potential.family");
  if (!has("grid.cells")) throw LabError("ConfigError", "grid.cells: missing");
  getInt("grid.cells", 0);
  getDouble("grid.half", 1.6);
  getDouble("experiment.t0", 0.25);
}

}  // namespace malab
