#pragma once

// Experiment configuration: flat `key = value` text with dotted keys.
// Unknown keys are rejected so typos fail fast.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace malab {

class ExperimentConfig {
public:
  static ExperimentConfig fromFile(const std::string& path);
  static ExperimentConfig fromString(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double getDouble(const std::string& key) const;
  double getDouble(const std::string& key, double fallback) const;
  std::int64_t getInt(const std::string& key, std::int64_t fallback) const;
  std::string getString(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  // Keys every experiment needs; throws ConfigError naming the field.
  void validate() const;

private:
  std::map<std::string, std::string> kv_;
};

}  // namespace malab
