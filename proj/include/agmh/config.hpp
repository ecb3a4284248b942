#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agmh/data_synth.hpp"
#include "agmh/hash_learner.hpp"

namespace agmh {

/// Flat key=value run configuration: profile defaults (desk|paper), then a
/// config file, then flag overrides; later assignments win and assigning
/// `profile` re-applies that profile's defaults. Unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();  // desk profile

  static const std::vector<std::string>& known_keys();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  void set_pair(const std::string& pair);  // "key=value"

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_onoff(const std::string& key) const;

  TrainConfig train_config() const;
  SyntheticSpec synthetic_spec() const;

  /// All resolved values, sorted by key, as "k=v k=v ..." for report headers.
  std::string resolved() const;

 private:
  void apply_profile(const std::string& name);

  std::map<std::string, std::string> values_;
};

}  // namespace agmh
