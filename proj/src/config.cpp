#include "agmh/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>

namespace agmh {

namespace {

const std::vector<std::string> kKnownKeys = {
    // run
    "profile", "seed",
    // synthetic data
    "classes", "per_class_retrieval", "per_class_query", "channels", "height", "width",
    "attributes", "subtlety", "noise_sigma",
    // training
    "k", "descriptor_channels", "memory_units", "slots", "bits", "alpha", "beta",
    "outer_iterations", "epochs_per_iteration", "batch_size", "query_sample_size", "lr",
    "lr_drop_at", "lr_drop_factor", "adl", "siea", "adl_denominator",
    // paths and command arguments
    "features", "model", "models", "codes", "out", "outdir", "report", "loss_csv", "item",
    "topk", "repeats", "baseline_seed",
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() { return kKnownKeys; }

RunConfig::RunConfig() { apply_profile("desk"); }

void RunConfig::apply_profile(const std::string& name) {
  if (name != "desk" && name != "paper") {
    throw ArgumentError("unknown profile '" + name + "' (expected desk or paper)");
  }
  values_["profile"] = name;
  values_["seed"] = "1";
  values_["classes"] = "8";
  values_["per_class_retrieval"] = "32";
  values_["per_class_query"] = "8";
  values_["channels"] = "16";
  values_["height"] = "8";
  values_["width"] = "8";
  values_["attributes"] = "8";
  values_["subtlety"] = "0.5";
  values_["noise_sigma"] = "0.3";
  values_["alpha"] = "1";
  values_["beta"] = "0.5";
  values_["batch_size"] = "64";
  values_["lr_drop_at"] = "40";
  values_["lr_drop_factor"] = "10";
  values_["adl"] = "on";
  values_["siea"] = "on";
  values_["adl_denominator"] = "paper";
  values_["topk"] = "10";
  values_["repeats"] = "100";
  if (name == "desk") {
    values_["k"] = "3";
    values_["descriptor_channels"] = "16";
    values_["memory_units"] = "2";
    values_["slots"] = "8";
    values_["bits"] = "24";
    values_["outer_iterations"] = "10";
    values_["epochs_per_iteration"] = "10";
    values_["query_sample_size"] = "128";
    values_["lr"] = "2e-5";
  } else {
    values_["k"] = "6";
    values_["descriptor_channels"] = "512";
    values_["memory_units"] = "4";
    values_["slots"] = "128";
    values_["bits"] = "48";
    values_["outer_iterations"] = "40";
    values_["epochs_per_iteration"] = "30";
    values_["query_sample_size"] = "2000";
    values_["lr"] = "0.001";
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
    throw ArgumentError("unknown config key '" + key + "'");
  }
  if (key == "profile") {
    apply_profile(value);
    return;
  }
  values_[key] = value;
}

void RunConfig::set_pair(const std::string& pair) {
  const std::size_t eq = pair.find('=');
  if (eq == std::string::npos) {
    throw ArgumentError("expected key=value, got '" + pair + "'");
  }
  set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      set_pair(t);
    } catch (const ArgumentError& e) {
      throw ArgumentError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("missing config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  const std::string v = get(key);
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ArgumentError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return x;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ArgumentError("config key '" + key + "': '" + v + "' is not a number");
  }
  return x;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string v = get(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ArgumentError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
  return x;
}

bool RunConfig::get_onoff(const std::string& key) const {
  const std::string v = get(key);
  if (v == "on") return true;
  if (v == "off") return false;
  throw ArgumentError("config key '" + key + "': expected on or off, got '" + v + "'");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.descriptors = static_cast<int>(get_int("k"));
  c.channels = static_cast<int>(get_int("descriptor_channels"));
  c.memory_units = static_cast<int>(get_int("memory_units"));
  c.slots = static_cast<int>(get_int("slots"));
  c.bits = static_cast<int>(get_int("bits"));
  c.alpha = get_double("alpha");
  c.beta = get_double("beta");
  c.outer_iterations = static_cast<int>(get_int("outer_iterations"));
  c.epochs_per_iteration = static_cast<int>(get_int("epochs_per_iteration"));
  c.batch_size = static_cast<int>(get_int("batch_size"));
  c.query_sample_size = static_cast<int>(get_int("query_sample_size"));
  c.lr = get_double("lr");
  c.lr_drop_at = static_cast<int>(get_int("lr_drop_at"));
  c.lr_drop_factor = get_double("lr_drop_factor");
  c.seed = get_u64("seed");
  c.adl_enabled = get_onoff("adl");
  c.siea_enabled = get_onoff("siea");
  const std::string den = get("adl_denominator");
  if (den == "paper") {
    c.adl_denominator = AdlDenominator::Paper;
  } else if (den == "pairs") {
    c.adl_denominator = AdlDenominator::Pairs;
  } else {
    throw ArgumentError("config key 'adl_denominator': expected paper or pairs, got '" + den + "'");
  }
  return c;
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec s;
  s.num_classes = static_cast<int>(get_int("classes"));
  s.retrieval_per_class = static_cast<int>(get_int("per_class_retrieval"));
  s.query_per_class = static_cast<int>(get_int("per_class_query"));
  s.channels = static_cast<int>(get_int("channels"));
  s.height = static_cast<int>(get_int("height"));
  s.width = static_cast<int>(get_int("width"));
  s.num_attributes = static_cast<int>(get_int("attributes"));
  s.subtlety = get_double("subtlety");
  s.noise_sigma = get_double("noise_sigma");
  s.seed = get_u64("seed");
  return s;
}

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (!out.empty()) out += " ";
    out += k + "=" + v;
  }
  return out;
}

}  // namespace agmh
