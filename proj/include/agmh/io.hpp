#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agmh/data_synth.hpp"
#include "agmh/hash_learner.hpp"
#include "agmh/retrieval.hpp"

namespace agmh {

// Binary file formats, all little-endian. Layouts are documented in the
// README; format version 1 also pins the synthesis RNG algorithm.
inline constexpr std::uint32_t kFormatVersion = 1;

void save_features(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet load_features(const std::filesystem::path& path);

/// A trained (or freshly initialized) model: architecture + flags + all
/// parameter tensors.
struct Checkpoint {
  TrainConfig config;
  AttributeHeadParams head;
  HashModel model;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_codes(const CodeDatabase& db, const std::filesystem::path& path);
CodeDatabase load_codes(const std::filesystem::path& path);

/// 8-bit binary PGM (P5); values scaled linearly so the map maximum lands
/// on 255.
void write_pgm(const Tensor& map, const std::filesystem::path& path);

/// Rows of comma-separated fields; blank lines and '#' comment lines are
/// skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Fixed-width float formatting for deterministic report bytes.
std::string format_double(double v);

}  // namespace agmh
