#pragma once

#include <stdexcept>
#include <string>

namespace agmh {

// Shape or extent mismatch between tensor operands.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid argument values: bad config fields, empty inputs, unknown ids.
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed binary file; carries the byte offset where parsing failed.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::size_t byte_offset;
};

// Non-finite loss encountered during training.
struct TrainingDivergedError : std::runtime_error {
  explicit TrainingDivergedError(const std::string& what) : std::runtime_error(what) {}
};

// Failed read/write of an output file.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace agmh
