#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace imagedpo {

// File decoding failure; carries the byte offset where parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, long long byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  long long byte_offset() const noexcept { return offset_; }

 private:
  long long offset_;
};

// Optimization blew up (non-finite loss); carries the offending step.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, long long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

// An evaluation produced a non-finite value; carries the offending index/id.
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
  EvalError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_ = 0;
};

}  // namespace imagedpo
