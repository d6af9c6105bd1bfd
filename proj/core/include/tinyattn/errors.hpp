// Copyright 2026 The tinyattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TINYATTN_ERRORS_HPP
#define TINYATTN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tinyattn {

// Invalid tensor shapes: zero/negative extents, mismatched operand dims.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Out-of-range coordinates or indices.
class BoundsError : public std::out_of_range {
 public:
  explicit BoundsError(const std::string& msg) : std::out_of_range(msg) {}
};

// Invalid numeric values (non-finite floats, empty calibration input).
class ValueError : public std::invalid_argument {
 public:
  explicit ValueError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Requantization parameters that do not fit their fixed-point encoding.
class ScaleOverflowError : public std::range_error {
 public:
  explicit ScaleOverflowError(const std::string& msg) : std::range_error(msg) {}
};

// A memory level cannot hold the required working set.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tiling plan construction failed (untileable layer, invalid tile request).
class PlanError : public std::runtime_error {
 public:
  explicit PlanError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model container / platform config parse failure. Carries the line number
// of the offending field so the CLI can point at it.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace tinyattn

#endif  // TINYATTN_ERRORS_HPP
