#pragma once

#include <stdexcept>
#include <string>

namespace cuboidtrack {

struct NonPositiveDepth : std::runtime_error {
  explicit NonPositiveDepth(const std::string& what) : std::runtime_error(what) {}
};

struct NonPositiveUncertainty : std::runtime_error {
  explicit NonPositiveUncertainty(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyWindow : std::runtime_error {
  explicit EmptyWindow(const std::string& what) : std::runtime_error(what) {}
};

struct TooFewFrames : std::runtime_error {
  explicit TooFewFrames(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateHeading : std::runtime_error {
  explicit DegenerateHeading(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateProblem : std::runtime_error {
  explicit DegenerateProblem(const std::string& what) : std::runtime_error(what) {}
};

struct MissingGroundTruth : std::runtime_error {
  explicit MissingGroundTruth(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cuboidtrack
