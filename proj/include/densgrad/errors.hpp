#pragma once

#include <stdexcept>
#include <string>

namespace densgrad {

struct RankDeficient : std::runtime_error {
  explicit RankDeficient(const std::string& what) : std::runtime_error(what) {}
};

struct SingularR : std::runtime_error {
  explicit SingularR(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroTangent : std::runtime_error {
  explicit ZeroTangent(const std::string& what) : std::runtime_error(what) {}
};

struct NonFinite : std::runtime_error {
  explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfDomain : std::runtime_error {
  explicit OutOfDomain(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySample : std::runtime_error {
  explicit EmptySample(const std::string& what) : std::runtime_error(what) {}
};

struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct TooFewSamples : std::runtime_error {
  explicit TooFewSamples(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace densgrad
