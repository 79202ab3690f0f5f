#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ncr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The normalized adjacency is undefined because the graph has no edges.
class EmptyGraph : public Error {
 public:
  using Error::Error;
};

/// Z^T Z failed the relative conditioning check.
class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (edge list, CSV).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range configuration (JSON document or flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// splitmix64 finalizer over (seed, stream). Used to give every domain,
/// replicate and fold its own generator so results do not depend on the
/// order in which work is scheduled.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace ncr
