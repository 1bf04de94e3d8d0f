#pragma once

#include <stdexcept>
#include <string>

namespace hdgmix {

/// Base class of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateElement : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

struct NonConformingMesh : Error {
  using Error::Error;
};

struct UnsupportedDegree : Error {
  using Error::Error;
};

struct SingularLocalSystem : Error {
  using Error::Error;
};

struct InvalidStabilization : Error {
  using Error::Error;
};

struct NonPositiveDiffusion : Error {
  using Error::Error;
};

struct SingularLocalSolver : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct TooLarge : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace hdgmix
