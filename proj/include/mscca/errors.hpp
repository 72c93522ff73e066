#pragma once

#include <stdexcept>
#include <string>

namespace mscca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingValueError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class AssignmentError : public Error {
 public:
  using Error::Error;
};

/// Invalid cluster counts, dimensions or solver options.
class SpecError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

class MassError : public Error {
 public:
  using Error::Error;
};

class EmptyClusterError : public Error {
 public:
  using Error::Error;
};

class ProjectorError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mscca
