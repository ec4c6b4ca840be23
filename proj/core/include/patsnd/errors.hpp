#pragma once

#include <stdexcept>
#include <string>

namespace patsnd {

// Base class for all toolkit errors. CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class DuplicateKeyError : public Error {
 public:
  using Error::Error;
};

class MissingEntityError : public Error {
 public:
  using Error::Error;
};

class EmptyKbError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyPropertyListError : public Error {
 public:
  using Error::Error;
};

class UnknownRelationError : public Error {
 public:
  using Error::Error;
};

class CorruptionExhaustedError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class SpanError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace patsnd
