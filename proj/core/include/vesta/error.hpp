#pragma once

#include <stdexcept>
#include <string>

namespace vesta {

// Base of every error thrown by the library. Callers that only care about
// "something in the model went wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Batch-norm folding could not be expressed (non-positive variance).
class FoldError : public Error {
 public:
  using Error::Error;
};

// Folded fixed-point parameters do not fit their declared widths.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

// An integer value escaped its declared hardware width.
class WidthError : public Error {
 public:
  using Error::Error;
};

// Lane-role tagging inconsistent with an adder tree mode.
class MappingError : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

class SchedulingError : public Error {
 public:
  using Error::Error;
};

class UnsupportedLayerError : public SchedulingError {
 public:
  using SchedulingError::SchedulingError;
};

class MemoryError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public MemoryError {
 public:
  using MemoryError::MemoryError;
};

class BudgetError : public MemoryError {
 public:
  using MemoryError::MemoryError;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

// Wraps an error raised while evaluating one layer of a network.
class LayerError : public Error {
 public:
  LayerError(std::size_t layer_index, const std::string& layer_name,
             const std::string& what);

  std::size_t layer_index() const { return layer_index_; }
  const std::string& layer_name() const { return layer_name_; }

 private:
  std::size_t layer_index_;
  std::string layer_name_;
};

}  // namespace vesta
