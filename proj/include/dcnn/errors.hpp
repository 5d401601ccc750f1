#pragma once

#include <stdexcept>
#include <string>

namespace dcnn {

// Base class for all library errors. Subtypes let callers map failures to
// exit codes and tests assert on the failure kind.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Dimension or size mismatch (bad tensor shapes, kernel larger than input,
// overflowing element counts).
class ShapeError : public Error {
  public:
    using Error::Error;
};

// Malformed external data: PGM headers, model files, JSON configs.
class FormatError : public Error {
  public:
    using Error::Error;
};

// Invalid argument values (class index out of range, empty dataset, bad ratio).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

// Filesystem-level failure (cannot open/read/write).
class IoError : public Error {
  public:
    using Error::Error;
};

// Training produced a non-finite loss; message names the epoch and batch.
class DivergenceError : public Error {
  public:
    DivergenceError(int epoch, int batch, const std::string& what)
        : Error(what), epoch(epoch), batch(batch) {}

    int epoch;
    int batch;
};

}  // namespace dcnn
