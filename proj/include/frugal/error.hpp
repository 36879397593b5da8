#pragma once

#include <stdexcept>
#include <string>

namespace frugal {

// Common base so callers can catch the whole family at once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParamError : Error { using Error::Error; };         // invalid distribution/model parameters
struct RangeError : Error { using Error::Error; };         // argument outside mathematical domain
struct ShapeError : Error { using Error::Error; };         // dimension mismatch
struct FitError : Error { using Error::Error; };           // estimation cannot proceed on given data
struct ConditioningError : Error { using Error::Error; };  // singular conditioning block
struct CapabilityError : Error { using Error::Error; };    // model lacks the requested prediction mode
struct PluginError : Error { using Error::Error; };        // child process failure (exit/timeout/io)
struct ProtocolError : Error { using Error::Error; };      // malformed or mismatched plugin reply
struct ConfigError : Error { using Error::Error; };        // experiment configuration rejected
struct IngestError : Error { using Error::Error; };        // CSV ingestion failure
struct TestError : Error { using Error::Error; };          // bootstrap harness could not produce a report

}  // namespace frugal
