#pragma once

#include <stdexcept>
#include <string>

namespace loopbox {

// Base class for all recoverable failures raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};
struct InsufficientMatches : Error {
  using Error::Error;
};
struct BoundaryError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct NoAcceptablePair : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct SingularHessian : Error {
  using Error::Error;
};
struct MissingEstimate : Error {
  using Error::Error;
};
struct NotConnected : Error {
  using Error::Error;
};
struct GaugeUnfixed : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct SessionTimeout : Error {
  using Error::Error;
};
struct DisconnectedAgents : Error {
  using Error::Error;
};
struct CyclicMerge : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace loopbox
