#pragma once

#include <stdexcept>
#include <string>

namespace conewarp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};
struct GridError : Error {
    using Error::Error;
};
struct UnknownModelError : Error {
    using Error::Error;
};
struct TruncationError : Error {
    using Error::Error;
};
struct SingularPointError : Error {
    using Error::Error;
};
struct NonCausalPathError : Error {
    using Error::Error;
};
struct NoCausalCurveError : Error {
    using Error::Error;
};
struct ConvergenceError : Error {
    using Error::Error;
};
struct CapExceededError : Error {
    using Error::Error;
};
struct NoGeodesicError : Error {
    using Error::Error;
};
struct NoTimelikeSampleError : Error {
    using Error::Error;
};
struct DualizabilityError : Error {
    using Error::Error;
};
struct ResolutionError : Error {
    using Error::Error;
};
struct MeanCurvatureError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

} // namespace conewarp
