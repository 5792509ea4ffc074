#pragma once

#include <stdexcept>
#include <string>

namespace hdee {

// Base class for every error thrown by this library. CLI maps subtypes
// onto exit codes; tests catch the specific types.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input validation.
struct NonFiniteInput : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct BadSpec : Error { using Error::Error; };
struct BadAlpha : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct CsvError : Error { using Error::Error; };

// Data/problem conditions.
struct DegenerateData : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct Unstable : Error { using Error::Error; };

// Numerical outcomes.
struct InfeasibleProgram : Error { using Error::Error; };
struct DegenerateProjection : Error { using Error::Error; };
struct NegativeVariance : Error { using Error::Error; };

// Experiment-level.
struct UnsupportedModel : Error { using Error::Error; };
struct AllReplicatesFailed : Error { using Error::Error; };

}  // namespace hdee
