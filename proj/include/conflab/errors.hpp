#pragma once

#include <stdexcept>
#include <string>

namespace conflab {

// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidDistribution : Error { using Error::Error; };
struct InvalidEstimator : Error { using Error::Error; };
struct InvalidInstance : Error { using Error::Error; };
struct InvalidPolicy : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// sup_p p*P[V >= p] <= 0: no price earns anything.
struct NoPositiveRevenue : Error { using Error::Error; };

// Markov machinery.
struct NotErgodic : Error { using Error::Error; };
struct InvalidStay : Error { using Error::Error; };
struct AbsorbingState : Error { using Error::Error; };
struct WindowTooLarge : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };

// Analytics / pricing.
struct AbsorbingPrice : Error { using Error::Error; };
struct NotWellBehaved : Error { using Error::Error; };
struct NotCalibrated : Error { using Error::Error; };

// Simulator / CLI.
struct ConfigInvalid : Error { using Error::Error; };

}  // namespace conflab
