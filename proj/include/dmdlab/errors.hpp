#pragma once

#include <stdexcept>
#include <string>

namespace dmdlab {

/// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fewer snapshots/columns than the operation needs.
struct InsufficientData : Error { using Error::Error; };

/// Out-of-range index, window, or evaluation time.
struct IndexError : Error { using Error::Error; };

/// Malformed or truncated snapshot file.
struct FormatError : Error { using Error::Error; };

/// Input that is identically zero or otherwise carries no information.
struct DegenerateInput : Error { using Error::Error; };

/// Reduced operator whose eigenvector matrix is numerically singular.
struct DefectiveOperator : Error { using Error::Error; };

/// Window size that cannot tile the snapshot sequence.
struct InvalidWindow : Error { using Error::Error; };

/// Density with (numerically) zero total mass; no mean can be tracked.
struct DegenerateDensity : Error { using Error::Error; };

/// Moving-grid axis lost strict monotonicity.
struct MeshTangled : Error { using Error::Error; };

/// Time-step restriction violated or solution blow-up detected.
struct StabilityError : Error { using Error::Error; };

/// Inner iteration (e.g. a pressure solve) failed to converge.
struct SolverError : Error { using Error::Error; };

/// Appended column lies in the range of the existing data matrix.
struct RankCollapse : Error { using Error::Error; };

/// Non-finite or otherwise inadmissible coefficient data.
struct InvalidCoefficient : Error { using Error::Error; };

/// Reference trajectory with vanishing norm; relative error undefined.
struct DegenerateReference : Error { using Error::Error; };

/// Unreadable, incomplete, or inconsistent run configuration.
struct ConfigError : Error { using Error::Error; };

} // namespace dmdlab
