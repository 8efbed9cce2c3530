#pragma once

// All numeric tolerances used by the library, collected in one place.
// These are fixed constants, not configuration.

namespace sim3align::tol {

// Unit quaternions are renormalized to this accuracy after every operation.
inline constexpr double kQuatNorm = 1e-12;

// Inputs claiming to be unit quaternions are rejected beyond this drift.
inline constexpr double kQuatInputDrift = 1e-6;

// Rotation matrices must be orthogonal with determinant +1 to this accuracy.
inline constexpr double kRotationMatrix = 1e-10;

// Sim(3) group identities (compose/inverse/apply round trips) hold to this.
inline constexpr double kSim3Group = 1e-9;

// The 4x4 N matrix handed to the eigensolver must be symmetric to this,
// relative to its Frobenius norm.
inline constexpr double kSymmetry = 1e-10;

// Jacobi sweep convergence: off-diagonal Frobenius norm below this times
// the matrix Frobenius norm.
inline constexpr double kJacobiOffDiagonal = 1e-14;

// Maximum number of cyclic Jacobi sweeps.
inline constexpr int kJacobiMaxSweeps = 50;

// Top-eigenvalue gap below this times the Frobenius norm means the optimal
// rotation is ambiguous.
inline constexpr double kEigenGap = 1e-9;

// Trajectory-file quaternions may drift this far from unit norm before
// being rejected (they are renormalized on read).
inline constexpr double kFileQuatNorm = 1e-3;

}  // namespace sim3align::tol
