"""Small fixed-size linear algebra helpers shared by every module.

Everything here operates on plain numpy arrays: 3-vectors, 6-vectors
(stacked [linear; angular]) and 3x3 / 6x6 matrices.  Rotation matrices
map body coordinates to world coordinates, ``v_W = R @ v_B``.  Euler
angle inputs use the ZYX (yaw-pitch-roll) convention throughout.
"""

import numpy as np

SKEW_SYMMETRY_TOL = 1e-6
ROTATION_TOL = 1e-9


class NonSkewInput(ValueError):
    """Raised when ``vee`` receives a matrix that is not skew-symmetric."""


def check_finite(a, name="array"):
    """Return ``a`` as a float array, rejecting NaN/Inf components."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries: {a!r}")
    return a


def skew(v):
    """Skew-symmetric matrix of a 3-vector: ``skew(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(m, tol=SKEW_SYMMETRY_TOL):
    """Extract the 3-vector from a skew-symmetric matrix (inverse of skew)."""
    m = np.asarray(m, dtype=np.float64)
    residual = np.max(np.abs(m + m.T))
    if residual > tol:
        raise NonSkewInput(f"symmetry residual {residual:.3e} exceeds tol {tol:.1e}")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rotation_from_euler(roll, pitch, yaw):
    """Rotation matrix from ZYX Euler angles: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def is_rotation(m, tol=ROTATION_TOL):
    """True when ``m`` is orthonormal with unit determinant within tol."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    return (np.max(np.abs(m.T @ m - np.eye(3))) <= tol
            and abs(np.linalg.det(m) - 1.0) <= tol)


def orthonormalize(m):
    """Nearest rotation matrix (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r
