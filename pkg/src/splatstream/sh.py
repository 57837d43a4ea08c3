"""Real spherical-harmonic color model, degrees 0..3.

Colors are stored as SH coefficients per channel and evaluated as
0.5 + sum_i c_i * Y_i(direction), clamped to [0, 1].
"""

from __future__ import annotations

import numpy as np

MAX_DEGREE = 3

C0 = 0.28209479177387814  # sqrt(1 / (4 pi))
C1 = 0.4886025119029199  # sqrt(3 / (4 pi))
C2 = (1.0925484305920792, 1.0925484305920792, 0.31539156525252005,
      1.0925484305920792, 0.5462742152960396)
C3 = (0.5900435899266435, 2.890611442640554, 0.4570457994644658,
      0.3731763325901154, 0.4570457994644658, 1.445305721320277,
      0.5900435899266435)


def num_coeffs(degree: int) -> int:
    return (degree + 1) ** 2


def degree_from_count(count: int) -> int:
    for deg in range(MAX_DEGREE + 1):
        if num_coeffs(deg) == count:
            return deg
    raise ValueError(f"{count} is not a valid SH coefficient count for degree <= {MAX_DEGREE}")


def sh_basis(direction, degree: int) -> np.ndarray:
    """Real SH basis values Y_0..Y_{(deg+1)^2-1} at a unit direction.

    Ordering is band-major, m = -l..l within each band, matching the
    standard real-basis table (no Condon-Shortley phase).
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in 0..{MAX_DEGREE}")
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    n = np.linalg.norm(d)
    if abs(n - 1.0) > 1e-6:
        raise ValueError("direction must be unit-norm")
    x, y, z = d
    out = np.empty(num_coeffs(degree))
    out[0] = C0
    if degree >= 1:
        out[1] = C1 * y
        out[2] = C1 * z
        out[3] = C1 * x
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        out[4] = C2[0] * x * y
        out[5] = C2[1] * y * z
        out[6] = C2[2] * (3.0 * zz - 1.0)
        out[7] = C2[3] * x * z
        out[8] = C2[4] * (xx - yy)
    if degree >= 3:
        out[9] = C3[0] * y * (3.0 * xx - yy)
        out[10] = C3[1] * x * y * z
        out[11] = C3[2] * y * (5.0 * zz - 1.0)
        out[12] = C3[3] * z * (5.0 * zz - 3.0)
        out[13] = C3[4] * x * (5.0 * zz - 1.0)
        out[14] = C3[5] * z * (xx - yy)
        out[15] = C3[6] * x * (xx - 3.0 * yy)
    return out


def evaluate_sh(coeffs: np.ndarray, view_dir) -> np.ndarray:
    """RGB color from SH coefficients of shape ((deg+1)^2, 3) at a unit direction."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[1] != 3:
        raise ValueError(f"coefficients must have shape (n, 3), got {coeffs.shape}")
    degree = degree_from_count(coeffs.shape[0])
    basis = sh_basis(view_dir, degree)
    return np.clip(0.5 + basis @ coeffs, 0.0, 1.0)


def dc_from_color(color) -> np.ndarray:
    """DC-only coefficients ((1, 3)) reproducing a fixed RGB color."""
    c = np.asarray(color, dtype=np.float64).reshape(3)
    return ((c - 0.5) / C0).reshape(1, 3)


def color_from_dc(coeffs: np.ndarray) -> np.ndarray:
    """Direction-independent color of the DC band, unclamped."""
    return 0.5 + np.asarray(coeffs, dtype=np.float64)[0] * C0
