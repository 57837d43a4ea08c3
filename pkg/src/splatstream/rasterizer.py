"""Forward Gaussian-splat rasterization.

Two routes render the same image: a tile-based rasterizer (production path)
and a brute-force per-pixel compositor (oracle path, single-threaded by
design). Both composite depth-sorted splats front to back over the scene
background with the same alpha cutoffs, so they agree to floating-point
noise on any scene.
"""

from __future__ import annotations

import math

import numpy as np

from .camera import Extrinsics, Intrinsics, NEAR_PLANE, project_point
from .frames import FrameBuffer
from .gaussians import GaussianPrimitive, GaussianScene, covariance_3d
from .sh import evaluate_sh

# Anti-aliasing floor added to the projected covariance diagonal (px^2).
LOW_PASS_DILATION = 0.3
# Contributions below this alpha are skipped; pixels whose transmittance
# drops below it stop accumulating. Matches 8-bit output precision.
ALPHA_CUTOFF = 1.0 / 255.0
MAX_ALPHA = 0.99
TILE_SIZE = 16


def projection_jacobian(point, e: Extrinsics, k: Intrinsics):
    """2x3 Jacobian d(u, v)/d(world point) of the pinhole projection at a
    world point. Returns None when the point is behind the near plane."""
    p_cam = e.rotation @ np.asarray(point, dtype=np.float64).reshape(3) + e.translation
    x, y, z = p_cam
    if z <= NEAR_PLANE:
        return None
    jac_cam = np.array([
        [k.focal_x / z, 0.0, -k.focal_x * x / (z * z)],
        [0.0, k.focal_y / z, -k.focal_y * y / (z * z)],
    ])
    return jac_cam @ e.rotation


def project_covariance(g: GaussianPrimitive, e: Extrinsics, k: Intrinsics,
                       dilation: float = LOW_PASS_DILATION):
    """Screen-space 2x2 covariance of a splat via the pinhole Jacobian at its
    projected mean. Returns None when the mean is behind the near plane."""
    m = projection_jacobian(g.mean, e, k)
    if m is None:
        return None
    cov2d = m @ covariance_3d(g.rotation, g.scale) @ m.T
    return cov2d + dilation * np.eye(2)


def _splat_color(g: GaussianPrimitive, cam_center: np.ndarray) -> np.ndarray:
    d = g.mean - cam_center
    return evaluate_sh(g.sh_coeffs, d / np.linalg.norm(d))


def _footprint_radius(cov2d: np.ndarray, opacity: float) -> float:
    """Pixel radius beyond which every contribution falls under ALPHA_CUTOFF."""
    o = min(opacity, MAX_ALPHA)
    if o < ALPHA_CUTOFF:
        return 0.0
    lam_max = 0.5 * (cov2d[0, 0] + cov2d[1, 1]) + 0.5 * math.hypot(
        cov2d[0, 0] - cov2d[1, 1], 2.0 * cov2d[0, 1])
    return math.sqrt(2.0 * math.log(o / ALPHA_CUTOFF) * lam_max)


def _prepare_splats(scene: GaussianScene, e: Extrinsics, k: Intrinsics):
    """Project all primitives, cull, depth-sort (stable by primitive index),
    and return flat arrays of 2D parameters."""
    means, conics, colors, opacities, radii, depths = [], [], [], [], [], []
    cam_center = e.camera_center
    for g in scene.primitives:
        proj = project_point(g.mean, e, k)
        if proj is None:
            continue
        cov2d = project_covariance(g, e, k)
        radius = _footprint_radius(cov2d, g.opacity)
        if radius <= 0.0:
            continue
        det = cov2d[0, 0] * cov2d[1, 1] - cov2d[0, 1] ** 2
        if det <= 0.0:
            continue
        conics.append((cov2d[1, 1] / det, -cov2d[0, 1] / det, cov2d[0, 0] / det))
        means.append(proj[:2])
        depths.append(proj[2])
        radii.append(radius)
        opacities.append(g.opacity)
        colors.append(_splat_color(g, cam_center))
    if not means:
        return None
    order = np.argsort(np.asarray(depths), kind="stable")
    return {
        "mean": np.asarray(means)[order],
        "conic": np.asarray(conics)[order],
        "color": np.asarray(colors)[order],
        "opacity": np.asarray(opacities)[order],
        "radius": np.asarray(radii)[order],
        "depth": np.asarray(depths)[order],
    }


def _alpha(conic, opacity, dx, dy):
    m = conic[0] * dx * dx + 2.0 * conic[1] * dx * dy + conic[2] * dy * dy
    return np.minimum(MAX_ALPHA, opacity * np.exp(-0.5 * m))


def rasterize(scene: GaussianScene, e: Extrinsics, k: Intrinsics,
              width: int, height: int, tile_size: int = TILE_SIZE) -> FrameBuffer:
    """Tile-based front-to-back compositing of depth-sorted splats."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    splats = _prepare_splats(scene, e, k)
    if splats is None:
        return FrameBuffer.constant(width, height, scene.background)

    n_tx = (width + tile_size - 1) // tile_size
    n_ty = (height + tile_size - 1) // tile_size
    # Conservative footprint: circle of _footprint_radius around the mean,
    # expanded to covered tiles. Splats are appended in depth order, so each
    # tile list is already depth-sorted with stable index tie-breaking.
    tile_lists = [[] for _ in range(n_tx * n_ty)]
    for i in range(len(splats["mean"])):
        mx, my = splats["mean"][i]
        r = splats["radius"][i]
        tx0 = max(0, int((mx - r) // tile_size))
        tx1 = min(n_tx - 1, int((mx + r) // tile_size))
        ty0 = max(0, int((my - r) // tile_size))
        ty1 = min(n_ty - 1, int((my + r) // tile_size))
        if tx1 < 0 or ty1 < 0 or tx0 >= n_tx or ty0 >= n_ty:
            continue
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                tile_lists[ty * n_tx + tx].append(i)

    color = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    for ty in range(n_ty):
        for tx in range(n_tx):
            ids = tile_lists[ty * n_tx + tx]
            if not ids:
                continue
            x0, y0 = tx * tile_size, ty * tile_size
            x1, y1 = min(x0 + tile_size, width), min(y0 + tile_size, height)
            px = np.arange(x0, x1) + 0.5
            py = np.arange(y0, y1) + 0.5
            t_tile = trans[y0:y1, x0:x1]
            c_tile = color[y0:y1, x0:x1]
            for i in ids:
                dx = px[None, :] - splats["mean"][i, 0]
                dy = py[:, None] - splats["mean"][i, 1]
                alpha = _alpha(splats["conic"][i], splats["opacity"][i], dx, dy)
                live = (alpha >= ALPHA_CUTOFF) & (t_tile >= ALPHA_CUTOFF)
                if not live.any():
                    if not (t_tile >= ALPHA_CUTOFF).any():
                        break
                    continue
                w = np.where(live, t_tile * alpha, 0.0)
                c_tile += w[:, :, None] * splats["color"][i][None, None, :]
                t_tile = np.where(live, t_tile * (1.0 - alpha), t_tile)
            trans[y0:y1, x0:x1] = t_tile
            color[y0:y1, x0:x1] = c_tile
    color += trans[:, :, None] * scene.background[None, None, :]
    return FrameBuffer(color)


def rasterize_bruteforce(scene: GaussianScene, e: Extrinsics, k: Intrinsics,
                         width: int, height: int) -> FrameBuffer:
    """Oracle path: evaluate every splat at every pixel with no tiling or
    footprint bounds, sort by depth, composite front to back."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    entries = []
    cam_center = e.camera_center
    for idx, g in enumerate(scene.primitives):
        proj = project_point(g.mean, e, k)
        if proj is None:
            continue
        cov2d = project_covariance(g, e, k)
        entries.append((proj[2], idx, proj[0], proj[1], np.linalg.inv(cov2d),
                        g.opacity, _splat_color(g, cam_center)))
    entries.sort(key=lambda item: (item[0], item[1]))

    px = np.arange(width) + 0.5
    py = np.arange(height) + 0.5
    color = np.zeros((height, width, 3))
    trans = np.ones((height, width))
    for _, _, mx, my, inv_cov, opacity, c in entries:
        dx = px[None, :] - mx
        dy = py[:, None] - my
        m = (inv_cov[0, 0] * dx * dx + (inv_cov[0, 1] + inv_cov[1, 0]) * dx * dy
             + inv_cov[1, 1] * dy * dy)
        alpha = np.minimum(MAX_ALPHA, opacity * np.exp(-0.5 * m))
        live = (alpha >= ALPHA_CUTOFF) & (trans >= ALPHA_CUTOFF)
        w = np.where(live, trans * alpha, 0.0)
        color += w[:, :, None] * c[None, None, :]
        trans = np.where(live, trans * (1.0 - alpha), trans)
    color += trans[:, :, None] * scene.background[None, None, :]
    return FrameBuffer(color)
