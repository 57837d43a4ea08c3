import numpy as np
import pytest

from splatstream.camera import Extrinsics, Intrinsics, Quaternion, quat_to_rotation
from splatstream.gaussians import GaussianPrimitive, GaussianScene
from splatstream import sh


def random_quaternion(rng) -> Quaternion:
    return Quaternion.from_array(rng.normal(size=4)).normalized()


def random_extrinsics(rng, t_scale=2.0) -> Extrinsics:
    r = quat_to_rotation(random_quaternion(rng))
    return Extrinsics(r, rng.normal(scale=t_scale, size=3))


def random_scene(rng, n=16, sh_degree=1, extent=1.0, background=None) -> GaussianScene:
    prims = []
    n_coeff = sh.num_coeffs(sh_degree)
    for _ in range(n):
        coeffs = np.zeros((n_coeff, 3))
        coeffs[0] = (rng.uniform(0.1, 0.9, size=3) - 0.5) / sh.C0
        if n_coeff > 1:
            coeffs[1:] = rng.uniform(-0.15, 0.15, size=(n_coeff - 1, 3))
        prims.append(GaussianPrimitive(
            mean=rng.uniform(-extent, extent, size=3),
            rotation=random_quaternion(rng),
            scale=rng.uniform(0.05, 0.3, size=3) * extent,
            opacity=float(rng.uniform(0.2, 1.0)),
            sh_coeffs=coeffs,
        ))
    bg = rng.uniform(0, 1, size=3) if background is None else np.asarray(background)
    return GaussianScene(tuple(prims), bg)


def front_camera(width, height, distance=4.0, focal=1.0):
    from splatstream.camera import intrinsics_from_normalized, look_at
    return (look_at((0.0, 0.0, -distance), (0.0, 0.0, 0.0)),
            intrinsics_from_normalized(focal, width, height))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
