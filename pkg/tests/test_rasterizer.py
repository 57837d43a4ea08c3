import numpy as np
import pytest

from splatstream import sh
from splatstream.camera import (Extrinsics, Intrinsics, intrinsics_from_normalized,
                                project_point)
from splatstream.gaussians import GaussianPrimitive, GaussianScene
from splatstream.rasterizer import (ALPHA_CUTOFF, LOW_PASS_DILATION, project_covariance,
                                    projection_jacobian, rasterize,
                                    rasterize_bruteforce)

from conftest import front_camera, random_extrinsics, random_scene


def isotropic_splat(mean, sigma, color, opacity=1.0):
    from splatstream.camera import Quaternion
    return GaussianPrimitive(
        mean=np.asarray(mean, dtype=np.float64),
        rotation=Quaternion(1.0, 0.0, 0.0, 0.0),
        scale=np.array([sigma, sigma, sigma]),
        opacity=opacity,
        sh_coeffs=sh.dc_from_color(color),
    )


class TestProjectionJacobian:
    def test_matches_central_differences(self, rng):
        # Oracle: finite differences of the pinhole projection itself.
        k = intrinsics_from_normalized(0.9, 320, 240)
        eps = 1e-6
        checked = 0
        while checked < 50:
            e = random_extrinsics(rng)
            x = rng.uniform(-2, 2, size=3)
            if project_point(x, e, k) is None:
                continue
            jac = projection_jacobian(x, e, k)
            num = np.zeros((2, 3))
            ok = True
            for j in range(3):
                dx = np.zeros(3)
                dx[j] = eps
                plus = project_point(x + dx, e, k)
                minus = project_point(x - dx, e, k)
                if plus is None or minus is None:
                    ok = False
                    break
                num[0, j] = (plus[0] - minus[0]) / (2 * eps)
                num[1, j] = (plus[1] - minus[1]) / (2 * eps)
            if not ok:
                continue
            checked += 1
            np.testing.assert_allclose(jac, num, rtol=1e-4, atol=1e-4)

    def test_behind_camera_returns_none(self):
        e = Extrinsics(np.eye(3), np.zeros(3))
        k = intrinsics_from_normalized(1.0, 64, 64)
        assert projection_jacobian([0, 0, -2.0], e, k) is None


class TestProjectCovariance:
    def test_on_axis_isotropic_stays_isotropic(self):
        # A spherical splat centered on the optical axis projects to a
        # circular footprint: zero off-diagonal, focal^2 sigma^2 / z^2 variance.
        e = Extrinsics(np.eye(3), np.zeros(3))
        k = Intrinsics(200.0, 200.0, 32.0, 32.0)
        g = isotropic_splat([0, 0, 4.0], 0.1, [0.5, 0.5, 0.5])
        cov = project_covariance(g, e, k, dilation=0.0)
        expected = (200.0 * 0.1 / 4.0) ** 2
        assert abs(cov[0, 1]) < 1e-9
        assert cov[0, 0] == pytest.approx(expected, rel=1e-9)
        assert cov[1, 1] == pytest.approx(expected, rel=1e-9)

    def test_dilation_adds_to_diagonal(self):
        e = Extrinsics(np.eye(3), np.zeros(3))
        k = Intrinsics(200.0, 200.0, 32.0, 32.0)
        g = isotropic_splat([0, 0, 4.0], 0.1, [0.5, 0.5, 0.5])
        bare = project_covariance(g, e, k, dilation=0.0)
        dilated = project_covariance(g, e, k)
        np.testing.assert_allclose(dilated, bare + LOW_PASS_DILATION * np.eye(2),
                                   atol=1e-12)

    def test_variance_quarters_when_depth_doubles(self):
        e = Extrinsics(np.eye(3), np.zeros(3))
        k = Intrinsics(150.0, 150.0, 32.0, 32.0)
        near = project_covariance(isotropic_splat([0, 0, 2.0], 0.1, [0.5] * 3),
                                  e, k, dilation=0.0)
        far = project_covariance(isotropic_splat([0, 0, 4.0], 0.1, [0.5] * 3),
                                 e, k, dilation=0.0)
        np.testing.assert_allclose(far, near / 4.0, rtol=1e-9)

    def test_symmetric_output(self, rng):
        k = intrinsics_from_normalized(1.0, 128, 128)
        for _ in range(20):
            scene = random_scene(rng, n=1)
            e = random_extrinsics(rng)
            cov = project_covariance(scene.primitives[0], e, k)
            if cov is None:
                continue
            assert cov[0, 1] == pytest.approx(cov[1, 0], rel=1e-12)


class TestRasterize:
    def test_empty_scene_is_background(self):
        e, k = front_camera(32, 24)
        img = rasterize(GaussianScene((), background=[0.2, 0.4, 0.6]), e, k, 32, 24)
        np.testing.assert_allclose(img.data, np.broadcast_to([0.2, 0.4, 0.6], (24, 32, 3)))

    def test_opaque_splat_dominates_center_pixel(self):
        e, k = front_camera(64, 64)
        scene = GaussianScene(
            (isotropic_splat([0, 0, 0], 0.5, [1.0, 0.0, 0.0], opacity=1.0),),
            background=[0.0, 0.0, 1.0])
        img = rasterize(scene, e, k, 64, 64)
        center = img.data[32, 32]
        assert center[0] > 0.98
        assert center[2] < 0.02

    def test_front_splat_wins_depth_order(self):
        # Red splat in front of blue: center pixel is red regardless of the
        # order primitives are listed in.
        e, k = front_camera(64, 64)
        red = isotropic_splat([0, 0, -1.0], 0.4, [1.0, 0.0, 0.0], opacity=0.95)
        blue = isotropic_splat([0, 0, 1.0], 0.4, [0.0, 0.0, 1.0], opacity=0.95)
        for prims in [(red, blue), (blue, red)]:
            img = rasterize(GaussianScene(prims), e, k, 64, 64)
            center = img.data[32, 32]
            assert center[0] > 10 * center[2]

    def test_transmittance_reaches_background(self):
        # A translucent splat over two backgrounds: the background shows
        # through with weight (1 - alpha) at the center pixel.
        e, k = front_camera(64, 64)
        splat = isotropic_splat([0, 0, 0], 0.6, [1.0, 1.0, 1.0], opacity=0.5)
        dark = rasterize(GaussianScene((splat,), background=[0, 0, 0]), e, k, 64, 64)
        lit = rasterize(GaussianScene((splat,), background=[1, 1, 1]), e, k, 64, 64)
        leak = lit.data[32, 32, 0] - dark.data[32, 32, 0]
        assert leak == pytest.approx(0.5, abs=0.02)

    def test_opacity_monotonicity(self):
        e, k = front_camera(48, 48)
        values = []
        for opacity in [0.2, 0.5, 0.8]:
            scene = GaussianScene(
                (isotropic_splat([0, 0, 0], 0.5, [1.0, 1.0, 1.0], opacity=opacity),))
            values.append(rasterize(scene, e, k, 48, 48).data[24, 24, 0])
        assert values[0] < values[1] < values[2]

    def test_deterministic(self, rng):
        scene = random_scene(rng, n=24, sh_degree=1)
        e, k = front_camera(40, 30)
        a = rasterize(scene, e, k, 40, 30)
        b = rasterize(scene, e, k, 40, 30)
        assert np.array_equal(a.data, b.data)

    def test_invalid_dimensions(self, rng):
        scene = random_scene(rng, n=1)
        e, k = front_camera(8, 8)
        with pytest.raises(ValueError):
            rasterize(scene, e, k, 0, 8)


class TestOracleAgreement:
    def test_tile_matches_bruteforce(self, rng):
        # The two rendering routes share no compositing loop; agreement is
        # floating-point-level on random scenes.
        for trial in range(10):
            n = int(rng.integers(1, 40))
            w = int(rng.integers(8, 64))
            h = int(rng.integers(8, 64))
            scene = random_scene(rng, n=n, sh_degree=int(rng.integers(0, 2)))
            e, k = front_camera(w, h, distance=float(rng.uniform(2.5, 5.0)))
            tile = rasterize(scene, e, k, w, h, tile_size=int(rng.choice([8, 16])))
            brute = rasterize_bruteforce(scene, e, k, w, h)
            np.testing.assert_allclose(tile.data, brute.data, atol=1e-12)

    def test_agreement_with_offcenter_camera(self, rng):
        scene = random_scene(rng, n=20, sh_degree=1)
        from splatstream.camera import look_at
        e = look_at((2.0, 1.5, -3.5), (0.0, 0.0, 0.0))
        k = intrinsics_from_normalized(0.8, 56, 40)
        tile = rasterize(scene, e, k, 56, 40)
        brute = rasterize_bruteforce(scene, e, k, 56, 40)
        np.testing.assert_allclose(tile.data, brute.data, atol=1e-12)

    def test_faint_splats_skipped_consistently(self, rng):
        # Opacities straddling the contribution cutoff must be skipped the
        # same way by both routes.
        e, k = front_camera(32, 32)
        prims = tuple(
            isotropic_splat(rng.uniform(-1, 1, size=3), 0.3,
                            rng.uniform(0.2, 0.8, size=3),
                            opacity=float(o))
            for o in [ALPHA_CUTOFF / 2, ALPHA_CUTOFF * 2, 0.3, 0.9])
        scene = GaussianScene(prims, background=[0.1, 0.1, 0.1])
        tile = rasterize(scene, e, k, 32, 32)
        brute = rasterize_bruteforce(scene, e, k, 32, 32)
        np.testing.assert_allclose(tile.data, brute.data, atol=1e-12)
