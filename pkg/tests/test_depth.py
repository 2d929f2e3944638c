"""Depth rendering, binning and fusion against hand-computed oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bevkit.depth import (
    DepthBinSpec,
    DepthDistribution,
    DepthMap,
    DepthStrategy,
    depth_to_onehot,
    fuse_depth,
    render_lidar_depth,
)
from bevkit.errors import OutOfRange, ShapeMismatch
from bevkit.geometry import CameraModel, RigidTransform, camera_pose_in_ego


def _front_cam(fx=100.0, cx=8.0, cy=6.0, width=16, height=12, height_m=1.6):
    pose = camera_pose_in_ego((0.0, 0.0, height_m), 0.0)
    return CameraModel(fx, fx, cx, cy, width, height, pose.invert())


IDENT = RigidTransform.identity()


class TestRenderLidarDepth:
    def test_single_point_on_axis(self):
        # (10, 0, 1.6) is 10 m ahead on the optical axis of a camera at
        # height 1.6: exactly pixel (cx, cy) with depth 10.
        cam = _front_cam()
        dm = render_lidar_depth(cam, [(np.array([[10.0, 0.0, 1.6]]), IDENT)])
        assert dm.values[6, 8] == 10.0
        assert dm.coverage_mask().sum() == 1

    def test_zbuffer_keeps_nearest(self):
        cam = _front_cam()
        near = np.array([[5.0, 0.0, 1.6]])
        far = np.array([[10.0, 0.0, 1.6]])
        for order in ([(near, IDENT), (far, IDENT)], [(far, IDENT), (near, IDENT)]):
            dm = render_lidar_depth(cam, order)
            assert dm.values[6, 8] == 5.0

    def test_order_invariance_within_cloud(self):
        cam = _front_cam()
        rng = np.random.default_rng(0)
        pts = np.column_stack(
            [rng.uniform(3, 30, 200), rng.uniform(-2, 2, 200), rng.uniform(0, 3, 200)]
        )
        a = render_lidar_depth(cam, [(pts, IDENT)])
        b = render_lidar_depth(cam, [(pts[::-1], IDENT)])
        np.testing.assert_array_equal(a.values, b.values)

    def test_behind_camera_and_outside_image_dropped(self):
        cam = _front_cam()
        pts = np.array([
            [-5.0, 0.0, 1.6],   # behind
            [1.0, 50.0, 1.6],   # projects far outside the image
        ])
        dm = render_lidar_depth(cam, [(pts, IDENT)])
        assert dm.coverage_mask().sum() == 0

    def test_motion_carries_past_sweep(self):
        # A past point one meter behind its current position, moved
        # forward by the ego-motion transform, lands where the current
        # point would.
        cam = _front_cam()
        past = np.array([[9.0, 0.0, 1.6]])
        dm = render_lidar_depth(cam, [(past, RigidTransform.translate(1.0, 0.0, 0.0))])
        assert dm.values[6, 8] == 10.0


class TestDepthBins:
    def test_onehot_example(self):
        # spec [1, 61) with 60 bins of width 1: d = 10.5 falls in bin
        # floor((10.5 - 1) / 1) = 9.
        spec = DepthBinSpec(1.0, 61.0, 60)
        onehot = depth_to_onehot(10.5, spec)
        assert onehot[9] == 1.0
        assert onehot.sum() == 1.0

    def test_out_of_range_raises(self):
        spec = DepthBinSpec(1.0, 61.0, 60)
        for d in (0.5, 61.0, 100.0):
            with pytest.raises(OutOfRange):
                depth_to_onehot(d, spec)

    def test_bin_centers(self):
        spec = DepthBinSpec(1.0, 61.0, 60)
        centers = spec.centers()
        assert centers[0] == 1.5
        assert centers[-1] == 60.5
        assert len(centers) == 60

    def test_default_spec(self):
        spec = DepthBinSpec()
        assert (spec.d_min, spec.d_max, spec.n_bins) == (1.0, 60.0, 59)

    def test_rejects_bad_spec(self):
        with pytest.raises(ValueError):
            DepthBinSpec(0.0, 60.0, 59)
        with pytest.raises(ValueError):
            DepthBinSpec(5.0, 5.0, 10)
        with pytest.raises(ValueError):
            DepthBinSpec(1.0, 60.0, 1)


def _tiny_setup():
    """1x2 image, 3 bins over [1, 4): pixel 0 LiDAR-covered at bin 1."""
    spec = DepthBinSpec(1.0, 4.0, 3)
    lidar = DepthMap(np.array([[2.5, 0.0]]))
    predicted = DepthDistribution(np.array([[[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]]]))
    return spec, lidar, predicted


class TestFuseDepth:
    def test_predicted_ignores_lidar(self):
        spec, lidar, predicted = _tiny_setup()
        out = fuse_depth(lidar, predicted, DepthStrategy.PREDICTED, spec=spec)
        np.testing.assert_array_equal(out.values, predicted.values)

    def test_lidar_onehot_and_zero(self):
        spec, lidar, predicted = _tiny_setup()
        out = fuse_depth(lidar, predicted, DepthStrategy.LIDAR, spec=spec)
        np.testing.assert_array_equal(out.values[0, 0], [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(out.values[0, 1], [0.0, 0.0, 0.0])

    def test_fusion_overrides_covered_only(self):
        spec, lidar, predicted = _tiny_setup()
        out = fuse_depth(lidar, predicted, DepthStrategy.FUSION, spec=spec)
        np.testing.assert_array_equal(out.values[0, 0], [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(out.values[0, 1], [0.6, 0.3, 0.1])

    def test_weighted_mixes(self):
        # 0.5 * (0,1,0) + 0.5 * (0.2,0.3,0.5) = (0.1, 0.65, 0.25).
        spec, lidar, predicted = _tiny_setup()
        out = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=0.5, spec=spec)
        np.testing.assert_allclose(out.values[0, 0], [0.1, 0.65, 0.25], atol=1e-15)
        np.testing.assert_array_equal(out.values[0, 1], [0.6, 0.3, 0.1])

    def test_weighted_renormalizes_invalid_predicted(self):
        spec = DepthBinSpec(1.0, 4.0, 3)
        lidar = DepthMap(np.array([[2.5]]))
        predicted = DepthDistribution(np.zeros((1, 1, 3)))
        out = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=0.5, spec=spec)
        np.testing.assert_array_equal(out.values[0, 0], [0.0, 1.0, 0.0])

    def test_out_of_range_lidar_is_uncovered(self):
        spec = DepthBinSpec(1.0, 4.0, 3)
        lidar = DepthMap(np.array([[9.0]]))  # beyond d_max
        predicted = DepthDistribution(np.array([[[0.6, 0.3, 0.1]]]))
        out = fuse_depth(lidar, predicted, DepthStrategy.FUSION, spec=spec)
        np.testing.assert_array_equal(out.values[0, 0], [0.6, 0.3, 0.1])

    def test_shape_mismatch(self):
        spec, lidar, predicted = _tiny_setup()
        with pytest.raises(ShapeMismatch):
            fuse_depth(DepthMap(np.zeros((2, 2))), predicted, spec=spec)
        with pytest.raises(ShapeMismatch):
            fuse_depth(lidar, predicted, spec=DepthBinSpec(1.0, 4.0, 6))

    def test_strategy_accepts_strings(self):
        spec, lidar, predicted = _tiny_setup()
        out = fuse_depth(lidar, predicted, "lidar", spec=spec)
        np.testing.assert_array_equal(out.values[0, 0], [0.0, 1.0, 0.0])


@st.composite
def distributions(draw, height=2, width=3, n_bins=4):
    rows = draw(
        st.lists(
            st.lists(st.floats(0.01, 1.0), min_size=n_bins, max_size=n_bins),
            min_size=height * width,
            max_size=height * width,
        )
    )
    arr = np.array(rows, dtype=float).reshape(height, width, n_bins)
    return DepthDistribution(arr / arr.sum(axis=2, keepdims=True))


@st.composite
def lidar_maps(draw, height=2, width=3):
    vals = draw(
        st.lists(
            st.one_of(st.just(0.0), st.floats(1.0, 4.99)),
            min_size=height * width,
            max_size=height * width,
        )
    )
    return DepthMap(np.array(vals).reshape(height, width))


class TestFusionProperties:
    SPEC = DepthBinSpec(1.0, 5.0, 4)

    @given(lidar_maps(), distributions())
    @settings(max_examples=30, deadline=None)
    def test_weighted_limits(self, lidar, predicted):
        fusion = fuse_depth(lidar, predicted, DepthStrategy.FUSION, spec=self.SPEC)
        w1 = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=1.0, spec=self.SPEC)
        w0 = fuse_depth(lidar, predicted, DepthStrategy.WEIGHTED, w=0.0, spec=self.SPEC)
        np.testing.assert_allclose(w1.values, fusion.values, atol=1e-12)
        np.testing.assert_allclose(w0.values, predicted.values, atol=1e-12)

    @given(lidar_maps(), distributions())
    @settings(max_examples=30, deadline=None)
    def test_fusion_equals_lidar_on_covered(self, lidar, predicted):
        fusion = fuse_depth(lidar, predicted, DepthStrategy.FUSION, spec=self.SPEC)
        only = fuse_depth(lidar, predicted, DepthStrategy.LIDAR, spec=self.SPEC)
        covered = lidar.coverage_mask()
        np.testing.assert_array_equal(fusion.values[covered], only.values[covered])

    @given(lidar_maps(), distributions(), st.floats(0.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_all_strategies_keep_normalization(self, lidar, predicted, w):
        for strategy in DepthStrategy:
            out = fuse_depth(lidar, predicted, strategy, w=w, spec=self.SPEC)
            sums = out.values.sum(axis=2)
            assert np.all((np.abs(sums - 1.0) <= 1e-6) | (sums == 0.0))


class TestDistributionInvariants:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DepthDistribution(np.full((1, 1, 4), 0.5))

    def test_rejects_negative(self):
        arr = np.zeros((1, 1, 4))
        arr[0, 0] = [1.5, -0.5, 0.0, 0.0]
        with pytest.raises(ValueError):
            DepthDistribution(arr)

    def test_valid_mask(self):
        arr = np.zeros((1, 2, 4))
        arr[0, 0] = [0.25, 0.25, 0.25, 0.25]
        dist = DepthDistribution(arr)
        np.testing.assert_array_equal(dist.valid_mask(), [[True, False]])
