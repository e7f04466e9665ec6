import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from discpool.exceptions import OutOfRangeError, ShapeMismatchError
from discpool.fmap import SpatialShape
from discpool.locality import (
    LocalityConfig,
    coord_omega_big,
    coord_omega_small,
    index_of_coord,
    penalty_matrix,
    penalty_vector,
    penalty_vector_expanded,
)


def _cfg(rows, cols, s):
    return LocalityConfig.from_scale(SpatialShape(rows, cols), s)


class TestCoordinates:
    def test_first_and_last(self):
        shape = SpatialShape(3, 5)
        assert coord_omega_big(1, shape) == (1, 1)
        assert coord_omega_big(shape.size, shape) == (3, 5)

    def test_index_formula(self):
        # n = 5 with I = 3: i = (4 mod 3) + 1 = 2, j = (4 div 3) + 1 = 2
        assert coord_omega_big(5, SpatialShape(3, 3)) == (2, 2)

    @pytest.mark.parametrize("n", [0, 10])
    def test_out_of_range(self, n):
        with pytest.raises(OutOfRangeError):
            coord_omega_big(n, SpatialShape(3, 3))

    def test_inverse(self):
        shape = SpatialShape(4, 3)
        for n in range(1, shape.size + 1):
            assert index_of_coord(*coord_omega_big(n, shape), shape) == n


class TestConfig:
    def test_from_scale(self):
        cfg = _cfg(8, 6, 2)
        assert cfg.output_shape == SpatialShape(4, 3)
        assert cfg.n_outputs == cfg.n_inputs // 4

    def test_non_integer_scale(self):
        cfg = _cfg(6, 3, 1.5)
        assert cfg.output_shape == SpatialShape(4, 2)

    @pytest.mark.parametrize("shape,s", [((5, 4), 2), ((4, 4), 3), ((4, 4), 0)])
    def test_bad_scale(self, shape, s):
        with pytest.raises(ShapeMismatchError):
            _cfg(*shape, s)

    def test_anisotropic_rejected(self):
        with pytest.raises(ShapeMismatchError):
            LocalityConfig(SpatialShape(4, 4), SpatialShape(2, 1), 2.0)


class TestPenalty:
    def test_anchor_is_zero(self):
        cfg = _cfg(4, 4, 2)
        m = index_of_coord(1, 1, cfg.output_shape)
        c = penalty_vector(m, cfg).entries
        assert c[index_of_coord(2, 2, cfg.input_shape) - 1] == 0

    def test_distance_value(self):
        cfg = _cfg(4, 4, 2)
        m = index_of_coord(1, 1, cfg.output_shape)
        c = penalty_vector(m, cfg).entries
        assert c[index_of_coord(4, 1, cfg.input_shape) - 1] == (4 - 2) ** 2 + (1 - 2) ** 2 == 5

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            penalty_vector(5, _cfg(4, 4, 2))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 2, 3, 1.5]), st.data())
    def test_expanded_formula_matches(self, i_out, j_out, s, data):
        assume(float(i_out * s).is_integer() and float(j_out * s).is_integer())
        cfg = LocalityConfig(SpatialShape(round(i_out * s), round(j_out * s)), SpatialShape(i_out, j_out), s)
        m = data.draw(st.integers(1, cfg.n_outputs))
        direct = penalty_vector(m, cfg).entries
        expanded = penalty_vector_expanded(m, cfg)
        np.testing.assert_allclose(direct, expanded, rtol=0, atol=1e-12)

    def test_integer_entries_for_integer_scale(self):
        cfg = _cfg(6, 9, 3)
        pm = penalty_matrix(cfg)
        assert np.array_equal(pm, np.round(pm))
        assert np.all(pm >= 0)

    def test_single_zero_per_location(self):
        cfg = _cfg(6, 4, 2)
        pm = penalty_matrix(cfg)
        assert np.all((pm == 0).sum(axis=1) == 1)

    def test_no_zero_when_anchor_off_grid(self):
        cfg = _cfg(3, 3, 1.5)
        c = penalty_vector(1, cfg).entries
        assert not np.any(c == 0)

    def test_rotation_equivariance(self):
        # 90 degree rotation of an L x L grid maps (i, j) to (j, L + 1 - i); with
        # 1-based anchors s*(i', j') this maps anchors onto anchors only after the
        # output rotation (i', j') -> (j', L' + 1 - i') shifts by s - 1, so compare
        # squared distances to the rotated anchor point directly.
        size, s = 6, 2
        cfg = _cfg(size, size, s)
        out = cfg.output_shape.rows
        for m in range(1, cfg.n_outputs + 1):
            io, jo = coord_omega_small(m, cfg.output_shape)
            c = penalty_vector(m, cfg).entries
            ax, ay = s * io, s * jo
            rot_anchor = np.array([ay, size + 1 - ax])
            for n in range(1, cfg.n_inputs + 1):
                i, j = coord_omega_big(n, cfg.input_shape)
                ri, rj = j, size + 1 - i
                assert c[n - 1] == (ri - rot_anchor[0]) ** 2 + (rj - rot_anchor[1]) ** 2
        assert out == 3
