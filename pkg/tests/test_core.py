"""Domain containers, torus rescaling, and the binary container formats."""

import json

import numpy as np
import pytest

from phasorfield import (
    ContainerFormatError,
    CuboidGrid,
    ExplicitVoxels,
    FrequencySlices,
    FrustumGrid,
    InvalidMagicError,
    NonFiniteDataError,
    NonPlanarRelay,
    NonUniformPlanarRelay,
    PointList,
    ReconstructionVolume,
    TransientMeasurement,
    TruncatedPayloadError,
    UniformRelay,
    UnsupportedVersionError,
    ValidationError,
    VoxelPlane,
    illumination_coordinates,
    read_dataset,
    read_volume,
    rescale_to_torus,
    write_dataset,
    write_pgm,
    write_volume,
)
from phasorfield.core import (
    TorusMap,
    UniformGrid2D,
    UniformGrid3D,
    grid_coordinates,
)

from helpers import centered_grid2d, centered_relay


# ---------------------------------------------------------------------------
# Grids and point lists
# ---------------------------------------------------------------------------


class TestUniformGrids:
    def test_coordinates_and_center(self):
        g = UniformGrid2D(3, 2, 0.5, 0.25, -1.0, 2.0, z=0.75)
        assert np.allclose(g.x_coords(), [-1.0, -0.5, 0.0])
        assert np.allclose(g.y_coords(), [2.0, 2.25])
        cx, cy = g.center()
        assert cx == -1.0 + 1 * 0.5 and cy == 2.0 + 1 * 0.25
        assert g.count == 6

    def test_grid3d_z_coords(self):
        g = UniformGrid3D(2, 2, 4, 0.1, 0.1, 0.05, 0.0, 0.0, 1.0)
        assert np.allclose(g.z_coords(), [1.0, 1.05, 1.1, 1.15])
        assert g.count == 16

    @pytest.mark.parametrize("bad", [
        dict(nx=0, ny=2, dx=0.1, dy=0.1, x0=0.0, y0=0.0),
        dict(nx=2, ny=2, dx=0.0, dy=0.1, x0=0.0, y0=0.0),
        dict(nx=2, ny=2, dx=0.1, dy=-0.1, x0=0.0, y0=0.0),
    ])
    def test_grid2d_rejects_degenerate(self, bad):
        with pytest.raises(ValidationError):
            UniformGrid2D(**bad)

    def test_grid_coordinates_is_row_major_in_y(self):
        g = UniformGrid2D(2, 2, 0.5, 0.5, 0.0, 0.0)
        pts = grid_coordinates(g).points
        assert np.allclose(pts, [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]])


class TestPointList:
    def test_dims(self):
        assert PointList(np.zeros((4, 2))).dim == 2
        assert PointList(np.zeros((4, 3))).dim == 3

    @pytest.mark.parametrize("shape", [(4,), (4, 1), (4, 4), (2, 2, 2)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(ValidationError):
            PointList(np.zeros(shape))

    def test_rejects_nonfinite(self):
        pts = np.zeros((2, 2))
        pts[1, 1] = np.nan
        with pytest.raises(ValidationError):
            PointList(pts)

    def test_as_3d_lifts_planar_points(self):
        p = PointList(np.array([[1.0, 2.0], [3.0, 4.0]]))
        lifted = p.as_3d(0.5)
        assert np.allclose(lifted, [[1.0, 2.0, 0.5], [3.0, 4.0, 0.5]])

    def test_as_3d_on_3d_points_is_identity(self):
        pts = np.array([[1.0, 2.0, 3.0]])
        assert np.allclose(PointList(pts).as_3d(), pts)


class TestRelays:
    def test_uniform_relay_coordinates(self):
        relay = centered_relay(4, 0.25, z=0.5)
        coords = relay.coordinates()
        assert coords.shape == (16, 3)
        assert np.allclose(coords[:, 2], 0.5)
        assert relay.count == 16 and relay.z == 0.5 and relay.kind == "uniform"

    def test_nonuniform_planar_relay(self):
        relay = NonUniformPlanarRelay(PointList(np.array([[0.0, 0.1]])), z=0.2)
        assert np.allclose(relay.coordinates(), [[0.0, 0.1, 0.2]])
        assert relay.kind == "nonuniform_planar"

    def test_nonplanar_relay_needs_3d_points(self):
        with pytest.raises(ValidationError):
            NonPlanarRelay(PointList(np.array([[0.0, 0.1]])))
        relay = NonPlanarRelay(PointList(np.array([[0.0, 0.1, 0.3], [0.0, 0.0, 0.1]])))
        assert relay.z_extent == pytest.approx(0.2)
        assert relay.kind == "nonplanar"

    def test_illumination_coordinates_planar_supplies_z(self):
        relay = centered_relay(2, 0.1, z=0.25)
        ill = PointList(np.array([[0.0, 0.0]]))
        assert np.allclose(illumination_coordinates(relay, ill), [[0.0, 0.0, 0.25]])

    def test_illumination_coordinates_3d_passthrough(self):
        relay = NonPlanarRelay(PointList(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.1]])))
        ill = PointList(np.array([[0.1, 0.2, 0.3]]))
        assert np.allclose(illumination_coordinates(relay, ill), [[0.1, 0.2, 0.3]])

    def test_planar_illuminations_need_planar_relay(self):
        relay = NonPlanarRelay(PointList(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.1]])))
        with pytest.raises(ValidationError):
            illumination_coordinates(relay, PointList(np.array([[0.0, 0.0]])))


# ---------------------------------------------------------------------------
# Measurements and frequency slices
# ---------------------------------------------------------------------------


class TestTransientMeasurement:
    def _relay(self):
        return centered_relay(2, 0.1)

    def test_accepts_matching_shapes(self):
        m = TransientMeasurement(self._relay(), PointList(np.zeros((1, 2))),
                                 np.zeros((1, 4, 8)), delta_t=1e-12)
        assert (m.n_illum, m.n_detect, m.n_bins) == (1, 4, 8)

    @pytest.mark.parametrize("shape", [(2, 4, 8), (1, 3, 8)])
    def test_rejects_axis_mismatch(self, shape):
        with pytest.raises(ValidationError):
            TransientMeasurement(self._relay(), PointList(np.zeros((1, 2))),
                                 np.zeros(shape), delta_t=1e-12)

    def test_rejects_negative_counts_and_bad_dt(self):
        h = np.zeros((1, 4, 8))
        h[0, 0, 0] = -1.0
        with pytest.raises(ValidationError):
            TransientMeasurement(self._relay(), PointList(np.zeros((1, 2))), h, 1e-12)
        with pytest.raises(ValidationError):
            TransientMeasurement(self._relay(), PointList(np.zeros((1, 2))),
                                 np.zeros((1, 4, 8)), delta_t=0.0)


class TestFrequencySlices:
    def test_requires_increasing_frequencies(self):
        relay = centered_relay(2, 0.1)
        ill = PointList(np.zeros((1, 2)))
        with pytest.raises(ValidationError):
            FrequencySlices(np.array([2.0e9, 1.0e9]), np.zeros((1, 4, 2), complex),
                            relay, ill)

    def test_shortest_wavelength(self):
        relay = centered_relay(2, 0.1)
        ill = PointList(np.zeros((1, 2)))
        sl = FrequencySlices(np.array([1.0e10, 2.0e10]),
                             np.zeros((1, 4, 2), complex), relay, ill)
        assert sl.shortest_wavelength == pytest.approx(2 * np.pi * 299792458.0 / 2.0e10)

    def test_accepts_noncontiguous_coefficients(self):
        relay = centered_relay(2, 0.1)
        ill = PointList(np.zeros((2, 2)))
        big = (np.arange(2 * 4 * 6) + 1j).reshape(2, 4, 6)
        sl = FrequencySlices(np.array([1.0e10, 2.0e10]), big[:, :, ::3], relay, ill)
        assert sl.n_freq == 2


# ---------------------------------------------------------------------------
# Voxel grids
# ---------------------------------------------------------------------------


class TestVoxelGrids:
    def test_cuboid_coordinates_match_array3d_layout(self):
        g = UniformGrid3D(3, 2, 2, 0.1, 0.2, 0.3, 0.0, 0.0, 1.0)
        cub = CuboidGrid(g)
        coords = cub.coordinates().reshape(2, 2, 3, 3)
        assert np.allclose(coords[1, 0, 2], [0.2, 0.0, 1.3])
        assert cub.shape == (2, 2, 3)
        assert cub.kind == "cuboid"

    def test_frustum_linear_growth_law(self):
        base = centered_grid2d(4, 0.1, z=0.0)
        zs = [0.0, 0.5, 1.0]
        fr = FrustumGrid.linear(base, zs, alpha0=0.5)
        x_in = 4 * 0.1
        assert fr.alphas[0] == pytest.approx(1.0)
        assert fr.alphas[1] == pytest.approx(x_in / (x_in + 0.5 / 0.5))
        assert np.all(np.diff(fr.alphas) < 0)
        dxk, dyk = fr.plane_pitch(2)
        assert dxk == pytest.approx(0.1 / fr.alphas[2])
        assert fr.count == 3 * 16 and fr.kind == "frustum"

    def test_frustum_plane_extent_widens(self):
        base = centered_grid2d(4, 0.1)
        fr = FrustumGrid.linear(base, [0.0, 1.0], alpha0=0.5)
        xs0, _ = fr.plane_xy(0)
        xs1, _ = fr.plane_xy(1)
        assert xs1.max() - xs1.min() > xs0.max() - xs0.min()

    def test_frustum_rejects_planes_before_base(self):
        base = centered_grid2d(4, 0.1, z=1.0)
        with pytest.raises(ValidationError):
            FrustumGrid.linear(base, [0.5], alpha0=0.5)

    def test_explicit_voxels(self):
        planes = (VoxelPlane(1.0, PointList(np.array([[0.0, 0.0], [0.1, 0.0]]))),
                  VoxelPlane(1.5, PointList(np.array([[0.0, 0.2]]))))
        ev = ExplicitVoxels(planes)
        assert ev.count == 3
        assert np.allclose(ev.coordinates()[-1], [0.0, 0.2, 1.5])
        with pytest.raises(ValidationError):
            VoxelPlane(1.0, PointList(np.array([[0.0, 0.0, 0.0]])))

    def test_volume_container_shapes(self):
        g = UniformGrid3D(2, 2, 2, 0.1, 0.1, 0.1, 0.0, 0.0, 1.0)
        cub = CuboidGrid(g)
        v = ReconstructionVolume(cub, np.arange(8.0) + 0j)
        assert v.n_frames == 1 and v.as_array3d().shape == (2, 2, 2)
        frames = np.stack([np.arange(8.0) + 0j, np.zeros(8) + 0j])
        vt = ReconstructionVolume(cub, frames, times=np.array([0.0, 1.0e-9]))
        assert vt.n_frames == 2 and np.allclose(vt.frame(1), 0)
        with pytest.raises(ValidationError):
            ReconstructionVolume(cub, np.arange(7.0) + 0j)


# ---------------------------------------------------------------------------
# Torus rescaling
# ---------------------------------------------------------------------------


class TestTorus:
    def test_forward_inverse_roundtrip(self, rng):
        pts = rng.uniform(-3.0, 5.0, size=(40, 2))
        mapped, torus = rescale_to_torus(PointList(pts), [-3.0, -3.0], [5.0, 5.0])
        assert np.all(mapped.points >= -np.pi) and np.all(mapped.points < np.pi)
        back = torus.inverse(mapped.points)
        assert np.allclose(back, pts, atol=1e-12)

    def test_bounds_are_half_open(self):
        with pytest.raises(ValidationError):
            rescale_to_torus(PointList(np.array([[1.0, 0.0]])), [0.0, 0.0], [1.0, 1.0])
        mapped, _ = rescale_to_torus(PointList(np.array([[0.0, 0.0]])),
                                     [0.0, 0.0], [1.0, 1.0])
        assert np.allclose(mapped.points, -np.pi)

    def test_rejects_degenerate_box(self):
        with pytest.raises(ValidationError):
            TorusMap(np.array([0.0, 0.0]), np.array([1.0, 0.0]))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            rescale_to_torus(PointList(np.zeros((1, 3))), [0.0, 0.0], [1.0, 1.0])


# ---------------------------------------------------------------------------
# Binary containers
# ---------------------------------------------------------------------------


def _small_measurement(relay=None):
    relay = relay if relay is not None else centered_relay(2, 0.1)
    ill = PointList(np.array([[0.0, 0.0]]))
    hist = np.linspace(0.0, 1.0, 1 * relay.count * 8).reshape(1, relay.count, 8)
    return TransientMeasurement(relay, ill, hist, delta_t=16e-12, t0=1e-10)


class TestDatasetContainer:
    @pytest.mark.parametrize("relay", [
        centered_relay(2, 0.1, z=0.3),
        NonUniformPlanarRelay(PointList(np.array([[0.0, 0.0], [0.1, 0.2],
                                                  [0.3, -0.1]])), z=0.1),
        NonPlanarRelay(PointList(np.array([[0.0, 0.0, 0.0], [0.1, 0.2, 0.05]]))),
    ])
    def test_roundtrip_all_relay_kinds(self, tmp_path, relay):
        m = _small_measurement(relay)
        path = str(tmp_path / "d.nls1")
        write_dataset(m, path)
        back = read_dataset(path)
        assert back.relay.kind == m.relay.kind
        assert np.allclose(back.relay.coordinates(), m.relay.coordinates())
        assert back.delta_t == m.delta_t and back.t0 == m.t0
        # payload is float32 on disk
        assert np.array_equal(back.histograms,
                              m.histograms.astype(np.float32).astype(np.float64))

    def test_rewrites_are_byte_identical(self, tmp_path):
        m = _small_measurement()
        p1, p2 = str(tmp_path / "a.nls1"), str(tmp_path / "b.nls1")
        write_dataset(m, p1)
        write_dataset(m, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_sidecar_is_plain_json_without_timestamps(self, tmp_path):
        m = _small_measurement()
        path = str(tmp_path / "d.nls1")
        write_dataset(m, path)
        doc = json.load(open(path + ".json"))
        assert doc["n_bins"] == 8 and doc["relay"]["kind"] == "uniform"
        assert not any("time" in k.lower() and k != "t0" for k in doc
                       if k not in ("delta_t",))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.nls1"
        path.write_bytes(b"JUNKxxxxxxxxxxxxxxxx")
        with pytest.raises(InvalidMagicError):
            read_dataset(str(path))

    def test_unsupported_version(self, tmp_path):
        m = _small_measurement()
        path = tmp_path / "d.nls1"
        write_dataset(m, str(path))
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(UnsupportedVersionError):
            read_dataset(str(path))

    def test_truncated_payload(self, tmp_path):
        m = _small_measurement()
        path = tmp_path / "d.nls1"
        write_dataset(m, str(path))
        raw = path.read_bytes()
        path.write_bytes(raw[:len(raw) - 5])
        with pytest.raises(TruncatedPayloadError):
            read_dataset(str(path))

    def test_nonfinite_payload(self, tmp_path):
        m = _small_measurement()
        path = tmp_path / "d.nls1"
        write_dataset(m, str(path))
        raw = bytearray(path.read_bytes())
        raw[-4:] = np.float32(np.nan).tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(NonFiniteDataError):
            read_dataset(str(path))

    def test_volume_file_is_rejected(self, tmp_path):
        g = UniformGrid3D(2, 2, 2, 0.1, 0.1, 0.1, 0.0, 0.0, 1.0)
        v = ReconstructionVolume(CuboidGrid(g), np.zeros(8, complex))
        path = str(tmp_path / "v.vol")
        write_volume(v, path)
        with pytest.raises(ContainerFormatError):
            read_dataset(path)


class TestVolumeContainer:
    def test_cuboid_roundtrip(self, tmp_path, rng):
        g = UniformGrid3D(3, 2, 2, 0.1, 0.1, 0.1, -0.1, 0.0, 1.0)
        field = rng.normal(size=12) + 1j * rng.normal(size=12)
        v = ReconstructionVolume(CuboidGrid(g), field)
        path = str(tmp_path / "v.vol")
        write_volume(v, path)
        back = read_volume(path)
        assert back.grid.kind == "cuboid" and back.n_frames == 1
        assert np.array_equal(back.field,
                              field.astype(np.complex64).astype(np.complex128))
        assert np.allclose(back.grid.coordinates(), v.grid.coordinates())

    def test_frustum_multiframe_roundtrip(self, tmp_path, rng):
        base = centered_grid2d(3, 0.1)
        fr = FrustumGrid.linear(base, [0.5, 0.8], alpha0=0.7)
        frames = (rng.normal(size=(2, fr.count))
                  + 1j * rng.normal(size=(2, fr.count)))
        times = np.array([0.0, 2.0e-9])
        v = ReconstructionVolume(fr, frames, times)
        path = str(tmp_path / "v.vol")
        write_volume(v, path)
        back = read_volume(path)
        assert back.grid.kind == "frustum" and back.n_frames == 2
        assert np.allclose(back.times, times)
        assert np.allclose(back.grid.coordinates(), fr.coordinates())

    def test_explicit_roundtrip(self, tmp_path):
        ev = ExplicitVoxels((VoxelPlane(1.0, PointList(np.array([[0.0, 0.1]]))),))
        v = ReconstructionVolume(ev, np.array([1 + 2j]))
        path = str(tmp_path / "v.vol")
        write_volume(v, path)
        back = read_volume(path)
        assert back.grid.kind == "explicit"
        assert np.allclose(back.grid.coordinates(), ev.coordinates())

    def test_dataset_file_is_rejected(self, tmp_path):
        m = _small_measurement()
        path = str(tmp_path / "d.nls1")
        write_dataset(m, path)
        with pytest.raises(ContainerFormatError):
            read_volume(path)


class TestPgm:
    def test_golden_bytes(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(np.array([[0.0, 1.0], [2.0, 4.0]]), str(path))
        assert path.read_bytes() == b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255])

    def test_all_zero_image(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(np.zeros((2, 3)), str(path))
        assert path.read_bytes() == b"P5\n3 2\n255\n" + bytes(6)

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValidationError):
            write_pgm(np.zeros(4), str(tmp_path / "x.pgm"))
