import numpy as np
import pytest

from tactile_bench.core import (
    CycleRecord,
    FrameStack,
    Protocol,
    ProtocolKind,
    PRESET_PARAMS,
    RidgeSpec,
    RunManifest,
    ValidationError,
    preset_protocol,
)


def _stack(n=2, h=8, w=10, value=100, fps=30.0, timestamps=None):
    frames = np.full((n, h, w, 3), value, dtype=np.uint8)
    return FrameStack(frames, nominal_fps=fps, timestamps_s=timestamps)


class TestFrameStack:
    def test_basic_properties(self):
        s = _stack(n=3, h=8, w=10)
        assert s.n_frames == 3
        assert s.height == 8
        assert s.width == 10
        assert s.resolution == (10, 8)

    def test_rejects_single_frame_shape(self):
        with pytest.raises(ValidationError):
            FrameStack(np.zeros((8, 10, 3)))

    def test_rejects_wrong_channels(self):
        with pytest.raises(ValidationError):
            FrameStack(np.zeros((2, 8, 10, 4)))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            FrameStack(np.zeros((0, 8, 10, 3)))

    def test_pixels_frozen_after_construction(self):
        s = _stack()
        with pytest.raises(ValueError):
            s.frames[0, 0, 0, 0] = 1

    def test_timestamps_must_match_and_increase(self):
        _stack(n=3, timestamps=np.array([0.0, 0.1, 0.2]))
        with pytest.raises(ValidationError):
            _stack(n=3, timestamps=np.array([0.0, 0.1]))
        with pytest.raises(ValidationError):
            _stack(n=3, timestamps=np.array([0.0, 0.2, 0.2]))

    def test_equality_is_by_value(self):
        a = _stack(value=7)
        b = _stack(value=7)
        c = _stack(value=8)
        assert a == b
        assert a != c


class TestRidgeSpec:
    def test_flat_is_amplitude_zero(self):
        assert RidgeSpec(1.5, 0.0).is_flat
        assert not RidgeSpec(1.5, 0.01).is_flat

    def test_sweep_ranges_representable(self):
        RidgeSpec(0.6, 0.005)
        RidgeSpec(1.5, 0.05)

    def test_validation(self):
        with pytest.raises(ValidationError):
            RidgeSpec(0.0, 0.01)
        with pytest.raises(ValidationError):
            RidgeSpec(1.0, -0.01)
        with pytest.raises(ValidationError):
            RidgeSpec(1.0, 0.01, orientation="diagonal")


class TestProtocolPresets:
    def test_compression_preset(self):
        p = preset_protocol(ProtocolKind.CYCLIC_COMPRESSION)
        assert p.param("normal_load_n") == 15.0
        assert p.param("cycles") == 1000

    def test_local_shear_preset(self):
        p = preset_protocol(ProtocolKind.CYCLIC_LOCAL_SHEAR)
        assert p.param("normal_load_n") == 10.0
        assert p.param("lateral_load_n") == 5.0
        assert p.param("cycles") == 1000

    def test_transverse_shear_preset(self):
        p = preset_protocol(ProtocolKind.CYCLIC_TRANSVERSE_SHEAR)
        assert p.param("normal_load_n") == 15.0
        assert p.param("lateral_load_n") == 15.0

    def test_abrasion_preset(self):
        p = preset_protocol(ProtocolKind.ABRASION)
        assert p.param("normal_load_n") == 5.0
        assert p.param("total_distance_m") == 8.0
        assert p.param("distance_schedule_m") == [2.0, 4.0, 6.0, 8.0]

    def test_force_preset(self):
        p = preset_protocol(ProtocolKind.FORCE_SENSITIVITY)
        assert p.param("max_force_n") == 40.0
        assert p.param("ramp_rate_m_per_s") == 2e-6

    def test_spatial_preset(self):
        p = preset_protocol(ProtocolKind.SPATIAL_SENSITIVITY)
        assert p.param("loads_n") == [2.0, 10.0]
        assert p.param("amplitude_range_mm") == [0.005, 0.05]
        assert p.param("period_range_mm") == [0.6, 1.5]

    def test_presets_are_copies(self):
        p = preset_protocol(ProtocolKind.CYCLIC_COMPRESSION)
        p.params["cycles"] = 3
        assert PRESET_PARAMS[ProtocolKind.CYCLIC_COMPRESSION]["cycles"] == 1000

    def test_params_canonicalized_for_round_trip(self):
        p = Protocol(ProtocolKind.CYCLIC_COMPRESSION, {"resolution": (320, 240)})
        assert p.param("resolution") == [320, 240]


def _cycle(idx, loaded=True, h=8, w=10):
    return CycleRecord(
        cycle_index=idx,
        unloaded=_stack(h=h, w=w),
        loaded=_stack(h=h, w=w) if loaded else None,
    )


class TestRunManifest:
    def _manifest(self, kind, cycles):
        return RunManifest(
            protocol=Protocol(kind, {"cycles": len(cycles)}),
            resolution=(10, 8),
            cycles=tuple(cycles),
        )

    def test_valid_compression_run(self):
        run = self._manifest(ProtocolKind.CYCLIC_COMPRESSION, [_cycle(1), _cycle(2)])
        assert len(run.cycles) == 2

    def test_abrasion_must_not_carry_loaded(self):
        with pytest.raises(ValidationError, match="abrasion"):
            self._manifest(ProtocolKind.ABRASION, [_cycle(1, loaded=True)])
        self._manifest(ProtocolKind.ABRASION, [_cycle(1, loaded=False)])

    def test_other_resilience_requires_loaded(self):
        with pytest.raises(ValidationError, match="cycle 2"):
            self._manifest(
                ProtocolKind.CYCLIC_COMPRESSION, [_cycle(1), _cycle(2, loaded=False)]
            )

    def test_cycle_indices_contiguous_from_one(self):
        with pytest.raises(ValidationError, match="contiguous"):
            self._manifest(ProtocolKind.CYCLIC_COMPRESSION, [_cycle(1), _cycle(3)])

    def test_spatial_requires_mm_per_pixel(self):
        kwargs = dict(
            protocol=Protocol(ProtocolKind.SPATIAL_SENSITIVITY, {}),
            resolution=(10, 8),
            ridge=RidgeSpec(1.5, 0.05),
            load_n=10.0,
            loaded=_stack(),
            unloaded=_stack(),
        )
        with pytest.raises(ValidationError, match="mm_per_pixel"):
            RunManifest(**kwargs)
        RunManifest(mm_per_pixel=0.05, **kwargs)

    def test_force_run_needs_timestamped_frames(self):
        from tactile_bench.core import LoadSample

        forces = (LoadSample(0.0, 1.0), LoadSample(1.0, 2.0))
        with pytest.raises(ValidationError, match="timestamps"):
            RunManifest(
                protocol=Protocol(ProtocolKind.FORCE_SENSITIVITY, {}),
                resolution=(10, 8),
                frames=_stack(),
                forces=forces,
            )
        RunManifest(
            protocol=Protocol(ProtocolKind.FORCE_SENSITIVITY, {}),
            resolution=(10, 8),
            frames=_stack(n=2, timestamps=np.array([0.0, 0.5])),
            forces=forces,
        )

    def test_resolution_mismatch_names_cycle(self):
        with pytest.raises(ValidationError, match="resolution"):
            RunManifest(
                protocol=Protocol(ProtocolKind.CYCLIC_COMPRESSION, {}),
                resolution=(99, 8),
                cycles=(_cycle(1),),
            )
