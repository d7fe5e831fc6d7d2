import numpy as np
import pytest

from tactile_bench.core import (
    Protocol,
    ProtocolKind,
    RidgeSpec,
    ValidationError,
)
from tactile_bench.manifest import load_manifest, save_manifest
from tactile_bench.metrics import force_curve, mae, mae_series, saturation_force
from tactile_bench.simulator import (
    MATERIAL_PRESETS,
    MaterialProfile,
    SceneSpec,
    WearEvent,
    child_seed,
    generate_force_ramp,
    generate_run,
    illumination_field,
    render,
    render_stack,
    spatial_sweep_surfaces,
)
from tactile_bench.spatial import PipelineConfig, band_power, pipeline_psd, row_psd


QUIET = MaterialProfile(name="quiet", gain=900.0, noise_sigma=0.0)


def _flat_scene(load=0.0, resolution=(48, 36), mpp=0.05):
    return SceneSpec(kind="flat", load_n=load, mm_per_pixel=mpp, resolution=resolution)


class TestRender:
    def test_flat_noise_free_is_exactly_illumination(self):
        scene = _flat_scene()
        for seed in (0, 7, 123):
            frame = render(scene, QUIET, seed=seed)
            assert np.array_equal(frame, illumination_field(scene.resolution, seed))

    def test_same_seed_bit_identical(self):
        scene = SceneSpec(
            kind="indenter", load_n=10.0, mm_per_pixel=0.05, resolution=(48, 36),
            tip_radius_mm=2.0,
        )
        mat = MATERIAL_PRESETS["si_like"]
        assert np.array_equal(render(scene, mat, 5), render(scene, mat, 5))

    def test_distinct_seeds_differ(self):
        scene = _flat_scene()
        mat = MATERIAL_PRESETS["si_like"]
        assert not np.array_equal(render(scene, mat, 1), render(scene, mat, 2))

    def test_ridged_noise_free_peaks_at_ridge_bin(self):
        # The spectral pipeline itself locates the injected frequency.
        mpp = 0.05
        ridge = RidgeSpec(period_mm=0.8, amplitude_mm=0.04)
        scene = SceneSpec(
            kind="ridged", load_n=12.0, mm_per_pixel=mpp, resolution=(160, 120), ridge=ridge
        )
        frame = render(scene, QUIET, seed=4)
        delta = frame - illumination_field(scene.resolution, 4)
        crop = delta[50:70, 48:112, :]  # well inside the contact patch
        spec = row_psd(crop, PipelineConfig(), mm_per_pixel=mpp)
        peak_freq = spec.bin_freqs[int(np.argmax(spec.psd))]
        df = spec.bin_freqs[1]
        assert abs(peak_freq - 1.0 / ridge.period_mm) <= df / 2 + 1e-12

    def test_ridge_below_nyquist_rejected(self):
        with pytest.raises(ValidationError, match="Nyquist"):
            SceneSpec(
                kind="ridged",
                load_n=2.0,
                mm_per_pixel=0.05,
                resolution=(64, 48),
                ridge=RidgeSpec(period_mm=0.09, amplitude_mm=0.01),
            )


class TestRenderStack:
    def test_single_frame_equals_render(self):
        scene = _flat_scene()
        mat = MATERIAL_PRESETS["pu_like"]
        stack = render_stack(scene, mat, n_frames=1, seed=9)
        assert np.array_equal(stack.frames[0], render(scene, mat, seed=9))

    def test_average_approaches_clean_image(self):
        scene = _flat_scene(resolution=(32, 24))
        sigma = 2.0
        mat = MaterialProfile(name="m", gain=900.0, noise_sigma=sigma)
        stack = render_stack(scene, mat, n_frames=100, seed=1)
        clean = illumination_field(scene.resolution, 1)
        err = np.abs(stack.frames.mean(axis=0) - clean)
        bound = 3.0 * sigma / 10.0
        assert np.mean(err <= bound) >= 0.995
        assert np.max(err) <= 2.0 * bound

    def test_distinct_seeds_differ(self):
        scene = _flat_scene()
        mat = MATERIAL_PRESETS["si_like"]
        a = render_stack(scene, mat, 2, seed=1)
        b = render_stack(scene, mat, 2, seed=2)
        assert not np.array_equal(a.frames, b.frames)

    def test_zero_frames_rejected(self):
        with pytest.raises(ValidationError):
            render_stack(_flat_scene(), QUIET, n_frames=0, seed=0)


class TestMaterials:
    def test_presets_exist(self):
        assert set(MATERIAL_PRESETS) == {"si_like", "pu_like"}

    def test_drive_zero_at_no_load(self):
        for mat in MATERIAL_PRESETS.values():
            assert mat.drive(0.0) == 0.0

    def test_linear_drive(self):
        mat = MATERIAL_PRESETS["pu_like"]
        assert mat.drive(5.0) == pytest.approx(0.5)
        assert mat.drive(40.0) == pytest.approx(4.0)

    def test_saturating_drive_knee(self):
        mat = MATERIAL_PRESETS["si_like"]
        assert mat.drive(10.0) == pytest.approx(1.0)
        post = mat.drive(40.0) - mat.drive(10.0)
        pre = mat.drive(10.0) - mat.drive(0.0)
        assert post / 3.0 == pytest.approx(0.1 * pre, rel=1e-9)

    def test_validation(self):
        with pytest.raises(ValidationError):
            MaterialProfile(name="bad", gain=-1.0)
        with pytest.raises(ValidationError):
            MaterialProfile(name="bad", gain=1.0, response="cubic")
        with pytest.raises(ValidationError):
            MaterialProfile(name="bad", gain=1.0, post_knee_fraction=1.5)


class TestWearEvent:
    def test_severity_profile(self):
        e = WearEvent("puncture", onset_cycle=10, severity=0.8)
        assert e.severity_at(9, 100) == 0.0
        assert e.severity_at(10, 100) == pytest.approx(0.4)
        assert e.severity_at(100, 100) == pytest.approx(0.8)
        values = [e.severity_at(c, 100) for c in range(1, 101)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_validation(self):
        with pytest.raises(ValidationError):
            WearEvent("melting", 1, 0.5)
        with pytest.raises(ValidationError):
            WearEvent("puncture", 0, 0.5)
        with pytest.raises(ValidationError):
            WearEvent("puncture", 1, 1.5)


def _proto(kind=ProtocolKind.CYCLIC_COMPRESSION, cycles=6, frames=2, resolution=(64, 48), **extra):
    params = {
        "normal_load_n": 15.0,
        "cycles": cycles,
        "tip_diameter_mm": 4.0,
        "frames_per_stack": frames,
        "fps": 30.0,
        "resolution": list(resolution),
    }
    params.update(extra)
    return Protocol(kind, params)


class TestGenerateRun:
    def test_no_wear_mae_stays_below_noise_floor_bound(self):
        mat = MATERIAL_PRESETS["si_like"]
        run = generate_run(_proto(cycles=30, resolution=(96, 72)), mat, seed=5)
        series = mae_series(run)
        # Monte-Carlo noise floor: averaged-stack pairs over a flat field.
        rng = np.random.default_rng(999)
        base = illumination_field((96, 72), 5)
        floors = []
        for _ in range(10):
            a = np.rint(base + rng.normal(0, mat.noise_sigma, (2, *base.shape))).mean(axis=0)
            b = np.rint(base + rng.normal(0, mat.noise_sigma, (2, *base.shape))).mean(axis=0)
            floors.append(mae(a, b))
        floor = float(np.mean(floors))
        assert all(v < 3.0 * floor for v in series.mae_unloaded[1:])

    def test_wear_applies_to_unloaded_and_loaded(self):
        mat = MATERIAL_PRESETS["si_like"]
        run = generate_run(
            _proto(cycles=4, resolution=(96, 72)),
            mat,
            wear=[WearEvent("tear", onset_cycle=2, severity=1.0)],
            seed=8,
        )
        series = mae_series(run)
        assert series.mae_unloaded[2] > 5 * series.mae_unloaded[0] + 0.5
        assert series.mae_loaded[2] > 5 * series.mae_loaded[0] + 0.5

    def test_all_wear_modes_render(self):
        mat = MATERIAL_PRESETS["si_like"]
        for mode in ("puncture", "tear", "delamination", "abrasion_speckle"):
            run = generate_run(
                _proto(cycles=2, resolution=(64, 48)),
                mat,
                wear=[WearEvent(mode, onset_cycle=1, severity=0.7)],
                seed=3,
            )
            series = mae_series(run)
            assert series.mae_unloaded[1] >= 0.0

    def test_abrasion_has_no_loaded_stacks_and_four_increments(self):
        proto = _proto(ProtocolKind.ABRASION, distance_schedule_m=[2.0, 4.0, 6.0, 8.0])
        run = generate_run(proto, MATERIAL_PRESETS["pu_like"], seed=2)
        assert len(run.cycles) == 4
        assert all(rec.loaded is None for rec in run.cycles)
        assert run.protocol.param("distance_schedule_m") == [2.0, 4.0, 6.0, 8.0]

    def test_onset_beyond_final_cycle_rejected(self):
        with pytest.raises(ValidationError, match="beyond"):
            generate_run(
                _proto(cycles=5),
                MATERIAL_PRESETS["si_like"],
                wear=[WearEvent("puncture", onset_cycle=6, severity=0.5)],
                seed=0,
            )

    def test_truth_sidecar_round_trips(self, tmp_path):
        events = [WearEvent("puncture", 2, 0.5, location=(10.0, 12.0))]
        run = generate_run(_proto(cycles=3), MATERIAL_PRESETS["si_like"], wear=events, seed=6)
        assert run.truth["seed"] == 6
        assert run.truth["events"][0]["mode"] == "puncture"
        save_manifest(run, tmp_path / "run")
        assert load_manifest(tmp_path / "run").truth == run.truth

    def test_deterministic_across_calls(self):
        a = generate_run(_proto(cycles=2), MATERIAL_PRESETS["si_like"], seed=3)
        b = generate_run(_proto(cycles=2), MATERIAL_PRESETS["si_like"], seed=3)
        assert a == b

    def test_wear_rejected_for_non_resilience(self):
        proto = Protocol(
            ProtocolKind.FORCE_SENSITIVITY, {"n_samples": 8, "resolution": [32, 24]}
        )
        with pytest.raises(ValidationError, match="resilience"):
            generate_run(
                proto,
                MATERIAL_PRESETS["si_like"],
                wear=[WearEvent("tear", 1, 0.5)],
                seed=0,
            )


class TestGenerateForceRamp:
    def test_linear_profile_constant_slope(self):
        mat = MaterialProfile(name="lin", gain=450.0, response="linear", noise_sigma=0.0)
        frames, forces = generate_force_ramp(
            mat, max_force=40.0, n_samples=120, seed=1, resolution=(80, 60),
            force_noise_n=0.0,
        )
        curve = force_curve(frames, forces)
        f, m = curve.loading_samples()
        sel = (f >= 2.0) & (f <= 38.0)
        f, m = f[sel], m[sel]
        mid = len(f) // 2
        slope_lo = np.polyfit(f[:mid], m[:mid], 1)[0]
        slope_hi = np.polyfit(f[mid:], m[mid:], 1)[0]
        assert slope_hi == pytest.approx(slope_lo, rel=0.01)

    def test_saturating_profile_detected_in_window(self):
        mat = MaterialProfile(
            name="sat", gain=1200.0, response="saturating",
            knee_force_n=10.0, post_knee_fraction=0.1, noise_sigma=0.0,
        )
        frames, forces = generate_force_ramp(
            mat, max_force=40.0, n_samples=160, seed=2, resolution=(80, 60),
            force_noise_n=0.0,
        )
        sat = saturation_force(force_curve(frames, forces), 0.5)
        assert sat is not None
        assert 8.0 <= sat <= 14.0

    def test_saturating_slope_ratio(self):
        mat = MaterialProfile(
            name="sat", gain=1200.0, response="saturating",
            knee_force_n=10.0, post_knee_fraction=0.1, noise_sigma=0.0,
        )
        frames, forces = generate_force_ramp(
            mat, max_force=40.0, n_samples=160, seed=2, resolution=(80, 60),
            force_noise_n=0.0,
        )
        f, m = force_curve(frames, forces).loading_samples()
        lo = (f >= 0.0) & (f <= 10.0)
        hi = (f >= 20.0) & (f <= 40.0)
        slope_lo = np.polyfit(f[lo], m[lo], 1)[0]
        slope_hi = np.polyfit(f[hi], m[hi], 1)[0]
        assert slope_hi < 0.25 * slope_lo

    def test_monotone_loading_mae_with_noise(self):
        mat = MaterialProfile(name="lin", gain=450.0, response="linear", noise_sigma=1.0)
        frames, forces = generate_force_ramp(
            mat, max_force=40.0, n_samples=80, seed=3, resolution=(80, 60)
        )
        curve = force_curve(frames, forces)
        f, m = curve.loading_samples()
        # tolerance: the 99th percentile of noise-only MAE jitter
        rng = np.random.default_rng(77)
        base = illumination_field((80, 60), 3)
        jitter = [
            abs(
                mae(base + rng.normal(0, 1.0, base.shape), base)
                - mae(base + rng.normal(0, 1.0, base.shape), base)
            )
            for _ in range(50)
        ]
        tol = float(np.percentile(jitter, 99))
        drops = np.diff(m)
        assert np.all(drops >= -tol)

    def test_peak_force_reaches_max(self):
        frames, forces = generate_force_ramp(
            MATERIAL_PRESETS["pu_like"], max_force=40.0, n_samples=40, seed=4,
            resolution=(32, 24),
        )
        peak = max(s.fz_n for s in forces)
        assert peak == pytest.approx(40.0, abs=5 * 0.05)

    def test_force_log_rate_differs_from_frame_rate(self):
        frames, forces = generate_force_ramp(
            MATERIAL_PRESETS["pu_like"], max_force=10.0, n_samples=10, seed=5,
            resolution=(32, 24),
        )
        assert len(forces) > frames.n_frames
        assert forces[0].timestamp_s <= frames.timestamps_s[0]
        assert forces[-1].timestamp_s >= frames.timestamps_s[-1]

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValidationError):
            generate_force_ramp(MATERIAL_PRESETS["pu_like"], 40.0, 3, seed=0)


class TestSpatialGeneration:
    def test_p_signal_monotone_in_amplitude(self):
        mpp = 0.05
        cfg = PipelineConfig(dog_sigma_low=1.0, dog_sigma_high=5.0, crop=(40, 30, 48, 32))
        mat = MaterialProfile(name="m", gain=1200.0, noise_sigma=0.5)
        amplitudes = np.linspace(0.005, 0.05, 6)
        powers = []
        for amp in amplitudes:
            proto = Protocol(
                ProtocolKind.SPATIAL_SENSITIVITY,
                {
                    "ridge": {"period_mm": 0.8, "amplitude_mm": float(amp)},
                    "load_n": 10.0,
                    "frames_per_stack": 2,
                    "resolution": [128, 96],
                    "mm_per_pixel": mpp,
                },
            )
            run = generate_run(proto, mat, seed=11)
            spec = pipeline_psd(run.loaded, run.unloaded, cfg, mpp)
            powers.append(band_power(spec, 1.0 / 0.8))
        assert all(b > a for a, b in zip(powers, powers[1:]))

    def test_noise_free_surface_hits_zero_noise_sentinel_or_60_db(self):
        # A noise-free flat surface leaves nothing after subtraction, so the
        # noise floor is exactly zero (+inf SNR sentinel); any numerical dust
        # must still leave at least 60 dB.
        from tactile_bench.spatial import evaluate_surface

        mpp = 0.05
        cfg = PipelineConfig(dog_sigma_low=1.0, dog_sigma_high=5.0, crop=(40, 30, 48, 32))
        mat = MaterialProfile(name="m", gain=1200.0, noise_sigma=0.0)

        def surface(amplitude, seed):
            proto = Protocol(
                ProtocolKind.SPATIAL_SENSITIVITY,
                {
                    "ridge": {"period_mm": 0.8, "amplitude_mm": amplitude},
                    "load_n": 10.0,
                    "frames_per_stack": 1,
                    "resolution": [128, 96],
                    "mm_per_pixel": mpp,
                },
            )
            return generate_run(proto, mat, seed=seed)

        ridged = surface(0.04, seed=21)
        flat = surface(0.0, seed=21)
        rec = evaluate_surface(
            ridged.loaded,
            ridged.unloaded,
            flat.loaded,
            flat.unloaded,
            ridged.ridge,
            load_n=10.0,
            config=cfg,
            mm_per_pixel=mpp,
        )
        assert rec.p_noise == 0.0 or rec.snr_db >= 60.0
        if rec.p_noise == 0.0:
            assert rec.snr_db == np.inf

    def test_sweep_surface_expansion(self):
        params = {
            "loads_n": [2.0, 10.0],
            "amplitude_range_mm": [0.005, 0.05],
            "period_range_mm": [0.6, 1.5],
            "sweep_points": 10,
            "constant_period_mm": 1.5,
            "constant_amplitude_mm": 0.05,
        }
        surfaces = spatial_sweep_surfaces(params)
        assert len(surfaces) == 2 * (10 + 10 + 1)
        flats = [s for s in surfaces if s[1].is_flat]
        assert len(flats) == 2
        amps = sorted(s[1].amplitude_mm for s in surfaces if s[2] == 2.0 and not s[1].is_flat and s[1].period_mm == 1.5)
        assert amps[0] == 0.005 and amps[-1] == 0.05


def test_child_seed_deterministic_and_distinct():
    assert child_seed(7, 0) == child_seed(7, 0)
    assert child_seed(7, 0) != child_seed(7, 1)
    assert child_seed(7, 0) != child_seed(8, 0)
