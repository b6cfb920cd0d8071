import math

import pytest

import resonatorlab as rl
from resonatorlab.constants import FLUX_QUANTUM

REFERENCE_JUNCTION = rl.JunctionSpec(
    r_normal=1250.0, width=520e-9, length=760e-9, t_ox=1e-9
)


def reference_array(l_j):
    return rl.ArraySpec(
        n_junctions=46,
        junction=REFERENCE_JUNCTION,
        total_length=207e-6,
        c_per_length=0.057e-15 / 1e-6,
        extra_inductance=78.9e-9 - 46 * l_j,
    )


class TestJunctionElectrical:
    def test_reference_device_values(self):
        i_c, l_j, e_j = rl.junction_electrical(REFERENCE_JUNCTION)
        assert i_c == pytest.approx(220e-9, rel=0.03)
        assert l_j == pytest.approx(1.48e-9, rel=0.03)
        assert e_j == pytest.approx(111e9, rel=0.03)

    def test_resistance_scaling(self):
        i_c, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        doubled = rl.JunctionSpec(
            r_normal=2500.0, width=520e-9, length=760e-9, t_ox=1e-9
        )
        i_c2, l_j2, _ = rl.junction_electrical(doubled)
        assert i_c2 == pytest.approx(i_c / 2.0, rel=1e-12)
        assert l_j2 == pytest.approx(2.0 * l_j, rel=1e-12)

    def test_lj_ic_identity(self):
        for r in (300.0, 1250.0, 8000.0):
            spec = rl.JunctionSpec(r_normal=r, width=520e-9, length=760e-9, t_ox=1e-9)
            i_c, l_j, _ = rl.junction_electrical(spec)
            assert l_j * i_c == pytest.approx(FLUX_QUANTUM / (2 * math.pi), rel=1e-12)


class TestJunctionCapacitive:
    def test_reference_device_values(self):
        c_j, e_c, plasma = rl.junction_capacitive(REFERENCE_JUNCTION)
        assert c_j == pytest.approx(31.5e-15, rel=0.05)
        assert e_c == pytest.approx(0.6e9, rel=0.05)
        assert plasma == pytest.approx(23e9, rel=0.05)

    def test_ej_over_ec_ratio(self):
        _, _, e_j = rl.junction_electrical(REFERENCE_JUNCTION)
        _, e_c, _ = rl.junction_capacitive(REFERENCE_JUNCTION)
        assert e_j / e_c == pytest.approx(180.0, rel=0.10)

    def test_area_scaling(self):
        half = rl.JunctionSpec(r_normal=1250.0, width=260e-9, length=760e-9, t_ox=1e-9)
        c_full, e_full, _ = rl.junction_capacitive(REFERENCE_JUNCTION)
        c_half, e_half, _ = rl.junction_capacitive(half)
        assert c_half == pytest.approx(c_full / 2.0, rel=1e-12)
        assert e_half == pytest.approx(2.0 * e_full, rel=1e-12)

    def test_plasma_identity(self):
        _, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        c_j, _, plasma = rl.junction_capacitive(REFERENCE_JUNCTION)
        assert (2 * math.pi * plasma) ** 2 == pytest.approx(1.0 / (l_j * c_j), rel=1e-12)


class TestQuarterWave:
    def test_reference_chain_with_override(self):
        _, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        report = rl.quarter_wave(reference_array(l_j), l_eq_override=67e-9)
        assert report.l_total == pytest.approx(78.9e-9, rel=1e-12)
        assert report.f_bare == pytest.approx(8.09e9, rel=0.02)
        assert report.c_eq == pytest.approx(5.78e-15, rel=0.05)
        assert report.kerr_estimate == pytest.approx(280e3, rel=0.10)

    def test_loaded_impedance(self):
        c_eq = rl.loaded_capacitance_from_frequency(7.02e9, 67e-9)
        assert c_eq == pytest.approx(7.7e-15, rel=0.01)
        assert math.sqrt(67e-9 / c_eq) == pytest.approx(3000.0, rel=0.05)

    def test_default_mapping(self):
        _, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        array = reference_array(l_j)
        report = rl.quarter_wave(array)
        assert report.l_eq == pytest.approx(8.0 / math.pi**2 * report.l_total, rel=1e-12)
        assert report.c_eq == pytest.approx(array.c_per_length * array.total_length / 2, rel=1e-12)

    def test_report_identities(self):
        _, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        report = rl.quarter_wave(reference_array(l_j), l_eq_override=67e-9)
        assert report.ej_over_ec == pytest.approx(report.e_j / report.e_c, rel=1e-12)
        assert report.z_eq == pytest.approx(math.sqrt(report.l_eq / report.c_eq), rel=1e-12)
        assert (2 * math.pi * report.plasma_frequency) ** 2 == pytest.approx(
            1.0 / (report.l_j * report.c_j), rel=1e-12
        )

    def test_quadrupling_junctions_halves_frequency(self):
        spec = REFERENCE_JUNCTION
        base = rl.ArraySpec(
            n_junctions=46, junction=spec, total_length=207e-6, c_per_length=5.7e-11
        )
        quad = rl.ArraySpec(
            n_junctions=184, junction=spec, total_length=207e-6, c_per_length=5.7e-11
        )
        f1 = rl.quarter_wave(base).f_bare
        f4 = rl.quarter_wave(quad).f_bare
        assert f4 == pytest.approx(f1 / 2.0, rel=1e-12)

    def test_z_eq_increases_with_l_eq_at_fixed_c_eq(self):
        _, l_j, _ = rl.junction_electrical(REFERENCE_JUNCTION)
        array = reference_array(l_j)
        z_values = [
            rl.quarter_wave(array, l_eq_override=l).z_eq for l in (50e-9, 67e-9, 90e-9)
        ]
        assert all(b > a for a, b in zip(z_values, z_values[1:]))

    def test_f_bare_decreases_with_n(self):
        freqs = [
            rl.quarter_wave(
                rl.ArraySpec(
                    n_junctions=n,
                    junction=REFERENCE_JUNCTION,
                    total_length=207e-6,
                    c_per_length=5.7e-11,
                )
            ).f_bare
            for n in (10, 20, 40, 80)
        ]
        assert all(b < a for a, b in zip(freqs, freqs[1:]))

    def test_loaded_capacitance_round_trip(self):
        f, l_eq = 7.02e9, 67e-9
        c = rl.loaded_capacitance_from_frequency(f, l_eq)
        assert 1.0 / (2 * math.pi * math.sqrt(l_eq * c)) == pytest.approx(f, rel=1e-12)
        assert rl.loaded_capacitance_from_frequency(f, 4 * l_eq) == pytest.approx(
            c / 4.0, rel=1e-12
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            rl.JunctionSpec(r_normal=-1.0, width=520e-9, length=760e-9, t_ox=1e-9)
        with pytest.raises(ValueError):
            rl.ArraySpec(
                n_junctions=0, junction=REFERENCE_JUNCTION, total_length=207e-6, c_per_length=5.7e-11
            )
        with pytest.raises(ValueError):
            rl.loaded_capacitance_from_frequency(0.0, 67e-9)
