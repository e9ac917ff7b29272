import numpy as np
import pytest

import memchua as m

from conftest import bisect_equilibrium


def odd_cubic_params(g, g_n, p3=1e-5):
    poly = m.DevicePoly(0.0, 0.0, p3, 0.0, 0.0, v_min=-1.2, v_max=2.6)
    return m.CircuitParams(c1=1e-8, c2=1e-7, l=0.41, g=g, g_n=g_n, device=poly)


class TestNonlinearCurrent:
    def test_zero_at_origin(self, designed):
        assert m.nonlinear_current(designed.params, 0.0) == 0.0

    def test_reference_block_current_balances_load_line(self, designed):
        """With the nominal converter 1/6856 S the block current at 0.9 V
        sits on the load line -g*v to within 0.5%."""
        from dataclasses import replace
        params = replace(designed.params, g_n=1.0 / 6856.0)
        i_r = m.nonlinear_current(params, 0.9)
        assert i_r == pytest.approx(-1.1775e-4, rel=5e-4)
        assert i_r == pytest.approx(-(1.0 / 7643.0) * 0.9, rel=5e-3)

    def test_slope_at_origin_is_p1_minus_gn(self, designed):
        p = designed.params
        assert m.nonlinear_slope(p, 0.0) == pytest.approx(
            p.device.p1 - p.g_n, rel=1e-15)
        h = 1e-7
        fd = (m.nonlinear_current(p, h) - m.nonlinear_current(p, -h)) / (2 * h)
        assert fd == pytest.approx(p.device.p1 - p.g_n, rel=1e-5)


class TestExistenceCondition:
    def test_reference_design_satisfies_it(self, designed):
        assert m.existence_condition(designed.params) is True

    def test_without_negative_converter(self, ref_state):
        params = m.CircuitParams(c1=1e-8, c2=1e-7, l=0.41, g=1e-4, g_n=0.0,
                                 device=ref_state.poly)
        assert m.existence_condition(params) is False

    def test_boundary_is_strict(self, ref_state):
        g = 1e-4
        g_n = g + ref_state.poly.p1
        params = m.CircuitParams(c1=1e-8, c2=1e-7, l=0.41, g=g, g_n=g_n,
                                 device=ref_state.poly)
        assert m.existence_condition(params) is False


class TestVectorField:
    def test_origin_is_equilibrium(self, designed):
        assert np.all(m.vector_field(designed.params, (0.0, 0.0, 0.0)) == 0.0)

    def test_direct_substitution(self, designed):
        p = designed.params
        f = m.vector_field(p, (0.0, 1.0, 0.0))
        assert f[0] == pytest.approx(p.g / p.c1, rel=1e-15)
        assert f[1] == pytest.approx(-p.g / p.c2, rel=1e-15)
        assert f[2] == pytest.approx(-1.0 / p.l, rel=1e-15)

    def test_residual_at_designed_equilibrium(self, designed):
        p = designed.params
        root = bisect_equilibrium(p, 0.5, 1.2)
        f = m.vector_field(p, (root, 0.0, -p.g * root))
        scale = p.g * abs(root)
        assert abs(f[0]) < 1e-6 * scale / p.c1
        assert abs(f[1]) < 1e-6 * scale / p.c2
        assert abs(f[2]) < 1e-6 * abs(root) / p.l

    def test_vanishes_at_every_found_equilibrium(self, designed):
        p = designed.params
        for eq in m.find_equilibria(p):
            f = m.vector_field(p, eq.state)
            v_ref = max(abs(eq.state.v1), 0.9)
            assert abs(f[0]) < 1e-9 * p.g * v_ref / p.c1
            assert abs(f[1]) < 1e-9 * p.g * v_ref / p.c2
            assert abs(f[2]) < 1e-9 * v_ref / p.l


class TestJacobian:
    def test_only_corner_entry_depends_on_state(self, designed):
        p = designed.params
        j_a = m.jacobian(p, (0.3, 5.0, 1.0))
        j_b = m.jacobian(p, (-0.8, -2.0, 0.5))
        mask = np.ones((3, 3), dtype=bool)
        mask[0, 0] = False
        assert np.array_equal(j_a[mask], j_b[mask])
        assert j_a[0, 0] != j_b[0, 0]

    def test_trace_zero_at_origin_for_designed_circuit(self, designed):
        p = designed.params
        assert abs(m.jacobian_trace(p, 0.0)) < 1e-12 * (p.g / p.c1)

    def test_matches_finite_differences(self, designed):
        rng = np.random.default_rng(11)
        p = designed.params
        for _ in range(10):
            s = np.array([rng.uniform(-1.2, 2.0), rng.uniform(-2, 2),
                          rng.uniform(-5e-4, 5e-4)])
            jac = m.jacobian(p, s)
            fd = np.empty((3, 3))
            for k in range(3):
                e = np.zeros(3)
                e[k] = 1e-6
                fd[:, k] = (m.vector_field(p, s + e)
                            - m.vector_field(p, s - e)) / 2e-6
            nz = np.abs(jac) > 0
            assert np.allclose(fd[nz], jac[nz], rtol=1e-5)
            assert np.allclose(fd[~nz], 0.0, atol=1e-5 * np.abs(jac).max())


class TestCubicRoots:
    def test_matches_numpy_eigvals_on_circuit_jacobians(self, designed):
        rng = np.random.default_rng(3)
        from dataclasses import replace
        for _ in range(200):
            p = replace(designed.params,
                        g=designed.params.g * rng.uniform(0.1, 10),
                        g_n=designed.params.g_n * rng.uniform(0.0, 10),
                        c1=1e-8 * rng.uniform(0.1, 10),
                        l=0.41 * rng.uniform(0.1, 10))
            v1 = rng.uniform(-1.5, 2.5)
            mine = np.sort_complex(m.eigenvalues_at(p, v1))
            ref = np.sort_complex(np.linalg.eigvals(m.jacobian(p, (v1, 0, 0))))
            radius = np.abs(ref).max()
            assert np.abs(mine - ref).max() < 1e-6 * radius

    def test_exact_roots_recovered(self):
        # (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        roots = np.sort_complex(m.cubic_roots(-6.0, 11.0, -6.0))
        assert np.allclose(roots, [1.0, 2.0, 3.0], atol=1e-12)

    def test_complex_pair(self):
        # (x+1)(x^2+4) = x^3 + x^2 + 4x + 4
        roots = sorted(m.cubic_roots(1.0, 4.0, 4.0), key=lambda z: z.imag)
        assert roots[1] == pytest.approx(-1.0 + 0j, abs=1e-12)
        assert roots[0] == pytest.approx(-2j, abs=1e-12)
        assert roots[2] == pytest.approx(2j, abs=1e-12)


class TestFindEquilibria:
    def test_designed_circuit_roots(self, designed):
        eqs = m.find_equilibria(designed.params)
        assert [e.label for e in eqs] == ["P-", "P0", "P+"]
        by_label = {e.label: e for e in eqs}
        assert by_label["P0"].state.v1 == 0.0
        assert by_label["P+"].state.v1 == pytest.approx(0.900, abs=0.005)
        # oracle value from test-side bisection on the residual
        oracle = bisect_equilibrium(designed.params, -1.1, -0.3)
        assert by_label["P-"].state.v1 == pytest.approx(oracle, abs=1e-9)
        assert by_label["P-"].state.v1 == pytest.approx(-0.741, abs=0.015)
        for e in eqs:
            assert e.residual < 1e-12
            assert e.in_window
            assert e.state.v2 == 0.0
            assert e.state.i_l == pytest.approx(
                -designed.params.g * e.state.v1, rel=1e-15, abs=1e-30)

    def test_odd_cubic_closed_form(self):
        g = 1e-4
        params = odd_cubic_params(g, g_n=g + 8.1e-6)
        eqs = m.find_equilibria(params)
        v1s = sorted(e.state.v1 for e in eqs)
        assert v1s[0] == pytest.approx(-0.9, abs=1e-9)
        assert v1s[1] == 0.0
        assert v1s[2] == pytest.approx(0.9, abs=1e-9)

    def test_odd_cubic_without_existence(self):
        g = 1e-4
        params = odd_cubic_params(g, g_n=g - 1e-6)
        eqs = m.find_equilibria(params)
        assert [e.label for e in eqs] == ["P0"]

    def test_asymmetry_from_even_terms(self, designed):
        eqs = {e.label: e for e in m.find_equilibria(designed.params)}
        assert abs(eqs["P+"].state.v1) != pytest.approx(
            abs(eqs["P-"].state.v1), rel=1e-3)

    def test_odd_cubic_mirror_symmetry(self):
        g = 1e-4
        params = odd_cubic_params(g, g_n=g + 8.1e-6)
        eqs = {e.label: e for e in m.find_equilibria(params)}
        assert eqs["P+"].state.v1 == pytest.approx(-eqs["P-"].state.v1,
                                                   rel=1e-12)


class TestStability:
    def test_designed_equilibria_all_unstable(self, designed):
        for eq in m.find_equilibria(designed.params):
            verdict = m.classify_stability(eq)
            assert verdict.unstable, eq.label
            # cross-check the closed-form spectrum against numpy's solver
            ref = np.sort_complex(np.linalg.eigvals(
                m.jacobian(designed.params, eq.state)))
            mine = np.sort_complex(np.array(eq.eigenvalues))
            assert np.abs(mine - ref).max() < 1e-7 * np.abs(ref).max()

    def test_designed_off_origin_points_are_saddle_foci(self, designed):
        for eq in m.find_equilibria(designed.params):
            if eq.label != "P0":
                assert m.classify_stability(eq).saddle_focus

    def test_stable_linear_network(self, linear_params):
        """Analytic characteristic polynomial of the damped RLC network
        confirms all eigenvalues sit in the left half plane."""
        p = linear_params
        a2 = p.g / p.c1 + p.g / p.c2
        a1 = 1.0 / (p.l * p.c2)
        a0 = p.g / (p.c1 * p.c2 * p.l)
        ref = np.roots([1.0, a2, a1, a0])
        assert ref.real.max() < 0
        eigs = m.eigenvalues_at(p, 0.0)
        assert np.abs(np.sort_complex(eigs) - np.sort_complex(ref)).max() \
            < 1e-9 * np.abs(ref).max()
        verdict = m.classify_stability(eigs)
        assert not verdict.unstable
        assert verdict.max_real_part < 0
