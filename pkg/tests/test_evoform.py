import numpy as np
import pytest

from vortigen.errors import MissingSnapshots
from vortigen.evoform import (
    A1Variant,
    CroccoSign,
    ForceModel,
    FormCoefficients,
    FlowRegime,
    NormalCoefficient,
    TransportModel,
    classify_regime,
    commutator,
    crocco_normal_coefficient,
    equilibrium_classifier,
    equilibrium_tolerance,
    ideal_a1,
    lagrange_criterion,
    truncation_estimate,
    viscous_a1,
)
from vortigen.fields import (
    FieldSet,
    StructuredGrid2D,
    Trajectory,
    frame_along,
    trace_streamline,
)
from vortigen.thermo import PrimitiveState, derive_state

from scenarios import (
    GAMMA,
    MODEL,
    couette_a1_closed_form,
    couette_flow,
    diaphragm_snapshot_pair,
    shear_flow,
    source_flow,
)

NO_FORCE = ForceModel.none()


def uniform_fs(n=17, u=1.0, v=0.0):
    grid = StructuredGrid2D(n, n, hx=1.0 / (n - 1), hy=1.0 / (n - 1))
    one = np.ones(grid.shape)
    return FieldSet(grid, one, np.full(grid.shape, u), np.full(grid.shape, v), one)


def horizontal_line(y, x0=0.1, x1=0.9, n=33):
    pts = np.column_stack([np.linspace(x0, x1, n), np.full(n, y)])
    return Trajectory.from_points(pts)


class TestCroccoCoefficient:
    def test_uniform_flow_zero(self):
        fs = uniform_fs()
        traj = trace_streamline(fs, (0.1, 0.5), max_len=0.7)
        anu = crocco_normal_coefficient(fs, traj, frame_along(traj), NO_FORCE, MODEL)
        assert np.max(np.abs(anu.samples)) <= 1e-13

    def test_shear_flow_consistent_sign_vanishes(self):
        fs, sigma, T0 = shear_flow()
        traj = trace_streamline(fs, (0.1, 1.0), max_len=1.6)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL,
                                        sign=CroccoSign.CONSISTENT)
        est = truncation_estimate(fs, MODEL)
        assert np.max(np.abs(anu.samples)) <= 10.0 * est.anu

    def test_shear_flow_paper_literal_value(self):
        fs, sigma, T0 = shear_flow()
        y_traj = 1.0
        traj = trace_streamline(fs, (0.1, y_traj), max_len=1.6)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL,
                                        sign=CroccoSign.PAPER_LITERAL)
        expected = 2.0 * sigma ** 2 * y_traj / T0
        assert np.max(np.abs(anu.samples - expected)) <= 0.01 * expected

    def test_time_term_requires_snapshots(self):
        fs = uniform_fs()
        traj = trace_streamline(fs, (0.1, 0.5), max_len=0.5)
        with pytest.raises(MissingSnapshots):
            crocco_normal_coefficient(fs, traj, frame_along(traj), NO_FORCE,
                                      MODEL, include_time_term=True)

    def test_potential_force_enters_normally(self):
        # F = -grad(phi) with phi = g*y adds +g n_y / T to the coefficient.
        fs = uniform_fs()
        _, Y = np.meshgrid(fs.grid.x, fs.grid.y)
        g = 2.5
        force = ForceModel.potential(g * Y)
        traj = trace_streamline(fs, (0.1, 0.5), max_len=0.7)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, force, MODEL)
        T = 1.0
        assert np.allclose(anu.pieces["force"], g / T, atol=1e-12)


class TestA1:
    def test_ideal_is_zero(self):
        a1 = ideal_a1()
        assert a1.is_zero
        traj = horizontal_line(0.5)
        grid = StructuredGrid2D(9, 9, hx=0.125, hy=0.125)
        assert np.all(a1.sample_along(traj, grid) == 0.0)

    def test_zero_transport_zero_field(self):
        fs, _ = couette_flow()
        a1 = viscous_a1(fs, TransportModel(mu=0.0, k=0.0), MODEL)
        assert np.max(np.abs(a1.field)) == 0.0

    def test_couette_closed_form_mid_channel(self):
        mu, k = 0.1, 0.05
        fs, _ = couette_flow(mu=mu, k=k)
        a1 = viscous_a1(fs, TransportModel(mu=mu, k=k), MODEL,
                        A1Variant.PAPER_LITERAL)
        j_mid = (fs.grid.ny - 1) // 2
        y_mid = fs.grid.y[j_mid]
        expected, _ = couette_a1_closed_form(y_mid, mu, k)
        got = a1.field[j_mid, fs.grid.nx // 2]
        assert abs(got - expected) <= 0.005 * abs(expected)

    def test_conduction_slab_affine_temperature(self):
        # u = 0, T affine in y: production term is exactly k T'^2/(rho T).
        grid = StructuredGrid2D(9, 33, hx=0.125, hy=1.0 / 32)
        _, Y = np.meshgrid(grid.x, grid.y)
        slope = 0.8
        T = 1.0 + slope * Y
        rho = 1.0 / T  # p = rho R T = 1
        z = np.zeros(grid.shape)
        fs = FieldSet(grid, rho, z, z, np.ones(grid.shape))
        k = 0.3
        a1 = viscous_a1(fs, TransportModel(mu=0.0, k=k), MODEL,
                        A1Variant.PAPER_LITERAL)
        expected = k * slope ** 2 / (rho * T)
        np.testing.assert_allclose(a1.pieces["conduction_production"],
                                   expected, rtol=1e-10)
        assert np.all(a1.pieces["conduction_production"] > 0.0)

    def test_production_nonnegative_sweep(self):
        # 10 transport/flow cases, both variants, both production terms.
        rng = np.random.default_rng(2024)
        grid = StructuredGrid2D(17, 17, hx=1.0 / 16, hy=1.0 / 16)
        X, Y = np.meshgrid(grid.x, grid.y)
        cases = []
        for mu, k in [(0.1, 0.05), (0.02, 0.3), (1.0, 1.0), (0.5, 0.0),
                      (0.0, 0.7)]:
            a, b, c = rng.uniform(-1.0, 1.0, 3)
            u = a * Y + b * np.sin(2 * X) + c
            v = b * X * Y - a * np.cos(Y)
            T = 1.0 + 0.3 * np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) * 3)
            rho = 1.0 / T
            cases.append((mu, k, FieldSet(grid, rho, u, v, np.ones(grid.shape))))
            u2 = rng.uniform(-1, 1) * X + rng.uniform(-1, 1) * Y
            v2 = rng.uniform(-1, 1) * X * X
            cases.append((mu, k, FieldSet(grid, rho, u2, v2, np.ones(grid.shape))))
        assert len(cases) == 10
        for mu, k, fs in cases:
            for variant in A1Variant:
                a1 = viscous_a1(fs, TransportModel(mu=mu, k=k), MODEL, variant)
                assert np.all(a1.pieces["conduction_production"] >= 0.0)
                assert np.all(a1.pieces["viscous_production"] >= 0.0)

    def test_standard_variant_rescales_production(self):
        fs, T = couette_flow()
        tm = TransportModel(mu=0.1, k=0.05)
        lit = viscous_a1(fs, tm, MODEL, A1Variant.PAPER_LITERAL)
        std = viscous_a1(fs, tm, MODEL, A1Variant.STANDARD_PRODUCTION)
        np.testing.assert_allclose(std.pieces["conduction_production"],
                                   lit.pieces["conduction_production"] / T,
                                   rtol=1e-12)
        np.testing.assert_allclose(std.pieces["viscous_production"],
                                   lit.pieces["viscous_production"] / T,
                                   rtol=1e-12)
        np.testing.assert_allclose(std.pieces["heatflux_divergence"],
                                   lit.pieces["heatflux_divergence"], rtol=1e-12)


class TestCommutator:
    def test_zero_coefficients_zero_K(self):
        fs = uniform_fs()
        traj = trace_streamline(fs, (0.1, 0.5), max_len=0.7)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL)
        K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        assert np.max(np.abs(K.K)) <= 1e-12

    def test_prescribed_profile_derivative(self):
        fs = uniform_fs(33)
        traj = horizontal_line(0.5, n=201)
        frame = frame_along(traj)
        xi = traj.arclength
        g = np.sin(3.0 * xi)
        anu = NormalCoefficient.from_samples(g)
        K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        assert np.max(np.abs(K.K - 3.0 * np.cos(3.0 * xi))) <= 1e-3

    def test_attribution_sums_to_K(self):
        fs = diaphragm_snapshot_pair()
        traj = trace_streamline(fs, (0.55, 0.02), max_len=0.5)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL,
                                        time_index=1)
        K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        total = np.sum(list(K.attribution.values()), axis=0)
        scale = max(np.max(np.abs(K.K)), 1e-30)
        assert np.max(np.abs(total - K.K)) / scale <= 1e-10

    def test_shock_tube_pair_nonstationarity_dominates(self):
        fs = diaphragm_snapshot_pair()
        traj = trace_streamline(fs, (0.55, 0.02), max_len=0.5)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL,
                                        time_index=1)
        K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        assert np.max(np.abs(K.K)) > equilibrium_tolerance(fs, MODEL)
        integrals = {n: abs(np.trapezoid(c, K.xi))
                     for n, c in K.attribution.items()}
        assert max(integrals, key=integrals.get) == "nonstationarity"

    def test_inviscid_paths_agree(self):
        # With A1 = 0, K reduces to the xi1-derivative of A_nu: the
        # field-Jacobian route and plain arclength differencing of the
        # samples must agree within the stencil tolerance.
        fs = source_flow(65)
        traj = trace_streamline(fs, (1.05, 1.1), max_len=0.9)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL)
        K_field = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        K_samp = commutator(
            FormCoefficients(NormalCoefficient.from_samples(anu.samples),
                             ideal_a1()), traj, frame, fs)
        tol = equilibrium_tolerance(fs, MODEL)
        assert np.max(np.abs(K_field.K)) <= tol
        assert np.max(np.abs(K_field.K - K_samp.K)) <= tol


class TestLagrange:
    def test_source_flow_predicts_equilibrium(self):
        fs = source_flow()
        rep = lagrange_criterion(fs, NO_FORCE)
        assert rep.stationary and rep.potential and rep.simply_connected
        assert rep.predicts_equilibrium

    def test_shock_tube_series_not_stationary(self):
        fs = diaphragm_snapshot_pair()
        rep = lagrange_criterion(fs, NO_FORCE)
        assert not rep.stationary
        assert not rep.predicts_equilibrium

    def test_masked_body_not_simply_connected(self):
        fs0 = source_flow(33)
        mask = np.ones(fs0.grid.shape, dtype=bool)
        mask[14:19, 14:19] = False  # interior body
        fs = FieldSet(fs0.grid, fs0.rho, fs0.u, fs0.v, fs0.p, mask=mask)
        rep = lagrange_criterion(fs, NO_FORCE)
        assert not rep.simply_connected
        assert not rep.predicts_equilibrium

    def test_boundary_notch_stays_simply_connected(self):
        fs0 = source_flow(33)
        mask = np.ones(fs0.grid.shape, dtype=bool)
        mask[0:5, 10:15] = False  # notch open to the edge
        fs = FieldSet(fs0.grid, fs0.rho, fs0.u, fs0.v, fs0.p, mask=mask)
        assert lagrange_criterion(fs, NO_FORCE).simply_connected

    def test_rotational_tabulated_force_flagged(self):
        fs = source_flow(33)
        X, Y = np.meshgrid(fs.grid.x, fs.grid.y)
        rep = lagrange_criterion(fs, ForceModel.tabulated(-Y, X))
        assert not rep.potential

    def test_conservative_tabulated_force_passes(self):
        fs = source_flow(33)
        X, Y = np.meshgrid(fs.grid.x, fs.grid.y)
        rep = lagrange_criterion(fs, ForceModel.tabulated(X, Y))
        assert rep.potential


class TestClassification:
    def state_with_mach(self, mach):
        a = np.sqrt(GAMMA)  # rho = p = 1
        return derive_state(
            PrimitiveState(rho=1.0, u=(mach * a,), p=1.0), MODEL)

    def test_regimes(self):
        assert classify_regime(self.state_with_mach(2.0)) is FlowRegime.HYPERBOLIC
        assert classify_regime(self.state_with_mach(0.5)) is FlowRegime.ELLIPTIC
        assert classify_regime(self.state_with_mach(1.0)) is FlowRegime.SONIC

    def test_zero_K_is_equilibrium(self):
        from vortigen.evoform import Commutator
        K = Commutator(xi=np.linspace(0, 1, 5), K=np.zeros(5),
                       attribution={"vortical": np.zeros(5)})
        out = equilibrium_classifier(K, tol=1e-8)
        assert out.kind == "locally_equilibrium"
        assert out.dominant is None

    def test_couette_dominant_is_transport(self):
        mu, k = 0.1, 0.05
        fs, _ = couette_flow(mu=mu, k=k)
        a1 = viscous_a1(fs, TransportModel(mu=mu, k=k), MODEL)
        traj = horizontal_line(0.3, n=65)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL)
        K = commutator(FormCoefficients(anu, a1), traj, frame, fs)
        out = equilibrium_classifier(K, equilibrium_tolerance(fs, MODEL))
        assert out.kind == "nonequilibrium"
        assert out.dominant in ("conduction_production", "viscous_production",
                                "heatflux_divergence")
        # attribution still sums to K with the transport terms in play
        total = np.sum(list(K.attribution.values()), axis=0)
        assert np.max(np.abs(total - K.K)) <= 1e-10 * np.max(np.abs(K.K))

    def test_invalid_tolerance(self):
        from vortigen.evoform import Commutator
        K = Commutator(xi=np.zeros(1), K=np.zeros(1), attribution={})
        with pytest.raises(ValueError):
            equilibrium_classifier(K, tol=0.0)


class TestEquilibriumSoundness:
    def test_uniform_state_machine_zero(self):
        fs = uniform_fs()
        traj = trace_streamline(fs, (0.1, 0.5), max_len=0.7)
        frame = frame_along(traj)
        anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL)
        K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
        assert np.max(np.abs(K.K)) <= 1e-13

    def test_source_flow_refinement_order(self):
        vals = []
        for n in (33, 65, 129):
            fs = source_flow(n)
            traj = trace_streamline(fs, (1.05, 1.1), max_len=0.9)
            frame = frame_along(traj)
            anu = crocco_normal_coefficient(fs, traj, frame, NO_FORCE, MODEL)
            K = commutator(FormCoefficients(anu, ideal_a1()), traj, frame, fs)
            assert np.max(np.abs(K.K)) <= equilibrium_tolerance(fs, MODEL)
            vals.append(np.max(np.abs(K.K)))
        orders = [np.log2(vals[k] / vals[k + 1]) for k in range(2)]
        assert min(orders) >= 1.5
