"""Catalog entries and definition-file loading.

Oracle policy: entry tensors and derived data are asserted against frozen
closed forms evaluated in plain numpy; parameter validation against the
documented constraints; the TOML loader against hand-written files whose
expected behavior is computed in-test.
"""

import json

import numpy as np
import pytest

from leibniz import (IntegratorConfig, ParameterError, UnknownSystemError,
                     catalog, catalog_listing, decompose,
                     equivalent_hamiltonians, is_casimir, load_system_file,
                     make_system, momentum_map_check, noether_drift,
                     projector_at, sample_points)

EXPECTED_NAMES = {
    "canonical", "pseudometric", "three-wave", "landau-lifschitz",
    "rigid-body-dissipative", "noncanonical-r3", "upper-half-plane",
    "constrained-particle", "constrained-particle-reduced-1",
    "constrained-particle-reduced-2",
}


# === Catalog shape ===

def test_catalog_names_and_listing():
    assert set(catalog()) == EXPECTED_NAMES
    listing = catalog_listing()
    assert [e["name"] for e in listing] == sorted(EXPECTED_NAMES)
    text = json.dumps(listing)            # must be JSON-ready as returned
    assert json.loads(text) == listing
    for e in listing:
        assert e["notes"]
        for spec in e["parameters"].values():
            assert "default" in spec and "description" in spec


def test_every_entry_builds_with_defaults():
    for name in EXPECTED_NAMES:
        bundle = make_system(name)
        assert bundle.notes
        assert len(bundle.sample_box) == bundle.system.chart.dim
        for m in sample_points(bundle.sample_box, 10, seed_or_rng=1):
            assert bundle.system.in_domain(m)
        if bundle.x0_default is not None:
            assert bundle.system.in_domain(bundle.x0_default)


# === canonical / pseudometric ===

def test_canonical_dimension_shorthand():
    b2 = make_system("canonical2")
    assert b2.system.chart.names == ("q", "p")
    assert b2.system.hamiltonian.value(np.array([1.0, 1.0])) == 1.0
    assert b2.momentum is not None and b2.action is not None

    b6 = make_system("canonical6")
    assert b6.system.chart.names == ("x", "y", "z", "p_x", "p_y", "p_z")
    assert b6.momentum is None
    expected = np.zeros((6, 6))
    expected[:3, 3:] = np.eye(3)
    expected[3:, :3] = -np.eye(3)
    assert np.array_equal(b6.system.tensor.matrix(np.zeros(6)), expected)

    with pytest.raises(ParameterError):
        make_system("canonical3")
    with pytest.raises(ParameterError):
        make_system("canonical", dim=1)


def test_unknown_system_and_unknown_parameter():
    with pytest.raises(UnknownSystemError) as err:
        make_system("no-such-system")
    assert "three-wave" in str(err.value)  # names the available entries
    with pytest.raises(ParameterError):
        make_system("canonical2", nosuch=1)


def test_pseudometric_defaults_to_gradient_flow():
    bundle = make_system("pseudometric")
    m = np.array([0.7, -0.3])
    assert np.array_equal(bundle.system.tensor.matrix(m), np.eye(2))
    # With the identity tensor the right field is the plain gradient.
    assert np.allclose(bundle.system.vector_field(m),
                       bundle.system.hamiltonian.gradient(m), atol=1e-14)

    custom = make_system("pseudometric", coordinates=("u", "v"),
                         entries=[["1", "0"], ["0", "-1"]],
                         hamiltonian="u*v")
    assert custom.system.chart.names == ("u", "v")
    assert np.array_equal(custom.system.tensor.matrix(m),
                          np.diag([1.0, -1.0]))


# === three-wave ===

def test_three_wave_variant_signs():
    bundle = make_system("three-wave", s=(1, 1, -1), gamma=(1.0, 1.0, -2.0))
    # b = (s1 g1, -s2 g2, s3 g3) = (1, -1, 2)
    assert np.array_equal(bundle.system.tensor.matrix(np.zeros(3)),
                          np.diag([1.0, -1.0, 2.0]))
    assert bundle.system.hamiltonian.value(np.array([1.0, 1.0, 1.0])) == 1.0
    samples = sample_points(bundle.sample_box, 50, seed_or_rng=2)
    report = momentum_map_check(bundle.system, bundle.action, bundle.momentum,
                                samples, tol=1e-12)
    assert report.passed, report.to_json()


def test_three_wave_parameter_validation():
    with pytest.raises(ParameterError):
        make_system("three-wave", gamma=(1.0, 1.0, 1.0))     # sum nonzero
    with pytest.raises(ParameterError):
        make_system("three-wave", gamma=(0.0, 1.0, -1.0))    # zero component
    with pytest.raises(ParameterError):
        make_system("three-wave", s=(1, 2, 1))               # not a sign
    with pytest.raises(ParameterError):
        make_system("three-wave", gamma=(1.0, -1.0))         # wrong length


def test_three_wave_momentum_conserved_along_flow():
    bundle = make_system("three-wave")
    cfg = IntegratorConfig(t1=10.0, method="rk4", dt=1e-3)
    report = noether_drift(bundle.system, bundle.momentum, [1.0, 1.0, 1.0],
                           cfg, action=bundle.action, tol=1e-6)
    assert report.passed, report.to_json()
    assert report.details["hamiltonian_invariant"] is True


# === landau-lifschitz / rigid body ===

def test_landau_lifschitz_decomposition():
    bundle = make_system("landau-lifschitz", gamma=2.0, **{"lambda": 0.5})
    c = 0.5 / 2.0
    skew, sym = decompose(bundle.system.tensor)
    for m in sample_points(bundle.sample_box, 20, seed_or_rng=3):
        hat = np.array([[0, -m[2], m[1]], [m[2], 0, -m[0]], [-m[1], m[0], 0]])
        nn = float(m @ m)
        double = c * (np.outer(m, m) / nn - np.eye(3))
        assert np.allclose(skew.matrix(m), hat, atol=1e-13)
        assert np.allclose(sym.matrix(m), double, atol=1e-13)


def test_landau_lifschitz_validation_and_action():
    with pytest.raises(ParameterError):
        make_system("landau-lifschitz", gamma=0.0)
    with pytest.raises(ParameterError):
        make_system("landau-lifschitz", b_field=(1.0, 0.0))
    bundle = make_system("landau-lifschitz")
    g = np.array([0.5])
    m = np.array([1.0, 0.0, 1.0])
    rotated = bundle.action.group_map(g, m)
    assert np.allclose(rotated, [np.cos(0.5), np.sin(0.5), 1.0], atol=1e-14)
    # Derivative of the orbit at g = 0 is the generator.
    eps = 1e-7
    fd = (bundle.action.group_map(np.array([eps]), m) - m) / eps
    assert np.allclose(fd, bundle.action.generators[0].value(m), atol=1e-6)


def test_rigid_body_flags_and_validation():
    free = make_system("rigid-body-dissipative", alpha=0.0)
    assert free.system.tensor.symmetry == "skew"
    damped = make_system("rigid-body-dissipative", alpha=0.1)
    assert damped.system.tensor.symmetry == "general"
    m = np.array([1.0, 1.0, 1.0])
    hat = np.array([[0, -1, 1], [1, 0, -1], [-1, 1, 0]], dtype=float)
    sym = 0.1 * (np.outer(m, m) - 3.0 * np.eye(3))
    assert np.allclose(damped.system.tensor.matrix(m), hat + sym, atol=1e-13)
    h = damped.system.hamiltonian
    assert h.value(m) == pytest.approx(0.5 * (1 / 1 + 1 / 2 + 1 / 3))
    with pytest.raises(ParameterError):
        make_system("rigid-body-dissipative", inertia=(1.0, -2.0, 3.0))
    with pytest.raises(ParameterError):
        make_system("rigid-body-dissipative", alpha=-0.1)


# === constrained particle chain ===

def test_constrained_particle_stored_matrices():
    bundle = make_system("constrained-particle")  # a = 0
    for m in sample_points(bundle.sample_box, 25, seed_or_rng=4):
        y, pz = m[1], m[5]
        u = 1.0 + y * y
        P = np.eye(6)
        P[3] = [0, -pz / u, 0, y * y / u, 0, -y / u]
        P[5] = [0, -y * pz / u, 0, -y / u, 0, 1.0 / u]
        assert np.max(np.abs(bundle.stored["pi"].matrix(m) - P)) <= 1e-13
        assert np.max(np.abs(projector_at(bundle.constraint, m) - P)) <= 1e-12
        B6 = np.zeros((6, 6))
        B6[:3, 3:] = np.eye(3)
        B6[3:, :3] = -np.eye(3)
        assert np.max(np.abs(bundle.stored["btilde"].matrix(m) - P @ B6)) <= 1e-13
        grad_h = np.concatenate([np.zeros(3), m[3:]])
        assert np.max(np.abs(bundle.stored["xr"].value(m) - P @ B6 @ grad_h)) <= 1e-12


def test_constrained_particle_action_split():
    bundle = make_system("constrained-particle")
    assert bundle.momentum_action is not None
    assert bundle.momentum_action.dim == 1
    assert len(bundle.momentum.components) == 1
    assert bundle.action.dim == 2               # quotient translations
    assert len(bundle.action.param_box) == 2
    assert bundle.action.group_map is not None
    samples = sample_points(bundle.sample_box, 50, seed_or_rng=5)
    report = momentum_map_check(bundle.system, bundle.momentum_action,
                                bundle.momentum, samples, tol=1e-12)
    assert report.passed, report.to_json()


def test_reduced_1_casimirs_and_equivalence():
    bundle = make_system("constrained-particle-reduced-1")
    samples = sample_points(bundle.sample_box, 50, seed_or_rng=6)
    assert len(bundle.casimirs) == 4
    sides = sorted((side, f.name) for side, f in bundle.casimirs)
    assert sides == [("left", "p_x + y*p_z"), ("left", "p_y"),
                     ("right", "p_x"), ("right", "p_z")]
    for side, f in bundle.casimirs:
        report = is_casimir(bundle.system.tensor, f, side, samples, tol=1e-12)
        assert report.passed, (side, f.name, report.to_json())
    h, hbar = bundle.equivalent_pair
    report = equivalent_hamiltonians(bundle.system.tensor, h, hbar, samples,
                                     tol=1e-12)
    assert report.passed, report.to_json()


def test_reduced_2_entry():
    bundle = make_system("constrained-particle-reduced-2")
    assert bundle.system.chart.names == ("y", "p_y")
    m = np.array([0.3, 2.0])
    assert np.array_equal(bundle.system.tensor.matrix(m),
                          [[0.0, 1.0], [0.0, 0.0]])
    assert bundle.system.hamiltonian.value(m) == pytest.approx(2.0)
    # Free dynamics: ydot = p_y, p_ydot = 0.
    assert np.allclose(bundle.system.vector_field(m), [2.0, 0.0], atol=1e-14)


def test_reduced_1_points_to_its_own_quotient():
    bundle = make_system("constrained-particle-reduced-1")
    assert bundle.reduced_system_name == "constrained-particle-reduced-2"
    assert bundle.reduction_expected is not None
    m = np.array([0.4, 1.2])
    assert np.array_equal(bundle.reduction_expected.matrix(m),
                          [[0.0, 1.0], [0.0, 0.0]])


# === upper half-plane ===

def test_upper_half_plane_momentum_and_domain():
    for xi in (-1.0, 0.5, 2.0):
        bundle = make_system("upper-half-plane", xi=xi)
        samples = sample_points(bundle.sample_box, 50, seed_or_rng=7)
        report = momentum_map_check(bundle.system, bundle.action,
                                    bundle.momentum, samples, tol=1e-12)
        assert report.passed, (xi, report.to_json())
    assert not bundle.system.in_domain(np.array([0.0, -1.0]))


# === TOML definition files ===

HALF_PLANE_TOML = """
sample_box = [[-2.0, 2.0], [0.5, 2.5]]
x0 = [1.0, 1.0]

[system]
coordinates = ["x", "y"]
hamiltonian = "(x^2 + y^2)/2"
symmetry = "skew"
domain = "y"
name = "half-plane-file"

[tensor]
rows = [["0", "1"], ["-1", "0"]]

[parameters]
xi = 2.0
c = 7.38905609893065

[action]
generators = [["0", "c*y"]]
map = ["x", "exp(t)*y"]
params = ["t"]
param_box = [[-1.0, 1.0]]

[momentum]
components = ["xi*x"]
factors = ["-xi/(c*y)"]
"""


def test_load_system_file_full(tmp_path):
    path = tmp_path / "half_plane.toml"
    path.write_text(HALF_PLANE_TOML)
    bundle = load_system_file(str(path))
    assert bundle.name == "half-plane-file"
    assert bundle.x0_default == [1.0, 1.0]
    assert bundle.sample_box == [(-2.0, 2.0), (0.5, 2.5)]
    samples = sample_points(bundle.sample_box, 50, seed_or_rng=8)
    report = momentum_map_check(bundle.system, bundle.action, bundle.momentum,
                                samples, tol=1e-12)
    assert report.passed, report.to_json()
    # The expression-defined group map acts on points.
    moved = bundle.action.group_map(np.array([0.3]), np.array([1.0, 1.0]))
    assert np.allclose(moved, [1.0, np.exp(0.3)], atol=1e-14)


CONSTRAINED_TOML = """
[system]
coordinates = ["x", "y", "z", "p_x", "p_y", "p_z"]
hamiltonian = "(p_x^2 + p_y^2 + p_z^2)/2"
symmetry = "skew"

[tensor.entries]
"0,3" = "1"
"1,4" = "1"
"2,5" = "1"
"3,0" = "-1"
"4,1" = "-1"
"5,2" = "-1"

[constraints]
phi = ["p_x + y*p_z"]

[complement]
w = [["0", "0", "0", "1", "0", "y"]]

[invariants]
reduced_coordinates = ["y", "p_x", "p_y", "p_z"]
sigma = ["y", "p_x", "p_y", "p_z"]
section = ["0", "y", "0", "p_x", "p_y", "p_z"]
"""


def test_load_system_file_constraints_and_invariants(tmp_path):
    path = tmp_path / "constrained.toml"
    path.write_text(CONSTRAINED_TOML)
    bundle = load_system_file(str(path))
    assert bundle.constraint is not None and bundle.constraint.k == 1
    assert bundle.reduction is not None
    m = np.array([0.0, 1.0, 0.0, 0.5, 0.5, -0.5])
    P = projector_at(bundle.constraint, m)
    assert np.allclose(P @ P, P, atol=1e-12)
    sect = bundle.reduction.check_section(sample_points([(-2, 2)] * 4, 10))
    assert sect.passed


def test_load_system_file_missing_key(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("""
[system]
coordinates = ["x", "y"]

[tensor]
rows = [["0", "1"], ["-1", "0"]]
""")
    with pytest.raises(ValueError) as err:
        load_system_file(str(path))
    assert "missing key" in str(err.value)
    assert "hamiltonian" in str(err.value)


def test_load_system_file_bad_symmetry_flag(tmp_path):
    path = tmp_path / "notskew.toml"
    path.write_text("""
[system]
coordinates = ["x", "y"]
hamiltonian = "x"
symmetry = "skew"

[tensor]
rows = [["0", "1"], ["1", "0"]]
""")
    with pytest.raises(ValueError):
        load_system_file(str(path))
