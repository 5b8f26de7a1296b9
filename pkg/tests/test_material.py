import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from tlfpm.material import (
    ElementInversion, MaterialParams, first_pk_stress, kinematics, second_pk_stress, strain_energy,
)

MAT = MaterialParams(1000.0, 3000.0, 0.45)


def _random_F(rng, n, dim=3, scale=0.3):
    F = np.eye(dim) + scale * rng.normal(size=(n, dim, dim))
    bad = np.linalg.det(F) <= 0.2
    while bad.any():
        F[bad] = np.eye(dim) + scale * rng.normal(size=(bad.sum(), dim, dim))
        bad = np.linalg.det(F) <= 0.2
    return F


def test_params_derived():
    m = MaterialParams(1.0, 3.0, 0.25)
    assert m.mu == pytest.approx(1.2)
    assert m.bulk == pytest.approx(2.0)
    assert m.lame == pytest.approx(m.bulk - 2 * m.mu / 3)
    assert m.wave_speed == pytest.approx(np.sqrt(m.lame + 2 * m.mu))
    r = MaterialParams.from_moduli(m.mu, m.bulk, 1.0)
    assert (r.young, r.nu) == pytest.approx((3.0, 0.25))


@pytest.mark.parametrize("kw", [dict(rho0=0, young=1, nu=0.3), dict(rho0=1, young=-1, nu=0.3),
                                dict(rho0=1, young=1, nu=0.5), dict(rho0=1, young=1, nu=-0.1)])
def test_params_invalid(kw):
    with pytest.raises(ValueError):
        MaterialParams(**kw)


def test_identity():
    st_ = kinematics(np.zeros((3, 3)))
    assert np.allclose(st_.F, np.eye(3)) and np.allclose(st_.E, 0)
    assert st_.J1 == pytest.approx(3.0) and st_.J3 == pytest.approx(1.0)
    assert strain_energy(st_, MAT) == pytest.approx(0.0)
    assert np.allclose(second_pk_stress(st_, MAT), 0.0)


def test_uniform_dilation():
    st_ = kinematics(np.eye(3))   # F = 2 I
    assert st_.J3 == pytest.approx(8.0) and st_.J1 == pytest.approx(3.0)
    unit = MaterialParams.from_moduli(1.0, 1.0)
    assert strain_energy(st_, unit) == pytest.approx(24.5)
    S = second_pk_stress(st_, unit)
    assert np.allclose(S - np.trace(S) / 3 * np.eye(3), 0.0, atol=1e-14)


def test_simple_shear_invariants_eigen_oracle():
    F = np.eye(3)
    F[0, 1] = 0.5
    st_ = kinematics(F - np.eye(3))
    lam = np.linalg.eigvalsh(F.T @ F)
    I1, I2, I3 = lam.sum(), lam[0] * lam[1] + lam[1] * lam[2] + lam[0] * lam[2], lam.prod()
    assert st_.I1 == pytest.approx(I1) and st_.I2 == pytest.approx(I2) and st_.I3 == pytest.approx(I3)
    assert st_.J1 == pytest.approx(I1 * I3 ** (-1 / 3))
    assert st_.J2 == pytest.approx(I2 * I3 ** (-2 / 3))


def test_energy_eigen_oracle(rng):
    F = _random_F(rng, 50)
    st_ = kinematics(F - np.eye(3))
    for k in range(50):
        lam = np.linalg.eigvalsh(F[k].T @ F[k])
        J = np.sqrt(lam.prod())
        W = 0.5 * MAT.mu * (lam.sum() * J ** (-2 / 3) - 3) + 0.5 * MAT.bulk * (J - 1) ** 2
        assert strain_energy(st_, MAT)[k] == pytest.approx(W, rel=1e-12)


def _energy_of_E(E, mat):
    C = 2 * E + np.eye(3)
    I1, I3 = np.trace(C), np.linalg.det(C)
    return 0.5 * mat.mu * (I1 * I3 ** (-1 / 3) - 3) + 0.5 * mat.bulk * (np.sqrt(I3) - 1) ** 2


def test_stress_matches_energy_gradient(rng):
    """200 random states: S_ij = dW/dE_ij by symmetric central differences."""
    F = _random_F(rng, 200)
    st_ = kinematics(F - np.eye(3))
    S = second_pk_stress(st_, MAT)
    h = 1e-6
    for k in range(200):
        E = st_.E[k]
        fd = np.zeros((3, 3))
        for i in range(3):
            for j in range(i, 3):
                D = np.zeros((3, 3))
                D[i, j] = D[j, i] = h / (2.0 if i != j else 1.0)
                d = (_energy_of_E(E + D, MAT) - _energy_of_E(E - D, MAT)) / (2 * h)
                fd[i, j] = fd[j, i] = d
        scale = np.abs(S[k]).max()
        assert np.abs(fd - S[k]).max() <= 1e-5 * scale


def test_objectivity(rng):
    F = _random_F(rng, 40)
    Q = Rotation.random(40, random_state=7).as_matrix()
    a = kinematics(F - np.eye(3))
    b = kinematics(Q @ F - np.eye(3))
    assert np.allclose(strain_energy(a, MAT), strain_energy(b, MAT), atol=1e-10, rtol=0)
    assert np.allclose(second_pk_stress(a, MAT), second_pk_stress(b, MAT), atol=1e-10, rtol=0)


@given(alpha=st.floats(0.2, 5.0), seed=st.integers(0, 2**31))
def test_isochoric_invariance(alpha, seed):
    F = _random_F(np.random.default_rng(seed), 1)[0]
    a = kinematics(F - np.eye(3))
    b = kinematics(alpha * F - np.eye(3))
    assert b.J1 == pytest.approx(a.J1, rel=1e-12)
    assert b.J2 == pytest.approx(a.J2, rel=1e-12)


def test_symmetry_and_P_equals_FS(rng):
    F = _random_F(rng, 20)
    st_ = kinematics(F - np.eye(3))
    S = second_pk_stress(st_, MAT)
    assert np.allclose(S, np.swapaxes(S, 1, 2))
    assert np.allclose(first_pk_stress(st_, MAT), F @ S)


def test_plane_strain_embedding(rng):
    g = 0.2 * rng.normal(size=(5, 2, 2))
    st2 = kinematics(g)
    g3 = np.zeros((5, 3, 3))
    g3[:, :2, :2] = g
    st3 = kinematics(g3)
    assert st2.dim == 2 and st2.F.shape == (5, 3, 3)
    assert np.allclose(second_pk_stress(st2, MAT), second_pk_stress(st3, MAT)[:, :2, :2])


def test_inversion_signal():
    g = np.zeros((3, 3, 3))
    g[1] = -2 * np.eye(3)
    with pytest.raises(ElementInversion) as exc:
        kinematics(g, cell_ids=[10, 11, 12])
    assert list(exc.value.cells) == [11]
    assert exc.value.detF[0] < 0
    assert kinematics(g, check=False).J3[1] < 0
