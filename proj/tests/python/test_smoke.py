import numpy as np
import pytest

import tndisent as td


def haar_unitary(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_factorize_roundtrip():
    rng = np.random.default_rng(7)
    w = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    layer, report = td.factorize(w, chi=16)
    assert report["final_rel_error"] < 1e-10
    np.testing.assert_allclose(layer.reconstruct(), w, atol=1e-10)


def test_disentangle_improves_over_plain_core():
    w, truth = td.plant(k=3, layers_u=1, layers_v=1, chi=1, seed=11)
    layer, report = td.disentangle(w, layers_u=1, layers_v=1, chi_new=1,
                                   seed=3, restarts=4, init="haar")
    assert report["final_rel_error"] < 1e-6
    assert max(layer.bond_dims) == 1


def test_apply_matches_reconstruct():
    rng = np.random.default_rng(5)
    w = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    layer, _ = td.factorize(w, chi=8, site_dim=2)
    x = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    np.testing.assert_allclose(layer.apply(x), w @ x, atol=1e-9)


def test_enhance_preserves_operator():
    rng = np.random.default_rng(2)
    w = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    layer, _ = td.factorize(w, chi=2)
    grown = td.enhance(layer, add_layers_u=1, new_chi=4)
    assert grown.layers_u == layer.layers_u + 1
    np.testing.assert_allclose(grown.reconstruct(), layer.reconstruct(), atol=1e-10)


def test_retrain_matrix_reduces_loss():
    w, _ = td.plant(k=3, layers_u=1, layers_v=1, chi=2, seed=23)
    layer, _ = td.disentangle(w, layers_u=1, layers_v=1, chi_new=2,
                              max_sweeps=4, seed=1, init="haar")
    out, losses = td.retrain_matrix(layer, w, steps=6)
    assert len(losses) == 6
    assert losses[-1] <= losses[0] + 1e-12


def test_save_load(tmp_path):
    rng = np.random.default_rng(9)
    w = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    layer, _ = td.disentangle(w, layers_u=1, layers_v=0, chi_new=2, seed=4)
    path = str(tmp_path / "layer.json")
    layer.save(path)
    back = td.FactorizedLayer.load(path)
    np.testing.assert_allclose(back.reconstruct(), layer.reconstruct(), atol=0)


def test_qten_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    t = rng.normal(size=(3, 4, 2)) + 1j * rng.normal(size=(3, 4, 2))
    path = str(tmp_path / "t.qten")
    td.write_qten(path, t)
    back = td.read_qten(path)
    assert back.shape == (3, 4, 2)
    assert np.array_equal(back, t)


def test_shot_study_shrinks_with_shots():
    w, truth = td.plant(k=3, layers_u=2, layers_v=0, chi=1, seed=5)
    rng = np.random.default_rng(0)
    x = rng.normal(size=8) + 1j * rng.normal(size=8)
    errs = td.shot_study(truth, "u", x, [100, 100000], seed=12)
    assert errs[1] < errs[0]


def test_validation_errors_are_value_errors():
    rng = np.random.default_rng(3)
    w = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    with pytest.raises(ValueError):
        td.factorize(w, chi=4)  # 6 is not a power of 2
    with pytest.raises(ValueError):
        td.factorize(rng.normal(size=(8, 8)) + 0j, chi=0)
