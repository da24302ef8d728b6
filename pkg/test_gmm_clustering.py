import numpy as np
import pytest

from gmm_clustering import (
    FUTURE_TARGET,
    GmmComponent,
    GmmFitError,
    GmmModel,
    default_k_range,
    fit_gmm,
    gaussian_pdf,
    membership,
    membership_matrix,
    normalize_compositions,
    select_k,
    silhouette_avg,
    silhouette_per_point,
)

IDENTIDADE = ((1.0, 0.0), (0.0, 1.0))


def _blobs(centros, por_blob=30, escala=0.01, seed=0):
    rng = np.random.default_rng(seed)
    return np.vstack([np.asarray(c) + rng.normal(0.0, escala, (por_blob, 2)) for c in centros])


def _random_model(rng, k):
    componentes = []
    pesos = rng.dirichlet(np.ones(k))
    for j in range(k):
        a = rng.normal(0.0, 0.3, (2, 2))
        cov = a @ a.T + 0.01 * np.eye(2)
        componentes.append(GmmComponent(
            mean=tuple(float(v) for v in rng.uniform(0, 1, 2)),
            covariance=tuple(tuple(float(v) for v in linha) for linha in cov),
            weight=float(pesos[j]),
        ))
    pesos_ajustados = [c.weight for c in componentes]
    ultimo = componentes[-1]
    componentes[-1] = GmmComponent(ultimo.mean, ultimo.covariance, 1.0 - sum(pesos_ajustados[:-1]))
    return GmmModel(components=tuple(componentes), log_likelihood=0.0, seed=0)


def test_gaussian_pdf_values():
    assert gaussian_pdf((0.0, 0.0), (0.0, 0.0), IDENTIDADE) == pytest.approx(0.159155, abs=1e-6)
    assert gaussian_pdf((1.0, 0.0), (0.0, 0.0), IDENTIDADE) == pytest.approx(0.096532, abs=1e-6)


def test_gaussian_pdf_isotropic_rotation_invariance():
    cov = ((0.5, 0.0), (0.0, 0.5))
    angulo = 0.7
    ponto = (np.cos(angulo), np.sin(angulo))
    assert gaussian_pdf(ponto, (0, 0), cov) == pytest.approx(gaussian_pdf((1.0, 0.0), (0, 0), cov), rel=1e-12)


def test_gaussian_pdf_singular_covariance():
    with pytest.raises(GmmFitError):
        gaussian_pdf((0, 0), (0, 0), ((1.0, 1.0), (1.0, 1.0)))


def test_responsibilities_sum_to_one():
    rng = np.random.default_rng(11)
    for _ in range(20):
        modelo = _random_model(rng, int(rng.integers(1, 5)))
        pontos = rng.uniform(-1.0, 2.0, (50, 2))
        somas = membership_matrix(modelo, pontos).sum(axis=1)
        assert np.all(np.abs(somas - 1.0) <= 1e-9)


def test_far_point_goes_to_nearest_component():
    modelo = GmmModel(components=(
        GmmComponent((0.0, 0.0), ((1e-6, 0.0), (0.0, 1e-6)), 0.5),
        GmmComponent((1.0, 1.0), ((1e-6, 0.0), (0.0, 1e-6)), 0.5),
    ), log_likelihood=0.0, seed=0)
    assert membership(modelo, (1e6, 1e6)).probabilities == (0.0, 1.0)


@pytest.mark.parametrize("seed", range(100))
def test_log_likelihood_never_decreases(seed):
    rng = np.random.default_rng(seed)
    pontos = rng.uniform(0, 1, (40, 2))
    modelo = fit_gmm(pontos, 3, seed, n_init=2)
    assert np.all(np.diff(modelo.history) >= -1e-9)
    assert modelo.log_likelihood == modelo.history[-1]


def test_two_blobs_recover_means_and_weights():
    modelo = fit_gmm(_blobs([(0.1, 0.1), (0.9, 0.9)]), 2, seed=42)
    medias = sorted(map(tuple, modelo.means()))
    assert np.allclose(medias[0], (0.1, 0.1), atol=0.02)
    assert np.allclose(medias[1], (0.9, 0.9), atol=0.02)
    for componente in modelo.components:
        assert componente.weight == pytest.approx(0.5, abs=0.02)


def test_select_k_two_and_three_blobs():
    k, modelo = select_k(_blobs([(0.1, 0.1), (0.9, 0.9)]), 2, 6, seed=42)
    assert k == 2
    assert modelo.k == 2
    assert modelo.silhouette > 0.9

    k, _ = select_k(_blobs([(0.1, 0.1), (0.9, 0.1), (0.5, 0.9)], seed=1), 2, 6, seed=42)
    assert k == 3


def test_select_k_is_deterministic():
    pontos = _blobs([(0.2, 0.3), (0.7, 0.6)], seed=5)
    assert select_k(pontos, 2, 4, seed=9) == select_k(pontos, 2, 4, seed=9)


def test_select_k_rejects_bad_range():
    with pytest.raises(ValueError):
        select_k(_blobs([(0.5, 0.5)], por_blob=3), 2, 4, seed=1)
    with pytest.raises(ValueError):
        select_k(_blobs([(0.5, 0.5)]), 1, 3, seed=1)


def test_k1_mean_is_sample_mean():
    pontos = np.random.default_rng(2).uniform(0, 1, (25, 2))
    modelo = fit_gmm(pontos, 1, seed=0)
    assert np.allclose(modelo.means()[0], pontos.mean(axis=0), atol=1e-12)
    assert modelo.components[0].weight == 1.0
    assert membership(modelo, (0.3, 0.3)).probabilities == (1.0,)


def test_fit_errors():
    pontos = np.array([[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(GmmFitError):
        fit_gmm(pontos, 3, seed=0)
    with pytest.raises(GmmFitError):
        fit_gmm(pontos, 0, seed=0)
    with pytest.raises(GmmFitError, match="degenerado"):
        fit_gmm(np.tile([0.5, 0.5], (6, 1)), 2, seed=0)


def test_membership_symmetry_and_separation():
    cov = ((0.01, 0.0), (0.0, 0.01))
    modelo = GmmModel(components=(
        GmmComponent((0.0, 0.0), cov, 0.5),
        GmmComponent((1.0, 0.0), cov, 0.5),
    ), log_likelihood=0.0, seed=0)
    assert membership(modelo, (0.5, 0.3)).probabilities == pytest.approx((0.5, 0.5), abs=1e-12)
    # média do componente 2 a 10 unidades de Mahalanobis
    assert membership(modelo, (0.0, 0.0)).probabilities[0] > 0.999


def _brute_force_silhouette(valores, rotulos):
    q = []
    for i, (x, rotulo) in enumerate(zip(valores, rotulos)):
        mesmo = [abs(x - y) for j, (y, r) in enumerate(zip(valores, rotulos)) if r == rotulo and j != i]
        outros = {}
        for y, r in zip(valores, rotulos):
            if r != rotulo:
                outros.setdefault(r, []).append(abs(x - y))
        a = sum(mesmo) / len(mesmo)
        b = min(sum(d) / len(d) for d in outros.values())
        q.append((b - a) / max(a, b))
    return sum(q) / len(q), q


def test_silhouette_hand_example():
    pontos = [0.0, 0.1, 10.0, 10.1]
    rotulos = [0, 0, 1, 1]
    media, por_ponto = _brute_force_silhouette(pontos, rotulos)
    # ponto 0.1: a = 0.1, b = média(9.9, 10.0) = 9.95
    assert por_ponto[1] == pytest.approx(0.98995, abs=1e-5)
    assert silhouette_per_point(pontos, rotulos)[1] == pytest.approx(por_ponto[1], abs=1e-12)
    assert silhouette_avg(pontos, rotulos) == pytest.approx(media, abs=1e-6)
    assert silhouette_avg(pontos, rotulos) == pytest.approx(0.98995, abs=1e-4)


def test_silhouette_duplicates_and_singletons():
    duplicados = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]]
    assert silhouette_avg(duplicados, [0, 0, 1, 1]) == pytest.approx(1.0)
    assert silhouette_avg([[0.0, 0.0], [1.0, 1.0]], [0, 1]) == 0.0
    q = silhouette_per_point([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0]], [0, 0, 1])
    assert q[2] == 0.0
    with pytest.raises(ValueError):
        silhouette_avg([[0.0, 0.0], [1.0, 1.0]], [0, 0])


def test_silhouette_bounds_on_random_labels():
    rng = np.random.default_rng(4)
    for _ in range(20):
        pontos = rng.uniform(0, 1, (15, 2))
        rotulos = rng.integers(0, 3, 15)
        if len(np.unique(rotulos)) < 2:
            continue
        q = silhouette_per_point(pontos, rotulos)
        assert np.all((q >= -1.0) & (q <= 1.0))


def test_default_k_range():
    assert default_k_range(20, 4, 10) == (2, 4)
    assert default_k_range(3, 3, 10) == (2, 2)
    assert default_k_range(5, 1, 10) is None
    assert default_k_range(2, 2, 10) is None


def test_normalize_compositions_includes_target():
    pontos, alvo = normalize_compositions([(0.2, 0.5), (0.6, 0.1)], (0.8, 0.3), provenance=["a", "b"])
    assert [(p.r, p.c) for p in pontos] == [(0.0, 1.0), (pytest.approx(2 / 3), 0.0)]
    assert (alvo.r, alvo.c) == (1.0, pytest.approx(0.5))
    assert alvo.provenance == FUTURE_TARGET
    assert [p.provenance for p in pontos] == ["a", "b"]
