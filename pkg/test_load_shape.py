import numpy as np
import pytest

from gmm_clustering import Membership
from load_shape import (
    ClusterCentroidProfile,
    LoadComposition,
    NormalizedLoadShape,
    centroid_profiles,
    compute_composition,
    construct_load_shape,
    normalize_profile,
)

HORAS = np.arange(24)
PERFIL_A = tuple(float(v) for v in 10 + 5 * np.sin(2 * np.pi * HORAS / 24))
PERFIL_B = tuple(float(v) for v in 20 + 8 * np.cos(2 * np.pi * HORAS / 24))


def test_composition_single_residential_customer():
    comp = compute_composition({"residential": 10.0}, 10.0)
    assert (comp.r, comp.c, comp.i) == (1.0, 0.0, 0.0)


def test_composition_commercial_heavy_transformer():
    comp = compute_composition({"residential": 0.3, "commercial": 8.8, "industrial": 0.9}, 10.0)
    assert (comp.r, comp.c, comp.i) == pytest.approx((0.03, 0.88, 0.09))


def test_composition_equal_thirds():
    comp = compute_composition({"residential": 1.0, "commercial": 1.0, "industrial": 1.0}, 3.0)
    assert (comp.r, comp.c, comp.i) == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_composition_errors():
    with pytest.raises(ValueError):
        compute_composition({"residential": 1.0}, 0.0)
    with pytest.raises(ValueError):
        compute_composition({"residential": 5.0, "commercial": 4.0}, 10.0)
    with pytest.raises(ValueError):
        compute_composition({"residential": -1.0, "commercial": 11.0}, 10.0)


def test_from_fractions_validates_sum():
    assert LoadComposition.from_fractions(0.03, 0.88, 0.09).c == pytest.approx(0.88)
    with pytest.raises(ValueError):
        LoadComposition.from_fractions(0.3, 0.3, 0.3)
    with pytest.raises(ValueError):
        LoadComposition.from_fractions(1.2, -0.1, -0.1)


def test_normalize_profile():
    assert normalize_profile([10.0] * 24).values == (1.0,) * 24
    cargas = [25.0 + h for h in range(24)]
    cargas[18] = 50.0
    normalizado = normalize_profile(cargas)
    assert normalizado.values[18] == 1.0
    assert normalizado.values[0] == 0.5
    with pytest.raises(ValueError):
        normalize_profile([0.0] * 24)
    with pytest.raises(ValueError):
        normalize_profile([1.0] * 23)


def test_normalized_shape_requires_unit_peak():
    with pytest.raises(ValueError):
        NormalizedLoadShape(values=(0.5,) * 24)


def test_single_member_centroid_is_its_shape():
    [centroide] = centroid_profiles([(PERFIL_A, Membership((1.0,)))], 1)
    assert centroide.profile == pytest.approx(normalize_profile(PERFIL_A).values)
    assert centroide.peak == pytest.approx(1.0)


def test_equal_responsibility_gives_pointwise_mean():
    [centroide] = centroid_profiles([(PERFIL_A, [1.0]), (PERFIL_B, [1.0])], 1)
    esperado = (np.asarray(normalize_profile(PERFIL_A).values) + np.asarray(normalize_profile(PERFIL_B).values)) / 2
    assert np.allclose(centroide.profile, esperado, atol=1e-12)


def test_degenerate_responsibilities_and_dropped_cluster():
    membros = [(PERFIL_A, [1.0, 0.0]), (PERFIL_B, [0.0, 1.0]), ([5.0] * 24, [0.0, 1.0])]
    centroides = centroid_profiles(membros, 2)
    assert [c.cluster for c in centroides] == [0, 1]
    assert centroides[0].profile == normalize_profile(PERFIL_A).values

    centroides = centroid_profiles([(PERFIL_A, [1.0, 0.0]), (PERFIL_B, [1.0, 0.0])], 2)
    assert [c.cluster for c in centroides] == [0]


def test_centroids_do_not_depend_on_member_order():
    rng = np.random.default_rng(4)
    membros = [(tuple(float(v) for v in rng.uniform(1, 30, 24)), rng.dirichlet([1.0, 1.0, 1.0])) for _ in range(12)]
    referencia = centroid_profiles(membros, 3)
    for _ in range(5):
        embaralhados = [membros[i] for i in rng.permutation(len(membros))]
        for esperado, obtido in zip(referencia, centroid_profiles(embaralhados, 3)):
            assert obtido.cluster == esperado.cluster
            assert obtido.profile == pytest.approx(esperado.profile, abs=1e-12)
            assert obtido.peak == pytest.approx(esperado.peak, abs=1e-12)


def test_centroid_profiles_shape_mismatch():
    with pytest.raises(ValueError):
        centroid_profiles([(PERFIL_A, [0.5, 0.5])], 3)
    with pytest.raises(ValueError):
        centroid_profiles([], 1)


def _centroide(cluster, perfil):
    perfil = tuple(float(v) for v in perfil)
    return ClusterCentroidProfile(cluster=cluster, profile=perfil, peak=max(perfil))


def test_construct_single_cluster_divides_by_peak():
    centroide = _centroide(0, np.asarray(PERFIL_A) / 20.0)
    forma = construct_load_shape(Membership((1.0,)), [centroide])
    assert np.allclose(forma, np.asarray(PERFIL_A) / max(PERFIL_A), atol=1e-12)
    assert max(forma) == pytest.approx(1.0)


def test_construct_mixes_by_membership():
    a = normalize_profile(PERFIL_A).values
    b = normalize_profile(PERFIL_B).values
    centroides = [_centroide(0, a), _centroide(1, b)]
    assert np.allclose(construct_load_shape((0.5, 0.5), centroides), (np.asarray(a) + np.asarray(b)) / 2)
    assert construct_load_shape((1.0, 0.0), centroides) == pytest.approx(a)


def test_construct_renormalizes_over_kept_clusters():
    a = normalize_profile(PERFIL_A).values
    # cluster 1 foi descartado; pertinência completa com 3 entradas
    forma = construct_load_shape(Membership((0.2, 0.3, 0.5)), [_centroide(0, a), _centroide(2, a)])
    assert forma == pytest.approx(a)
    with pytest.raises(ValueError):
        construct_load_shape((0.0, 1.0, 0.0), [_centroide(0, a), _centroide(2, a)])
