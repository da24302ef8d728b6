"""
Composição de carga e construção do perfil normalizado de 24 h do
transformador futuro a partir das pertinências aos clusters.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

HOURS = 24

# Folga aceita entre a soma das cargas por categoria e o pico do transformador
COINCIDENCE_SLACK = 0.01

# Massa mínima de responsabilidade para um cluster entrar no perfil final
MIN_CLUSTER_MASS = 1e-9


@dataclass(frozen=True)
class LoadComposition:
    """Frações residencial (r), comercial (c) e industrial (i) no pico do dia."""

    r: float
    c: float
    i: float

    def __post_init__(self):
        for nome, valor in (("r", self.r), ("c", self.c), ("i", self.i)):
            if not np.isfinite(valor) or valor < 0.0 or valor > 1.0:
                raise ValueError(f"Fração {nome}={valor} fora de [0, 1]")
        soma = self.r + self.c + self.i
        if abs(soma - 1.0) > 1e-9:
            raise ValueError(f"R+C+I = {soma}, esperado 1")

    @classmethod
    def from_fractions(cls, r, c, i, tol=1e-6):
        """
        Valida frações vindas de arquivo e renormaliza para soma exata 1.

        Args:
            r, c, i: Frações residencial, comercial e industrial
            tol: Desvio máximo aceito de R+C+I em relação a 1

        Returns:
            LoadComposition renormalizada

        Raises:
            ValueError: Fração fora de [0, 1] ou soma fora da tolerância
        """
        r, c, i = float(r), float(c), float(i)
        for nome, valor in (("r", r), ("c", c), ("i", i)):
            if not np.isfinite(valor) or valor < 0.0 or valor > 1.0:
                raise ValueError(f"Fração {nome}={valor} fora de [0, 1]")
        soma = r + c + i
        if abs(soma - 1.0) > tol:
            raise ValueError(f"R+C+I soma {soma:.6f}, desvio maior que {tol}")
        r, c = r / soma, c / soma
        return cls(r=r, c=c, i=max(0.0, 1.0 - r - c))

    def as_rc(self) -> Tuple[float, float]:
        return (self.r, self.c)


@dataclass(frozen=True)
class NormalizedLoadShape:
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != HOURS:
            raise ValueError(f"Perfil normalizado precisa de {HOURS} valores, recebeu {len(self.values)}")
        pico = max(self.values)
        if abs(pico - 1.0) > 1e-9 or min(self.values) < 0.0:
            raise ValueError(f"Perfil normalizado inválido (pico={pico})")


@dataclass(frozen=True)
class ClusterCentroidProfile:
    """Perfil do centróide k (L_k(t)) e seu pico P_k."""

    cluster: int
    profile: Tuple[float, ...]
    peak: float

    def __post_init__(self):
        if len(self.profile) != HOURS:
            raise ValueError(f"Perfil do cluster {self.cluster} precisa de {HOURS} valores")
        if self.peak <= 0 or abs(self.peak - max(self.profile)) > 1e-12:
            raise ValueError(f"Pico inválido para o cluster {self.cluster}: {self.peak}")


def compute_composition(peak_hour_loads: Mapping[str, float], p_t: float) -> LoadComposition:
    """
    Calcula a composição de carga no horário de pico do transformador.

    Args:
        peak_hour_loads: Cargas (MVA) por categoria no horário de pico, chaves
            'residential', 'commercial' e 'industrial'
        p_t: Pico do transformador no dia (MVA)

    Returns:
        LoadComposition com r = residencial / total, c = comercial / total, i = 1 - r - c

    Raises:
        ValueError: p_t <= 0, carga negativa ou soma das categorias fora de 1% de p_t
    """
    if p_t <= 0:
        raise ValueError(f"Pico do transformador deve ser positivo, recebeu {p_t}")
    res = float(peak_hour_loads.get("residential", 0.0))
    com = float(peak_hour_loads.get("commercial", 0.0))
    ind = float(peak_hour_loads.get("industrial", 0.0))
    if min(res, com, ind) < 0:
        raise ValueError(f"Cargas por categoria não podem ser negativas: {res}, {com}, {ind}")
    total = res + com + ind
    if abs(total - p_t) > COINCIDENCE_SLACK * p_t:
        raise ValueError(
            f"Soma das categorias ({total:.4f} MVA) difere do pico ({p_t:.4f} MVA) em mais de 1%"
        )
    r = res / total
    c = com / total
    return LoadComposition(r=r, c=c, i=max(0.0, 1.0 - r - c))


def normalize_profile(loads: Sequence[float]) -> NormalizedLoadShape:
    """Divide cada hora pelo máximo do dia."""
    arr = np.asarray(loads, dtype=float)
    if arr.shape != (HOURS,):
        raise ValueError(f"Perfil precisa de {HOURS} valores, recebeu {arr.shape}")
    pico = arr.max()
    if pico <= 0:
        raise ValueError("Dia com carga nula não pode ser normalizado")
    return NormalizedLoadShape(values=tuple(float(v) for v in arr / pico))


def _probabilities(membership) -> np.ndarray:
    return np.asarray(getattr(membership, "probabilities", membership), dtype=float)


def centroid_profiles(members, k: int) -> list:
    """
    Perfil de cada centróide como média dos perfis normalizados dos membros,
    ponderada pelas responsabilidades.

    Args:
        members: Sequência de pares (cargas de 24 h, Membership ou vetor de K probabilidades)
        k: Número de clusters

    Returns:
        Lista de ClusterCentroidProfile, só com clusters de massa >= 1e-9
    """
    if not members:
        raise ValueError("Nenhum membro para calcular centróides")
    shapes = np.array([normalize_profile(loads).values for loads, _ in members])
    resp = np.array([_probabilities(m) for _, m in members])
    if resp.shape != (len(members), k):
        raise ValueError(f"Responsabilidades com forma {resp.shape}, esperado ({len(members)}, {k})")

    massa = resp.sum(axis=0)
    perfis = []
    for idx in range(k):
        if massa[idx] < MIN_CLUSTER_MASS:
            logger.warning(f"Cluster {idx} descartado: massa de responsabilidade {massa[idx]:.3e}")
            continue
        perfil = resp[:, idx] @ shapes / massa[idx]
        perfis.append(
            ClusterCentroidProfile(
                cluster=idx,
                profile=tuple(float(v) for v in perfil),
                peak=float(perfil.max()),
            )
        )
    return perfis


def construct_load_shape(memberships, centroids: Sequence[ClusterCentroidProfile]) -> Tuple[float, ...]:
    """
    Perfil normalizado do transformador futuro:
    L_pu(t) = soma_k p_xk * L_k(t) / P_k.

    Quando clusters foram descartados, as pertinências dos clusters restantes
    são renormalizadas.
    """
    if not centroids:
        raise ValueError("Nenhum centróide disponível")
    p = _probabilities(memberships)
    if len(p) != len(centroids):
        # Vetor completo de K pertinências: seleciona os clusters mantidos
        p = np.array([p[cent.cluster] for cent in centroids])
    massa = p.sum()
    if massa <= 0:
        raise ValueError("Pertinências nulas para todos os clusters mantidos")
    p = p / massa
    return tuple(float(v) for v in p @ peak_normalized_shapes(centroids))


def peak_normalized_shapes(centroids: Sequence[ClusterCentroidProfile]) -> np.ndarray:
    """Matriz (K, 24) dos perfis dos centróides divididos pelos respectivos picos."""
    return np.array([np.asarray(cent.profile) / cent.peak for cent in centroids])
