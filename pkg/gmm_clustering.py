"""
Mistura de gaussianas 2-D sobre composições (R, C) ajustada por EM,
pertinências de cada ponto e escolha de K pela silhueta média.
"""

import logging
import os
from dataclasses import dataclass, replace
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv
from scipy.special import logsumexp
from scipy.stats import multivariate_normal
from sklearn.metrics import silhouette_samples, silhouette_score

from temperature_profiles import FeatureNormalizer

load_dotenv()

logger = logging.getLogger(__name__)

GMM_N_INIT = int(os.getenv("GMM_N_INIT", "5"))
GMM_MAX_ITER = int(os.getenv("GMM_MAX_ITER", "500"))
GMM_TOL = float(os.getenv("GMM_TOL", "1e-6"))
GMM_REG_COVAR = float(os.getenv("GMM_REG_COVAR", "1e-6"))
GMM_K_MAX = int(os.getenv("GMM_K_MAX", "10"))

# Folga para considerar a log-verossimilhança não decrescente
LL_SLACK = 1e-9

FUTURE_TARGET = "future-target"


class GmmFitError(ValueError):
    pass


@dataclass(frozen=True)
class CompositionPoint:
    """(R, C) normalizados e a origem: (transformer_id, data) ou 'future-target'."""

    r: float
    c: float
    provenance: Any = None

    def __post_init__(self):
        if not (0.0 <= self.r <= 1.0 and 0.0 <= self.c <= 1.0):
            raise ValueError(f"Ponto de composição fora de [0, 1]: ({self.r}, {self.c})")

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.c])


@dataclass(frozen=True)
class GmmComponent:
    mean: Tuple[float, float]
    covariance: Tuple[Tuple[float, float], Tuple[float, float]]
    weight: float

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError(f"Covariância deve ser 2x2 simétrica: {self.covariance}")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError(f"Covariância não é definida positiva: {self.covariance}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"Peso {self.weight} fora de [0, 1]")


@dataclass(frozen=True)
class GmmModel:
    """
    Modelo ajustado.

    Attributes:
        components: K componentes
        log_likelihood: Log-verossimilhança final
        seed: Semente usada no ajuste
        history: Log-verossimilhança a cada iteração aceita da melhor reinicialização
        converged: Se o critério de convergência foi atingido
        silhouette: Q_avg quando o modelo veio de select_k
    """

    components: Tuple[GmmComponent, ...]
    log_likelihood: float
    seed: int
    history: Tuple[float, ...] = ()
    converged: bool = True
    silhouette: Optional[float] = None

    def __post_init__(self):
        if not self.components:
            raise ValueError("Modelo precisa de ao menos um componente")
        soma = sum(c.weight for c in self.components)
        if abs(soma - 1.0) > 1e-9:
            raise ValueError(f"Pesos somam {soma}, esperado 1")

    @property
    def k(self) -> int:
        return len(self.components)

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    def to_dict(self) -> dict:
        return {
            "k_star": self.k,
            "q_avg": self.silhouette,
            "log_likelihood": self.log_likelihood,
            "seed": self.seed,
            "components": [
                {"mean": list(c.mean), "covariance": [list(linha) for linha in c.covariance], "weight": c.weight}
                for c in self.components
            ],
        }


@dataclass(frozen=True)
class Membership:
    probabilities: Tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities)
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"Pertinências inválidas: {self.probabilities}")

    @property
    def top(self) -> float:
        return max(self.probabilities)

    @property
    def label(self) -> int:
        return int(np.argmax(self.probabilities))


def _as_matrix(points) -> np.ndarray:
    if len(points) and isinstance(points[0], CompositionPoint):
        return np.array([p.as_array() for p in points])
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def gaussian_pdf(x, mean, covariance) -> float:
    """
    Densidade gaussiana multivariada.

    Raises:
        GmmFitError: Covariância singular
    """
    try:
        return float(multivariate_normal(mean=np.asarray(mean, dtype=float),
                                         cov=np.asarray(covariance, dtype=float)).pdf(np.asarray(x, dtype=float)))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise GmmFitError(f"Covariância singular: {e}")


def _log_weighted_densities(X, weights, means, covs) -> np.ndarray:
    """Matriz (N, K) de log(w_k) + log N_k(x)."""
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    colunas = [
        np.atleast_1d(multivariate_normal.logpdf(X, mean=means[j], cov=covs[j])) + log_w[j]
        for j in range(len(weights))
    ]
    return np.column_stack(colunas)


def _m_step(X, resp, previous_means, previous_covs, reg_covar):
    n, dim = X.shape
    nk = resp.sum(axis=0)
    weights = nk / nk.sum()
    means = previous_means.copy()
    covs = previous_covs.copy()
    for j in range(resp.shape[1]):
        if nk[j] < 1e-12:
            # Componente sem responsabilidade: mantém posição e forma
            continue
        means[j] = resp[:, j] @ X / nk[j]
        diff = X - means[j]
        cov = (resp[:, j, None] * diff).T @ diff / nk[j]
        covs[j] = 0.5 * (cov + cov.T) + reg_covar * np.eye(dim)
    return weights, means, covs


def _run_em(X, k, rng, max_iter, tol, reg_covar):
    n, dim = X.shape
    unicos = np.unique(X, axis=0)
    means = unicos[rng.choice(len(unicos), size=k, replace=False)].astype(float)
    escala = max(float(X.var(axis=0).mean()), reg_covar)
    covs = np.array([escala * np.eye(dim) for _ in range(k)])
    weights = np.full(k, 1.0 / k)

    log_prob = _log_weighted_densities(X, weights, means, covs)
    ll = float(logsumexp(log_prob, axis=1).sum())
    history = [ll]
    converged = False
    for _ in range(max_iter):
        resp = np.exp(log_prob - logsumexp(log_prob, axis=1, keepdims=True))
        novos = _m_step(X, resp, means, covs, reg_covar)
        novo_log_prob = _log_weighted_densities(X, *novos)
        novo_ll = float(logsumexp(novo_log_prob, axis=1).sum())
        if novo_ll < ll - LL_SLACK:
            # Queda por arredondamento/regularização: mantém os parâmetros anteriores
            logger.debug(f"EM k={k}: log-verossimilhança caiu de {ll} para {novo_ll}, parando")
            converged = True
            break
        delta = novo_ll - ll
        weights, means, covs = novos
        log_prob, ll = novo_log_prob, novo_ll
        history.append(ll)
        if abs(delta) < tol:
            converged = True
            break
    return weights, means, covs, history, converged


def fit_gmm(points: Sequence[CompositionPoint], k: int, seed: int, n_init: int = GMM_N_INIT,
            max_iter: int = GMM_MAX_ITER, tol: float = GMM_TOL, reg_covar: float = GMM_REG_COVAR) -> GmmModel:
    """
    Ajusta uma mistura de k gaussianas por EM, com n_init reinicializações.

    Cada reinicialização escolhe k pontos distintos como médias usando um
    gerador derivado de (seed, k, índice), pesos uniformes e covariâncias
    isotrópicas. Vence a de maior log-verossimilhança final.

    Args:
        points: Pontos de composição (ou matriz N x 2)
        k: Número de componentes
        seed: Semente
        n_init: Reinicializações
        max_iter: Iterações máximas do EM
        tol: Variação absoluta de log-verossimilhança que encerra o EM
        reg_covar: ε somado à diagonal das covariâncias a cada passo M

    Returns:
        GmmModel

    Raises:
        GmmFitError: k inválido, mais componentes que pontos ou pontos distintos insuficientes
    """
    X = _as_matrix(points)
    n = len(X)
    if k < 1:
        raise GmmFitError(f"k deve ser >= 1, recebeu {k}")
    if k > n:
        raise GmmFitError(f"k={k} maior que o número de pontos ({n})")
    distintos = len(np.unique(X, axis=0))
    if k > distintos:
        if distintos == 1:
            raise GmmFitError(f"Ajuste degenerado: todos os {n} pontos são idênticos e k={k}")
        raise GmmFitError(f"Ajuste degenerado: apenas {distintos} pontos distintos para k={k}")

    melhor = None
    for reinicio in range(max(1, n_init)):
        rng = np.random.default_rng([seed, k, reinicio])
        resultado = _run_em(X, k, rng, max_iter, tol, reg_covar)
        if melhor is None or resultado[3][-1] > melhor[3][-1]:
            melhor = resultado
    weights, means, covs, history, converged = melhor
    if not converged:
        logger.warning(f"EM k={k} não convergiu em {max_iter} iterações")

    weights = weights / weights.sum()
    componentes = tuple(
        GmmComponent(
            mean=(float(means[j][0]), float(means[j][1])),
            covariance=((float(covs[j][0, 0]), float(covs[j][0, 1])), (float(covs[j][1, 0]), float(covs[j][1, 1]))),
            weight=float(weights[j]),
        )
        for j in range(k)
    )
    return GmmModel(components=componentes, log_likelihood=history[-1], seed=seed,
                    history=tuple(history), converged=converged)


def membership_matrix(model: GmmModel, points) -> np.ndarray:
    """Matriz (N, K) de pertinências."""
    X = _as_matrix(points)
    weights = np.array([c.weight for c in model.components])
    means = model.means()
    covs = np.array([c.covariance for c in model.components])
    log_prob = _log_weighted_densities(X, weights, means, covs)
    resultado = np.empty_like(log_prob)
    for i, linha in enumerate(log_prob):
        if not np.isfinite(linha).any():
            # Todas as densidades zeraram: atribuição dura à média mais próxima
            resultado[i] = 0.0
            resultado[i, int(np.argmin(np.linalg.norm(means - X[i], axis=1)))] = 1.0
            continue
        p = np.exp(linha - logsumexp(linha))
        resultado[i] = p / p.sum()
    return resultado


def membership(model: GmmModel, x) -> Membership:
    """Probabilidade de pertinência do ponto a cada componente."""
    ponto = x.as_array() if isinstance(x, CompositionPoint) else np.asarray(x, dtype=float)
    p = membership_matrix(model, ponto.reshape(1, -1))[0]
    return Membership(probabilities=tuple(float(v) for v in p))


def silhouette_avg(points, labels) -> float:
    """
    Silhueta média com distância euclidiana; clusters unitários contribuem 0.

    Raises:
        ValueError: Menos de 2 rótulos distintos
    """
    X = _as_matrix(points)
    rotulos = np.asarray(labels)
    distintos = len(np.unique(rotulos))
    if distintos < 2:
        raise ValueError(f"Silhueta exige ao menos 2 clusters, recebeu {distintos}")
    if distintos == len(X):
        return 0.0
    return float(silhouette_score(X, rotulos, metric="euclidean"))


def silhouette_per_point(points, labels) -> np.ndarray:
    """Q_r de cada ponto."""
    X = _as_matrix(points)
    rotulos = np.asarray(labels)
    if len(np.unique(rotulos)) == len(X):
        return np.zeros(len(X))
    return silhouette_samples(X, rotulos, metric="euclidean")


def select_k(points, k_min: int, k_max: int, seed: int, n_init: int = GMM_N_INIT) -> Tuple[int, GmmModel]:
    """
    Ajusta um modelo para cada k em [k_min, k_max] e fica com o de maior
    silhueta média (empate: menor k). Rótulos duros = argmax das pertinências.

    Returns:
        (k_star, modelo com `silhouette` preenchido)
    """
    X = _as_matrix(points)
    if not 2 <= k_min <= k_max <= len(X):
        raise ValueError(f"Faixa de k inválida: {k_min}..{k_max} para {len(X)} pontos")

    melhor_k, melhor_modelo, melhor_q = None, None, -np.inf
    pontuacoes = {}
    for k in range(k_min, k_max + 1):
        modelo = fit_gmm(X, k, seed, n_init=n_init)
        rotulos = membership_matrix(modelo, X).argmax(axis=1)
        if len(np.unique(rotulos)) < 2:
            q = -1.0
        else:
            q = silhouette_avg(X, rotulos)
        pontuacoes[k] = q
        if q > melhor_q:
            melhor_k, melhor_modelo, melhor_q = k, modelo, q
    logger.debug(f"Silhueta por k: {pontuacoes} -> k*={melhor_k}")
    return melhor_k, replace(melhor_modelo, silhouette=melhor_q)


def default_k_range(n_points: int, n_distinct: int, k_max: int = GMM_K_MAX) -> Optional[Tuple[int, int]]:
    """Faixa 2..min(k_max, pontos - 1, pontos distintos); None quando não cabe nem k=2."""
    teto = min(k_max, n_points - 1, n_distinct)
    if teto < 2:
        return None
    return (2, teto)


def normalize_compositions(raw: Sequence[Tuple[float, float]], target: Tuple[float, float],
                           provenance: Optional[Sequence] = None) -> Tuple[List[CompositionPoint], CompositionPoint]:
    """
    Normaliza (R, C) para [0, 1] com mínimo e máximo dos pontos existentes
    somados ao alvo, para que o alvo não caia fora da faixa.
    """
    matriz = np.asarray(list(raw) + [tuple(target)], dtype=float)
    normalizador = FeatureNormalizer.from_matrix(matriz)
    normalizado = normalizador.normalize(matriz)
    origem = list(provenance) if provenance is not None else [None] * len(raw)
    pontos = [CompositionPoint(r=float(a), c=float(b), provenance=o) for (a, b), o in zip(normalizado[:-1], origem)]
    alvo = CompositionPoint(r=float(normalizado[-1][0]), c=float(normalizado[-1][1]), provenance=FUTURE_TARGET)
    return pontos, alvo
