"""
Modelo térmico horário da IEEE C57.91-2011.

Fluxo de um dia:
    1. elevação do topo do óleo sobre o ambiente (com laço cíclico de condição inicial)
    2. elevação do ponto mais quente do enrolamento sobre o topo do óleo
    3. temperatura do ponto mais quente ao fim de cada hora
    4. fator de aceleração de envelhecimento horário F_AA (Arrhenius)
    5. fator de envelhecimento equivalente F_EQA do dia (média dos 24 F_AA)
"""

import logging
import os
from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv
from scipy.signal import lfilter

load_dotenv()

logger = logging.getLogger(__name__)

HOURS = 24

# Passo da recursão em horas. 24 reproduz a leitura literal do expoente -24/tau.
THERMAL_DT_HOURS = float(os.getenv("THERMAL_DT_HOURS", "1.0"))
THERMAL_CONVERGENCE_C = float(os.getenv("THERMAL_CONVERGENCE_C", "0.01"))
THERMAL_MAX_PASSES = int(os.getenv("THERMAL_MAX_PASSES", "100"))

# Temperatura de referência do ponto mais quente: 110 °C = 383 K
REFERENCE_KELVIN = 383.0
ARRHENIUS_B = 15000.0


class ThermalConvergenceError(RuntimeError):
    def __init__(self, passes, residual):
        self.passes = passes
        self.residual = residual
        super().__init__(
            f"Laço de condição inicial não convergiu em {passes} passagens (resíduo {residual:.4f} °C)"
        )


@dataclass(frozen=True)
class ThermalParameters:
    """
    Constantes do transformador fornecidas pelo fabricante.

    Attributes:
        rated_mva: Potência nominal (MVA)
        dtheta_to_r: Elevação do topo do óleo em carga nominal (°C)
        dtheta_h_r: Gradiente do ponto mais quente em carga nominal (°C)
        loss_ratio: Razão perdas em carga / perdas em vazio (R)
        tau_to: Constante de tempo do óleo (h)
        tau_w: Constante de tempo do enrolamento (h)
        n_exp: Expoente do óleo (0.8 ONAN, 0.9 ONAF)
        m_exp: Expoente do enrolamento (0.8 típico, 1.0 ODAF)
    """

    rated_mva: float
    dtheta_to_r: float
    dtheta_h_r: float
    loss_ratio: float
    tau_to: float
    tau_w: float
    n_exp: float
    m_exp: float

    def __post_init__(self):
        for campo in fields(self):
            valor = getattr(self, campo.name)
            if not np.isfinite(valor) or valor <= 0:
                raise ValueError(f"Parâmetro térmico {campo.name}={valor} deve ser positivo")
        if not 0.5 <= self.n_exp <= 1.0:
            raise ValueError(f"n_exp={self.n_exp} fora de [0.5, 1.0]")
        if not 0.5 <= self.m_exp <= 1.0:
            raise ValueError(f"m_exp={self.m_exp} fora de [0.5, 1.0]")
        if self.tau_to <= self.tau_w:
            raise ValueError(f"tau_to ({self.tau_to} h) deve ser maior que tau_w ({self.tau_w} h)")


# Preset para testes e demonstrações; estudos reais usam dados do fabricante
PRESETS = {
    "onaf-50mva": ThermalParameters(
        rated_mva=50.0,
        dtheta_to_r=55.0,
        dtheta_h_r=25.0,
        loss_ratio=5.0,
        tau_to=3.5,
        tau_w=0.08,
        n_exp=0.9,
        m_exp=0.8,
    ),
}
DEFAULT_PRESET = "onaf-50mva"

# Chaves do arquivo de parâmetros térmicos
PARAMETER_KEYS = {
    "RATED_MVA": "rated_mva",
    "DTHETA_TO_R": "dtheta_to_r",
    "DTHETA_H_R": "dtheta_h_r",
    "LOSS_RATIO": "loss_ratio",
    "TAU_TO": "tau_to",
    "TAU_W": "tau_w",
    "N_EXP": "n_exp",
    "M_EXP": "m_exp",
}


def load_thermal_parameters(path: Optional[str] = None, preset: Optional[str] = None) -> ThermalParameters:
    """
    Monta os parâmetros a partir de um preset e/ou de um arquivo no formato .env.

    O arquivo pode conter PRESET e qualquer das oito chaves de PARAMETER_KEYS;
    valores do arquivo sobrescrevem os do preset.

    Args:
        path: Caminho do arquivo de parâmetros (opcional)
        preset: Nome do preset quando o arquivo não define PRESET

    Returns:
        ThermalParameters validado

    Raises:
        ValueError: Preset desconhecido, chave ausente sem preset ou valor inválido
    """
    valores = dotenv_values(path) if path else {}
    nome = valores.get("PRESET") or preset
    if nome and nome not in PRESETS:
        raise ValueError(f"Preset térmico desconhecido: {nome}. Disponíveis: {sorted(PRESETS)}")

    sobrescritos = {}
    for chave, campo in PARAMETER_KEYS.items():
        if valores.get(chave) not in (None, ""):
            try:
                sobrescritos[campo] = float(valores[chave])
            except ValueError:
                raise ValueError(f"{path}: {chave}='{valores[chave]}' não é numérico")

    if nome:
        params = replace(PRESETS[nome], **sobrescritos)
    else:
        faltando = [c for c, campo in PARAMETER_KEYS.items() if campo not in sobrescritos]
        if faltando:
            raise ValueError(f"{path}: sem PRESET e faltam as chaves {faltando}")
        params = ThermalParameters(**sobrescritos)
    logger.debug(f"Parâmetros térmicos: {params}")
    return params


@dataclass(frozen=True)
class DayThermalResult:
    loads_pu: Tuple[float, ...]
    ambient: Tuple[float, ...]
    dtheta_to: Tuple[float, ...]
    dtheta_h: Tuple[float, ...]
    theta_h: Tuple[float, ...]
    f_aa: Tuple[float, ...]
    f_eqa: float
    iterations: int


def ultimate_top_oil_rise(k_u, p: ThermalParameters):
    """Elevação final do topo do óleo para a carga K_u."""
    k_u = np.asarray(k_u, dtype=float)
    return p.dtheta_to_r * ((k_u ** 2 * p.loss_ratio + 1.0) / (p.loss_ratio + 1.0)) ** p.n_exp


def top_oil_step(dtheta_to_init, k_u, p: ThermalParameters, dt_hours: float = THERMAL_DT_HOURS):
    """
    Elevação do topo do óleo ao fim da hora.

    Args:
        dtheta_to_init: Elevação no início da hora (°C)
        k_u: Carga da hora em p.u. da nominal
        p: Parâmetros térmicos
        dt_hours: Duração do passo (h)

    Returns:
        Δθ_TO ao fim do passo (°C)
    """
    if dt_hours <= 0:
        raise ValueError(f"dt_hours deve ser positivo, recebeu {dt_hours}")
    final = ultimate_top_oil_rise(k_u, p)
    resultado = (final - dtheta_to_init) * (1.0 - np.exp(-dt_hours / p.tau_to)) + dtheta_to_init
    return float(resultado) if np.ndim(resultado) == 0 else resultado


def hotspot_step(k_i, k_u, p: ThermalParameters, dt_hours: float = THERMAL_DT_HOURS):
    """Elevação do ponto mais quente sobre o topo do óleo ao fim da hora."""
    if dt_hours <= 0:
        raise ValueError(f"dt_hours deve ser positivo, recebeu {dt_hours}")
    inicial = p.dtheta_h_r * np.asarray(k_i, dtype=float) ** (2.0 * p.m_exp)
    final = p.dtheta_h_r * np.asarray(k_u, dtype=float) ** (2.0 * p.m_exp)
    resultado = (final - inicial) * (1.0 - np.exp(-dt_hours / p.tau_w)) + inicial
    return float(resultado) if np.ndim(resultado) == 0 else resultado


def aging_factor(theta_h):
    """F_AA = exp(15000/383 - 15000/(θ_H + 273))."""
    theta_h = np.asarray(theta_h, dtype=float)
    if np.any(theta_h <= -273.0):
        raise ValueError("Temperatura do ponto mais quente abaixo do zero absoluto")
    resultado = np.exp(ARRHENIUS_B / REFERENCE_KELVIN - ARRHENIUS_B / (theta_h + 273.0))
    return float(resultado) if resultado.ndim == 0 else resultado


def simulate_day(loads_pu: Sequence[float], ambient: Sequence[float], p: ThermalParameters,
                 dt_hours: float = THERMAL_DT_HOURS, initial_top_oil: float = 0.0,
                 tol_c: float = THERMAL_CONVERGENCE_C, max_passes: int = THERMAL_MAX_PASSES) -> DayThermalResult:
    """
    Simula um dia cíclico de 24 horas.

    O topo do óleo parte de `initial_top_oil` na primeira hora; cada hora
    alimenta a seguinte e, ao fim da passagem, a hora 24 realimenta a hora 1.
    As passagens se repetem até a maior variação horária ficar abaixo de
    `tol_c`. O K_i da hora 1 é a carga da hora 24.

    Raises:
        ThermalConvergenceError: Sem convergência após max_passes passagens
    """
    k = np.asarray(loads_pu, dtype=float)
    amb = np.asarray(ambient, dtype=float)
    if k.shape != (HOURS,) or amb.shape != (HOURS,):
        raise ValueError(f"Carga e ambiente precisam de {HOURS} valores")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise ValueError("Cargas devem ser finitas e não negativas")
    if dt_hours <= 0:
        raise ValueError(f"dt_hours deve ser positivo, recebeu {dt_hours}")

    final = ultimate_top_oil_rise(k, p)
    alfa = 1.0 - np.exp(-dt_hours / p.tau_to)
    # Δθ_TO[t] = alfa * final[t] + (1 - alfa) * Δθ_TO[t-1]
    b, a = [alfa], [1.0, -(1.0 - alfa)]

    inicio = float(initial_top_oil)
    anterior = None
    residuo = np.inf
    for passe in range(1, max_passes + 1):
        topo, _ = lfilter(b, a, final, zi=[(1.0 - alfa) * inicio])
        if anterior is not None:
            residuo = float(np.max(np.abs(topo - anterior)))
            if residuo < tol_c:
                break
        anterior = topo
        inicio = float(topo[-1])
    else:
        raise ThermalConvergenceError(max_passes, residuo)

    gradiente = hotspot_step(np.roll(k, 1), k, p, dt_hours)
    theta_h = amb + topo + gradiente
    f_aa = aging_factor(theta_h)
    return DayThermalResult(
        loads_pu=tuple(float(v) for v in k),
        ambient=tuple(float(v) for v in amb),
        dtheta_to=tuple(float(v) for v in topo),
        dtheta_h=tuple(float(v) for v in gradiente),
        theta_h=tuple(float(v) for v in theta_h),
        f_aa=tuple(float(v) for v in f_aa),
        f_eqa=float(np.mean(f_aa)),
        iterations=passe,
    )
