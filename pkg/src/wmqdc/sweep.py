"""Run configuration, time-series sweeps and their CSV/JSON serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import optomech
from .optomech import OptoParams

CSV_HEADER = ("tau", "q_over_sigma", "p_over_hbar2sigma", "prob_success", "arrival_density")
OUTPUT_KINDS = ("q", "p", "prob", "arrival")
MISSING = ""


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class RunConfig:
    k: float = 0.005
    alpha_over_halfpi: float = 0.996
    cutoff: int | str = "auto"
    tau_start: float = 0.0
    tau_stop: float = 4 * math.pi
    steps: int = 2000
    kappa_ratio: float = 0.25
    outputs: tuple = OUTPUT_KINDS
    paper_literal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        _check_number(self.k, "k")
        if not 0 < self.k <= optomech.K_MAX:
            raise ConfigError(f"must lie in (0, {optomech.K_MAX}]", "k")
        _check_number(self.alpha_over_halfpi, "alpha_over_halfpi")
        if not 0 <= self.alpha_over_halfpi <= 1:
            raise ConfigError("must lie in [0, 1]", "alpha_over_halfpi")
        if self.cutoff != "auto" and (isinstance(self.cutoff, bool) or not isinstance(self.cutoff, int) or self.cutoff < 1):
            raise ConfigError("must be a positive integer or 'auto'", "cutoff")
        _check_number(self.tau_start, "tau_start")
        _check_number(self.tau_stop, "tau_stop")
        if self.tau_start < 0:
            raise ConfigError("must be >= 0", "tau_start")
        if not self.tau_stop > self.tau_start:
            raise ConfigError("must exceed tau_start", "tau_stop")
        if isinstance(self.steps, bool) or not isinstance(self.steps, int) or self.steps < 2:
            raise ConfigError("must be an integer >= 2", "steps")
        _check_number(self.kappa_ratio, "kappa_ratio")
        if not self.kappa_ratio > 0:
            raise ConfigError("must be > 0", "kappa_ratio")
        bad = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if bad or not self.outputs:
            raise ConfigError(f"entries must be drawn from {list(OUTPUT_KINDS)}", "outputs")
        if not isinstance(self.paper_literal, bool):
            raise ConfigError("must be true or false", "paper_literal")

    @property
    def fock_cutoff(self) -> int | None:
        return None if self.cutoff == "auto" else self.cutoff

    def params(self, alpha_over_halfpi: float | None = None, kappa_ratio: float | None = None) -> OptoParams:
        return OptoParams.from_fraction(
            self.k,
            self.alpha_over_halfpi if alpha_over_halfpi is None else alpha_over_halfpi,
            cutoff=self.fock_cutoff,
            kappa_ratio=self.kappa_ratio if kappa_ratio is None else kappa_ratio,
        )

    def taus(self) -> np.ndarray:
        return np.linspace(self.tau_start, self.tau_stop, self.steps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"] = list(self.outputs)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict, base: RunConfig | None = None) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError("unknown key", unknown[0])
        merged = (base or cls()).to_dict()
        merged.update(data)
        return cls(**merged)

    @classmethod
    def from_json(cls, text: str, base: RunConfig | None = None) -> RunConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON ({exc.msg}, column {exc.colno})", line=exc.lineno) from None
        try:
            return cls.from_dict(data, base)
        except ConfigError as exc:
            if exc.field is not None and exc.line is None:
                raise ConfigError(str(exc).split(": ", 1)[-1], exc.field, _line_of(text, exc.field)) from None
            raise


def _check_number(value, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError("must be a finite number", name)


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


@dataclass
class SweepSeries:
    """Time series on a tau grid; NaN entries mark missing values."""

    tau: np.ndarray
    q: np.ndarray
    p: np.ndarray
    prob: np.ndarray
    arrival: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        if self.tau.size > 1 and not np.all(np.diff(self.tau) > 0):
            raise ValueError("tau must be strictly increasing")
        for name in ("q", "p", "prob", "arrival"):
            col = np.asarray(getattr(self, name), dtype=float)
            if col.shape != self.tau.shape:
                raise ValueError(f"column {name} has shape {col.shape}, expected {self.tau.shape}")
            # non-finite values are never serialized; treat them as missing
            setattr(self, name, np.where(np.isfinite(col), col, np.nan))

    def rows(self):
        for i in range(self.tau.size):
            yield tuple(_value(col[i]) for col in (self.tau, self.q, self.p, self.prob, self.arrival))

    def to_csv(self) -> str:
        lines = [",".join(CSV_HEADER)]
        for row in self.rows():
            lines.append(",".join(MISSING if v is None else repr(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "meta": self.meta,
            "columns": list(CSV_HEADER),
            "rows": [list(r) for r in self.rows()],
        }


def _value(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


def compute_series(
    params: OptoParams,
    taus,
    outputs=OUTPUT_KINDS,
    literal: bool = False,
    label: str = "",
) -> SweepSeries:
    """Evaluate the requested columns on ``taus`` with the closed forms.

    ``literal`` swaps in the as-printed formulas; the probability column is
    always the joint detection probability, so a printed value is divided by
    ``PRINTED_PROBABILITY_SCALE``.
    """
    taus = np.asarray(taus, dtype=float)
    k, a = params.k, params.alpha
    nan = np.full(taus.shape, np.nan)
    if literal:
        q = optomech.literal_mean_q(k, a, taus)
        p = optomech.literal_mean_p(k, a, taus)
        prob = optomech.literal_success_probability(k, a, taus) / optomech.PRINTED_PROBABILITY_SCALE
    else:
        q = optomech.closed_mean_q(k, a, taus)
        p = optomech.closed_mean_p(k, a, taus)
        prob = optomech.closed_success_probability(k, a, taus)
    r = params.kappa_ratio
    arrival = r * np.exp(-r * taus) * prob
    meta = {
        "k": k,
        "alpha_over_halfpi": a / (np.pi / 2),
        "kappa_ratio": r,
        "paper_literal": literal,
    }
    return SweepSeries(
        taus,
        q if "q" in outputs else nan,
        p if "p" in outputs else nan,
        prob if "prob" in outputs else nan,
        arrival if "arrival" in outputs else nan,
        label=label,
        meta=meta,
    )


def arrival_series(params: OptoParams, taus) -> SweepSeries:
    return compute_series(params, taus, outputs=("arrival",), label=f"kappa_ratio={params.kappa_ratio!r}")


FIG3_ALPHAS = (0.996, 0.9995, 1.0)
FIG4_ALPHAS = (0.996, 0.999, 1.0)
FIG5_OMEGA_OVER_KAPPA = (1.0, 2.0, 4.0)


def figure_series(config: RunConfig, figure: str) -> list:
    taus = config.taus()
    out = []
    if figure in ("fig3", "fig4"):
        alphas = FIG3_ALPHAS if figure == "fig3" else FIG4_ALPHAS
        for frac in alphas:
            out.append(
                compute_series(
                    config.params(alpha_over_halfpi=frac),
                    taus,
                    config.outputs,
                    config.paper_literal,
                    label=f"alpha_over_halfpi={frac!r}",
                )
            )
    elif figure == "fig5":
        for ratio in FIG5_OMEGA_OVER_KAPPA:
            out.append(
                compute_series(
                    config.params(kappa_ratio=1 / ratio),
                    taus,
                    config.outputs,
                    config.paper_literal,
                    label=f"omega_m_over_kappa={ratio!r}",
                )
            )
    elif figure == "sweep":
        out.append(
            compute_series(
                config.params(),
                taus,
                config.outputs,
                config.paper_literal,
                label=f"alpha_over_halfpi={config.alpha_over_halfpi!r}",
            )
        )
    else:
        raise ValueError(f"unknown figure {figure!r}")
    return out
