"""Total achievable throughput per resource of sparse and dense spreading.

The asymptotic throughput at signal-to-noise ratio ``snr`` is the spectral
average

    C(snr) = 1/2 * integral log2(1 + snr * lam) rho(lam) dlam

in bits per resource use, evaluated against the regular-ensemble law, the
dense-spreading (Marchenko-Pastur) reference, or bounded by the orthogonal
multiple-access value ``1/2 log2(1 + beta snr)``.  The finite-size
counterpart averages ``1/(2N) sum log2(1 + snr lam_i)`` over sampled
matrices.  Energy-per-bit ratios follow from ``Eb/N0 = beta snr / (2 C)``
and are inverted by bisection; the small-snr limit of that map is ln 2 for
every curve.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import quadrature
from .ensembles import (EnsembleSpec, EntryMode, GenerationError,
                        generate_irregular, generate_regular)
from .spectra import (DensityParams, SpectraError, analytic_density,
                      marchenko_pastur_density)

__all__ = [
    "Curve",
    "SweepVariable",
    "SweepSpec",
    "MCResult",
    "regular_throughput",
    "dense_rs_throughput",
    "cover_wyner_bound",
    "ebno_from_snr",
    "snr_for_ebno",
    "finite_n_throughput_mc",
    "sweep",
    "db_to_linear",
    "linear_to_db",
]

LN2 = math.log(2.0)
SNR_BRACKET = (1e-6, 1e6)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if not x > 0.0:
        raise ValueError(f"need a positive ratio, got {x}")
    return 10.0 * math.log10(x)


def _check_snr(snr: float) -> float:
    snr = float(snr)
    if snr < 0.0 or not math.isfinite(snr):
        raise ValueError(f"snr must be finite and >= 0, got {snr}")
    return snr


def regular_throughput(snr: float, p: DensityParams, tol: float = 1e-9) -> float:
    """Asymptotic throughput of the regular ensemble, bits per resource use."""
    snr = _check_snr(snr)
    if snr == 0.0:
        return 0.0
    return 0.5 * quadrature.support_integral(
        lambda lam: analytic_density(lam, p),
        p.lambda_minus, p.lambda_plus,
        weight=lambda lam: np.log1p(snr * lam) / LN2,
        tol=tol)


def dense_rs_throughput(snr: float, beta: float, tol: float = 1e-9) -> float:
    """Dense random-spreading reference throughput from the Marchenko-Pastur law."""
    snr = _check_snr(snr)
    if snr == 0.0:
        return 0.0
    lo = (1.0 - math.sqrt(beta)) ** 2
    hi = (1.0 + math.sqrt(beta)) ** 2
    return 0.5 * quadrature.support_integral(
        lambda lam: marchenko_pastur_density(lam, beta),
        lo, hi,
        weight=lambda lam: np.log1p(snr * lam) / LN2,
        tol=tol)


def cover_wyner_bound(snr: float, beta: float) -> float:
    """Orthogonal multiple-access ceiling ``1/2 log2(1 + beta snr)``."""
    snr = _check_snr(snr)
    return 0.5 * math.log1p(beta * snr) / LN2


def ebno_from_snr(snr: float, beta: float, c: float) -> float:
    """Linear energy-per-bit ratio ``beta * snr / (2 C)`` at throughput ``C``."""
    snr = _check_snr(snr)
    if not c > 0.0:
        raise ValueError(f"throughput must be positive, got {c}")
    return beta * snr / (2.0 * c)


def _curve_throughput(beta: float, d: float | str) -> Callable[[float], float]:
    if isinstance(d, str):
        token = d.lower()
        if token == "dense":
            return lambda snr: dense_rs_throughput(snr, beta)
        if token == "cover_wyner":
            return lambda snr: cover_wyner_bound(snr, beta)
        raise ValueError(f"unknown curve selector {d!r}")
    p = DensityParams(beta=beta, d=float(d))
    return lambda snr: regular_throughput(snr, p)


def snr_for_ebno(ebno_target: float, beta: float, d: float | str) -> float:
    """Invert the Eb/N0 map on the curve selected by ``d``.

    ``d`` is a degree for the regular curve or the string ``"dense"`` for
    the dense reference (``"cover_wyner"`` is also accepted).  The map is
    monotone increasing in snr with infimum ln 2, so the target (linear)
    must exceed ln 2; bisection runs on the bracket [1e-6, 1e6].
    """
    target = float(ebno_target)
    cfun = _curve_throughput(beta, d)
    lo, hi = SNR_BRACKET
    f_lo = ebno_from_snr(lo, beta, cfun(lo)) - target
    f_hi = ebno_from_snr(hi, beta, cfun(hi)) - target
    if not f_lo < 0.0:
        raise ValueError(
            f"Eb/N0 target {target} is below the minimum achievable "
            f"(ln 2 = {LN2:.6f} as snr -> 0); bracket failure")
    if not f_hi > 0.0:
        raise ValueError(f"Eb/N0 target {target} not reachable below snr = {hi}")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if ebno_from_snr(mid, beta, cfun(mid)) < target:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-14:
            break
    return math.sqrt(lo * hi)


# ======================================================================
# Finite-size Monte Carlo
# ======================================================================

@dataclass(frozen=True)
class MCResult:
    """Sample mean and standard error of finite-size throughput."""

    mean: float
    stderr: float
    n_trials: int
    n_failed: int


def _trial_throughput(spec: EnsembleSpec, snr: float, trial: int,
                      irregular: bool) -> float:
    gen = generate_irregular if irregular else generate_regular
    matrix = gen(spec, realization=trial)
    eigs = np.linalg.eigvalsh(matrix.gram())
    n = spec.n_resources
    return float(np.sum(np.log1p(snr * eigs)) / (2.0 * n * LN2))


def finite_n_throughput_mc(spec: EnsembleSpec, snr: float, trials: int,
                           irregular: bool = False,
                           threads: int = 1) -> MCResult:
    """Average finite-size throughput over sampled realizations.

    Trial ``t`` runs on the PCG64 stream seeded with ``spec.seed XOR t``;
    results are accumulated in trial order, so the estimate does not depend
    on ``threads``.  Every eigenvalue enters the per-trial sum, including
    the deterministic one of ONES-mode matrices, matching the finite-size
    formula exactly.  Failed trials are skipped and counted.
    """
    snr = _check_snr(snr)
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    values = np.full(trials, np.nan)

    def run(t: int) -> tuple[int, float]:
        try:
            return t, _trial_throughput(spec, snr, t, irregular)
        except (GenerationError, SpectraError, np.linalg.LinAlgError):
            return t, np.nan

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t, v in pool.map(run, range(trials)):
                values[t] = v
    else:
        for t in range(trials):
            values[t] = run(t)[1]

    good = values[np.isfinite(values)]
    n_failed = trials - good.size
    if good.size == 0:
        raise GenerationError(f"all {trials} trials failed")
    stderr = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else float("inf")
    return MCResult(mean=float(good.mean()), stderr=stderr,
                    n_trials=int(good.size), n_failed=int(n_failed))


# ======================================================================
# Curve sweeps
# ======================================================================

class Curve(Enum):
    REGULAR = "regular"
    DENSE_RS = "dense_rs"
    COVER_WYNER = "cover_wyner"
    REGULAR_MC = "regular_mc"
    IRREGULAR_MC = "irregular_mc"

    @classmethod
    def parse(cls, token: str) -> "Curve":
        try:
            return cls(token.lower())
        except ValueError:
            raise ValueError(f"unknown curve {token!r}") from None


class SweepVariable(Enum):
    LOAD = "load"
    SPARSITY = "sparsity"
    EBNO = "ebno"

    @classmethod
    def parse(cls, token: str) -> "SweepVariable":
        try:
            return cls(token.lower())
        except ValueError:
            raise ValueError(f"unknown sweep variable {token!r}") from None


_MC_CURVES = (Curve.REGULAR_MC, Curve.IRREGULAR_MC)


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep of throughput curves.

    ``values`` are loads (LOAD), degrees (SPARSITY) or Eb/N0 in dB (EBNO).
    The non-swept operating point comes from ``beta``, ``d`` and exactly one
    of ``snr_db`` or ``ebno_db`` (EBNO sweeps carry the operating point on
    the axis).  Monte Carlo curves additionally need ``mc_n``, ``mc_trials``
    and ``seed``; both MC curves run at the snr of the asymptotic regular
    curve so ensembles are compared at equal received power.
    """

    variable: SweepVariable
    values: tuple[float, ...]
    curves: tuple[Curve, ...] = (Curve.REGULAR, Curve.DENSE_RS, Curve.COVER_WYNER)
    beta: float | None = None
    d: float | None = None
    snr_db: float | None = None
    ebno_db: float | None = None
    mc_n: int | None = None
    mc_trials: int | None = None
    seed: int = 0
    entry_mode: EntryMode = EntryMode.RADEMACHER
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("sweep needs at least one point")
        if len(set(self.curves)) != len(self.curves):
            raise ValueError("duplicate curves requested")
        if self.variable is SweepVariable.LOAD:
            if self.d is None:
                raise ValueError("LOAD sweep needs a fixed degree d")
            for beta in self.values:
                self._check_load(beta, self.d)
        elif self.variable is SweepVariable.SPARSITY:
            if self.beta is None:
                raise ValueError("SPARSITY sweep needs a fixed load beta")
            self._check_point(self.beta, min(self.values))
        else:
            if self.beta is None or self.d is None:
                raise ValueError("EBNO sweep needs fixed beta and d")
            self._check_point(self.beta, self.d)
        if self.variable is SweepVariable.EBNO:
            if self.snr_db is not None or self.ebno_db is not None:
                raise ValueError("EBNO sweep carries the operating point on the axis")
        else:
            if (self.snr_db is None) == (self.ebno_db is None):
                raise ValueError("need exactly one of snr_db or ebno_db")
        if any(c in self.curves for c in _MC_CURVES):
            if self.mc_n is None or self.mc_trials is None:
                raise ValueError("Monte Carlo curves need mc_n and mc_trials")

    @classmethod
    def from_range(cls, variable: SweepVariable, lo: float, hi: float,
                   steps: int, **fixed) -> "SweepSpec":
        """Build a sweep from a uniform grid.

        LOAD grids keep only points with an integer beta * d, per the
        realizability constraint; an empty admissible set is an error.
        """
        if steps < 1:
            raise ValueError(f"need at least one step, got {steps}")
        grid = np.linspace(lo, hi, steps)
        if variable is SweepVariable.LOAD:
            d = fixed.get("d")
            if d is None:
                raise ValueError("LOAD sweep needs a fixed degree d")
            grid = np.asarray([b for b in grid
                               if abs(b * d - round(b * d)) <= 1e-9 and round(b * d) > 1])
            if grid.size == 0:
                raise ValueError(
                    "no grid point satisfies the integer beta * d constraint")
        return cls(variable=variable, values=tuple(float(x) for x in grid), **fixed)

    @staticmethod
    def _check_point(beta: float, d: float) -> None:
        if not beta >= 1.0:
            raise ValueError(f"load beta must be >= 1, got {beta}")
        if not d > 1.0:
            raise ValueError(f"degree d must be > 1, got {d}")

    @staticmethod
    def _check_load(beta: float, d: float) -> None:
        SweepSpec._check_point(beta, d)
        bd = beta * d
        if abs(bd - round(bd)) > 1e-9 or round(bd) <= 1:
            raise ValueError(
                f"beta * d must be an integer > 1 for a realizable ensemble, "
                f"got beta={beta}, d={d}")


def _mc_ensemble_spec(beta: float, d: float, spec: SweepSpec) -> EnsembleSpec:
    if abs(d - round(d)) > 1e-9:
        raise ValueError(f"Monte Carlo curves need an integer degree, got {d}")
    n = spec.mc_n
    k = beta * n
    if abs(k - round(k)) > 1e-9:
        raise ValueError(f"mc_n = {n} does not realize load beta = {beta}")
    return EnsembleSpec(n_resources=n, n_users=int(round(k)),
                        col_degree=int(round(d)), entry_mode=spec.entry_mode,
                        seed=spec.seed)


def _sweep_point(spec: SweepSpec, x: float) -> dict[str, float | None]:
    beta = x if spec.variable is SweepVariable.LOAD else spec.beta
    d = x if spec.variable is SweepVariable.SPARSITY else spec.d
    p = DensityParams(beta=beta, d=float(d))

    def curve_snr(selector: float | str) -> float:
        if spec.variable is SweepVariable.EBNO:
            return snr_for_ebno(db_to_linear(x), beta, selector)
        if spec.snr_db is not None:
            return db_to_linear(spec.snr_db)
        return snr_for_ebno(db_to_linear(spec.ebno_db), beta, selector)

    row: dict[str, float | None] = {
        "x": float(x),
        "regular": None, "dense_rs": None, "cover_wyner": None,
        "regular_mc": None, "regular_mc_stderr": None,
        "irregular_mc": None, "irregular_mc_stderr": None,
    }
    mc_snr: float | None = None
    for curve in spec.curves:
        if curve is Curve.REGULAR:
            row["regular"] = regular_throughput(curve_snr(d), p)
        elif curve is Curve.DENSE_RS:
            row["dense_rs"] = dense_rs_throughput(curve_snr("dense"), beta)
        elif curve is Curve.COVER_WYNER:
            row["cover_wyner"] = cover_wyner_bound(curve_snr("cover_wyner"), beta)
        else:
            if mc_snr is None:
                mc_snr = curve_snr(d)
            ens = _mc_ensemble_spec(beta, d, spec)
            res = finite_n_throughput_mc(ens, mc_snr, spec.mc_trials,
                                         irregular=(curve is Curve.IRREGULAR_MC),
                                         threads=spec.threads)
            key = "irregular_mc" if curve is Curve.IRREGULAR_MC else "regular_mc"
            row[key] = res.mean
            row[key + "_stderr"] = res.stderr
    return row


def sweep(spec: SweepSpec) -> list[dict[str, float | bool | None]]:
    """Evaluate the requested curves at every sweep point.

    Returns one mapping per point with fixed keys ``x``, ``regular``,
    ``dense_rs``, ``cover_wyner``, ``regular_mc``, ``regular_mc_stderr``,
    ``irregular_mc`` and ``irregular_mc_stderr``; curves that were not
    requested stay None.  A numerical failure at one point leaves that
    row's curve cells None under a ``failed`` flag and the batch continues.
    """
    rows = []
    for x in spec.values:
        try:
            row = _sweep_point(spec, x)
            row["failed"] = False
        except (quadrature.QuadratureError, GenerationError, SpectraError,
                np.linalg.LinAlgError):
            row = {
                "x": float(x), "failed": True,
                "regular": None, "dense_rs": None, "cover_wyner": None,
                "regular_mc": None, "regular_mc_stderr": None,
                "irregular_mc": None, "irregular_mc_stderr": None,
            }
        rows.append(row)
    return rows
