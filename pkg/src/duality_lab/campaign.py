"""Seeded verification campaigns: instance sampling, trial execution, records.

Trial ``i`` of a campaign with seed ``s`` draws everything from
``random_source(s ^ i)``, so any record can be replayed on its own.
"""

from __future__ import annotations

import configparser
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import wpdr
from .errors import DualityLabError, NoConvergence
from .interferometer import Interferometer, WhichPathCoupling, example1_phases
from .numerics import haar_state, haar_unitary, random_density, random_probability, random_source
from .quantum import CQState, DensityOperator, fourier_matrix, random_povm


class ConfigError(DualityLabError):
    """Malformed campaign configuration (maps to exit code 2)."""


CouplerSpec = Union[str, np.ndarray]


@dataclass
class CampaignConfig:
    """Everything that determines a campaign's output.

    Attributes:
        relations: Relation ids to check (see :data:`wpdr.RELATION_IDS`).
        n_range: Inclusive range for the path count (or outcome count ``d``).
        env_dim_range: Inclusive range for environment / side-information
            dimensions.
        trials: Trials per relation.
        seed: Campaign seed.
        tol: Relation tolerance.
        coupling: ``"random"`` (mix of scalar overlaps and Haar flags) or a
            list of scalar overlaps ``gamma``.
        coupler: ``"fourier"`` (Fourier with random phases and relabelling),
            ``"haar"`` or an explicit unitary.
        out: Output path, ``None`` for standard output.
    """

    relations: List[str] = field(default_factory=lambda: ["THEOREM1"])
    n_range: Tuple[int, int] = (2, 5)
    env_dim_range: Tuple[int, int] = (1, 4)
    trials: int = 100
    seed: int = 0
    tol: float = 1e-6
    coupling: Union[str, List[float]] = "random"
    coupler: CouplerSpec = "fourier"
    out: Optional[str] = None

    def validate(self) -> "CampaignConfig":
        if not self.relations:
            raise ConfigError("no relations selected")
        bad = [r for r in self.relations if r not in wpdr.RELATION_IDS]
        if bad:
            raise ConfigError(f"unknown relation ids: {bad}")
        for name in ("n_range", "env_dim_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} is empty: {lo}..{hi}")
        if self.n_range[0] < 2 and any(r != "DURR_IDENTITY" for r in self.relations):
            raise ConfigError("n_range must start at 2 or more")
        if self.env_dim_range[0] < 1:
            raise ConfigError("env_dim_range must start at 1 or more")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 1e-12 <= self.tol <= 1e-3:
            raise ConfigError(f"tolerance {self.tol!r} outside [1e-12, 1e-3]")
        if isinstance(self.coupling, str):
            if self.coupling != "random":
                raise ConfigError(f"coupling must be 'random' or a gamma list, got {self.coupling!r}")
        elif not self.coupling or any(not 0.0 <= g <= 1.0 for g in self.coupling):
            raise ConfigError("gamma list must be nonempty with entries in [0, 1]")
        if isinstance(self.coupler, str) and self.coupler not in ("fourier", "haar"):
            raise ConfigError(f"coupler must be 'fourier', 'haar' or a unitary, got {self.coupler!r}")
        if not isinstance(self.coupler, str):
            u = np.asarray(self.coupler, dtype=complex)
            if u.ndim != 2 or u.shape[0] != u.shape[1] or np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
                raise ConfigError("inline coupler is not a unitary matrix")
            if self.n_range != (u.shape[0], u.shape[0]):
                raise ConfigError("inline coupler fixes n; set n_range to its size")
        return self


CONFIG_KEYS = {"relations", "n_min", "n_max", "env_min", "env_max", "trials", "seed", "tol",
               "coupling", "coupler", "out"}


def _parse_unitary(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([[complex(x.replace(" ", "")) for x in r.split(",")] for r in rows])


def load_config(path: str, base: Optional[CampaignConfig] = None) -> CampaignConfig:
    """Read a flat ``key = value`` file; unknown keys are errors.

    Keys: ``relations`` (comma list), ``n_min``, ``n_max``, ``env_min``,
    ``env_max``, ``trials``, ``seed``, ``tol``, ``coupling`` (``random`` or a
    comma list of gammas), ``coupler`` (``fourier``, ``haar`` or rows of a
    unitary separated by ``;``), ``out``. Text after ``#`` is a comment.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        parser.read_string("[campaign]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    items = dict(parser["campaign"])
    unknown = sorted(set(items) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    cfg = CampaignConfig(**asdict(base)) if base is not None else CampaignConfig()
    try:
        if "relations" in items:
            cfg.relations = [r.strip().upper() for r in items["relations"].split(",") if r.strip()]
        n_lo, n_hi = cfg.n_range
        e_lo, e_hi = cfg.env_dim_range
        cfg.n_range = (int(items.get("n_min", n_lo)), int(items.get("n_max", n_hi)))
        cfg.env_dim_range = (int(items.get("env_min", e_lo)), int(items.get("env_max", e_hi)))
        cfg.trials = int(items.get("trials", cfg.trials))
        cfg.seed = int(items.get("seed", cfg.seed))
        cfg.tol = float(items.get("tol", cfg.tol))
        if "coupling" in items:
            c = items["coupling"].strip()
            cfg.coupling = c if c == "random" else [float(g) for g in c.split(",")]
        if "coupler" in items:
            c = items["coupler"].strip()
            cfg.coupler = c if c in ("fourier", "haar") else _parse_unitary(c)
        if "out" in items:
            cfg.out = items["out"].strip() or None
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg.validate()


# ---------------------------------------------------------------- sampling


def trial_seed(seed: int, trial: int) -> int:
    return int(seed) ^ int(trial)


def sample_distribution(d: int, rng) -> np.ndarray:
    """Probability vector from a mix of flat, peaked and sparse Dirichlet draws."""
    kind = rng.integers(4)
    if kind == 0:
        return random_probability(d, rng)
    # normalised gamma variates are Dirichlet distributed
    g = rng.standard_gamma((0.2, 5.0, 1.0)[kind - 1], d)
    if kind == 3:
        g[rng.random(d) < 0.3] = 0.0
        if not g.any():
            g[rng.integers(d)] = 1.0
    return g / g.sum()


def sample_cq(d: int, db: int, rng) -> CQState:
    states = np.array([random_density(db, int(rng.integers(1, db + 1)), rng) for _ in range(d)])
    return CQState(random_probability(d, rng), states)


def sample_tripartite_pure(dims: Sequence[int], rng) -> np.ndarray:
    psi = haar_state(int(np.prod(dims)), rng)
    return np.outer(psi, psi.conj())


def sample_mub_pair(d: int, rng) -> Tuple[np.ndarray, np.ndarray]:
    u = haar_unitary(d, rng)
    return u, u @ fourier_matrix(d) @ np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, d)))


def symmetric_coupler(n: int, rng) -> np.ndarray:
    """Fourier transform dressed with random phases and a random detector relabelling."""
    left = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, n)))[rng.permutation(n)]
    right = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
    return left @ fourier_matrix(n).conj().T @ right


def sample_coupling(n: int, cfg: CampaignConfig, rng) -> WhichPathCoupling:
    if not isinstance(cfg.coupling, str):
        return WhichPathCoupling.from_gamma(n, float(cfg.coupling[rng.integers(len(cfg.coupling))]))
    if rng.random() < 0.5:
        grid = np.linspace(0.0, 1.0, 11)
        return WhichPathCoupling.from_gamma(n, float(grid[rng.integers(grid.size)]))
    de = int(rng.integers(cfg.env_dim_range[0], cfg.env_dim_range[1] + 1))
    return WhichPathCoupling.haar(n, max(de, 1), rng)


def sample_interferometer(n: int, cfg: CampaignConfig, rng, symmetric: bool = True,
                          coupling: Optional[WhichPathCoupling] = None) -> Interferometer:
    if not isinstance(cfg.coupler, str):
        fc2 = np.asarray(cfg.coupler, dtype=complex)
    elif cfg.coupler == "haar" or not symmetric:
        fc2 = haar_unitary(n, rng)
    else:
        fc2 = symmetric_coupler(n, rng)
    if rng.random() < 0.2:
        fc1 = DensityOperator(random_density(n, int(rng.integers(1, n + 1)), rng))
    else:
        fc1 = haar_unitary(n, rng)
    coupling = coupling if coupling is not None else sample_coupling(n, cfg, rng)
    return Interferometer(n, fc1, fc2, coupling.channel())


def _rand_int(rng, lo_hi) -> int:
    return int(rng.integers(lo_hi[0], lo_hi[1] + 1))


# ---------------------------------------------------------------- trials


def run_trial(relation: str, cfg: CampaignConfig, trial: int) -> dict:
    """Sample one instance for ``relation`` and check it; returns a record dict."""
    seed = trial_seed(cfg.seed, trial)
    rng = random_source(seed)
    tol = cfg.tol
    dims: List[int]
    if relation == "LEMMA1":
        d = _rand_int(rng, cfg.n_range)
        rep, dims = wpdr.check_lemma1(sample_distribution(d, rng), tol), [d]
    elif relation == "LEMMA2":
        d, db = _rand_int(rng, cfg.n_range), _rand_int(rng, cfg.env_dim_range)
        rep, dims = wpdr.check_lemma2(sample_cq(d, db, rng), tol), [d, db]
    elif relation in ("MMEUR", "PGUESS_UR", "MUB_UR"):
        dims = [_rand_int(rng, cfg.n_range), _rand_int(rng, cfg.env_dim_range),
                _rand_int(rng, cfg.env_dim_range)]
        rho = sample_tripartite_pure(dims, rng)
        if relation == "MUB_UR" or rng.random() < 0.5:
            bx, by = sample_mub_pair(dims[0], rng)
        else:
            bx, by = haar_unitary(dims[0], rng), haar_unitary(dims[0], rng)
        fn = {"MMEUR": wpdr.check_mmeur, "PGUESS_UR": wpdr.check_pguess_ur, "MUB_UR": wpdr.check_mub_ur}[relation]
        rep = fn(rho, bx, by, dims, tol)
    elif relation == "GENERIC_WPDR":
        dims = [_rand_int(rng, cfg.n_range), _rand_int(rng, cfg.env_dim_range),
                _rand_int(rng, cfg.env_dim_range)]
        rep = wpdr.check_generic_wpdr(sample_tripartite_pure(dims, rng), dims, tol, restarts=4)
    elif relation == "THEOREM1":
        ifm = sample_interferometer(_rand_int(rng, cfg.n_range), cfg, rng)
        rep, dims = wpdr.check_theorem1(ifm, tol), [ifm.n, ifm.env_dim]
    elif relation == "ASYMMETRIC":
        ifm = sample_interferometer(_rand_int(rng, cfg.n_range), cfg, rng, symmetric=False)
        phases = rng.uniform(0.0, 2.0 * np.pi, (16, ifm.n))
        rep, dims = wpdr.check_asymmetric(ifm, tol, phases=list(phases)), [ifm.n, ifm.env_dim]
    elif relation in ("ERASURE", "ERASURE_ENTROPIC"):
        ifm = sample_interferometer(_rand_int(rng, cfg.n_range), cfg, rng)
        povm = random_povm(ifm.env_dim, int(rng.integers(2, 5)), rng, mix=0.3)
        fn = wpdr.check_erasure if relation == "ERASURE" else wpdr.check_erasure_entropic
        rep, dims = fn(ifm, povm, tol), [ifm.n, ifm.env_dim, len(povm)]
    elif relation == "DURR_IDENTITY":
        d = _rand_int(rng, cfg.n_range)
        rep, dims = wpdr.durr_identity(random_density(d, int(rng.integers(1, d + 1)), rng)), [d]
    elif relation == "N2_REDUCTIONS":
        cfg2 = CampaignConfig(**{**asdict(cfg), "coupler": "fourier"})
        ifm = sample_interferometer(2, cfg2, rng)
        rep, dims = wpdr.check_n2_reductions(ifm, tol), [2, ifm.env_dim]
    else:
        raise ConfigError(f"unknown relation {relation!r}")
    rec = rep.to_record()
    return {
        "relation_id": relation,
        "seed": int(cfg.seed),
        "trial": int(trial),
        "trial_seed": seed,
        "n": int(dims[0]),
        "dims": [int(x) for x in dims],
        **{k: v for k, v in rec.items() if k != "relation_id"},
    }


def _safe_trial(args) -> dict:
    relation, cfg, trial = args
    try:
        return run_trial(relation, cfg, trial)
    except NoConvergence as exc:
        return {"relation_id": relation, "seed": int(cfg.seed), "trial": int(trial),
                "trial_seed": trial_seed(cfg.seed, trial), "pass": None,
                "error": "NoConvergence", "detail": str(exc)}


def worker_count() -> int:
    env = os.environ.get("DUALITY_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DUALITY_LAB_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


def run_campaign(cfg: CampaignConfig, workers: Optional[int] = None) -> Iterator[dict]:
    """Yield one record per (relation, trial) in a fixed order."""
    cfg.validate()
    jobs = [(r, cfg, t) for r in cfg.relations for t in range(cfg.trials)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) < 2:
        for job in jobs:
            yield _safe_trial(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, which restores trial order
        yield from pool.map(_safe_trial, jobs, chunksize=max(1, len(jobs) // (8 * workers)))


def exit_code(records: Sequence[dict]) -> int:
    if any(r.get("error") == "NoConvergence" for r in records):
        return 3
    if any(r.get("pass") is False for r in records):
        return 1
    return 0


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=False, allow_nan=True)


# ---------------------------------------------------------------- reproductions


def example1_report(n: int, tol: float = 1e-9) -> dict:
    """Values of the n-path example where D approaches 1 while the naive contrast stays 1."""
    from .entropy import distinguishability_from_pguess, pguess
    from .interferometer import (
        detection_distribution,
        example1_state,
        pmax_detector,
        pmin_detector,
        visibility_n,
    )
    from .quantum import cq_conditional_on_path

    rho = example1_state(n).density()
    fc2 = fourier_matrix(n).conj().T
    pg = pguess(cq_conditional_on_path(rho, n, 1), tol).value
    d = distinguishability_from_pguess(pg, n)
    p_at = float(detection_distribution(rho, example1_phases(n), fc2)[0])
    pmax, _ = pmax_detector(rho, fc2, 0)
    pmin = min(pmin_detector(rho, fc2, 0)[0], max(p_at, 0.0))
    v_naive = (pmax - pmin) / (pmax + pmin)
    v = visibility_n(rho, fc2)
    return {
        "n": n,
        "pguess_z": pg,
        "D": d,
        "V_naive": v_naive,
        "pmax_c1": pmax,
        "pmin_c1": pmin,
        "p_c1_at_example_phases": p_at,
        "V": v,
        "theorem1_slack": 1.0 - (v * v + d * d),
    }


@dataclass(frozen=True)
class SweepPoint:
    gamma: float
    D: float
    V: float
    sum_sq: float
    slack: float


def sweep(n: int, gammas: Sequence[float], tol: float = 1e-6) -> List[SweepPoint]:
    """D and V along the scalar-overlap family with Fourier couplers and unbiased input."""
    out = []
    f = fourier_matrix(n)
    for g in sorted(gammas):
        ifm = Interferometer(n, f, f.conj().T, WhichPathCoupling.from_gamma(n, float(g)).channel())
        v, d, _ = wpdr.theorem1_terms(ifm, tol)
        s = d * d + v * v
        out.append(SweepPoint(float(g), d, v, s, 1.0 - s))
    return out
