"""Design-rule checks and statistical isometry estimates for sensing frames.

Every check accepts either a :class:`~dgframes.frame.Frame` (checked in exact
Z4 arithmetic where possible) or a dense complex array.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .frame import Frame

# The failure probability uses the squared deviation
# (epsilon - (k-1)/(N-1))**2 in its exponent.
DELTA_INTERPRETATION = "squared-deviation"

Z_95 = 1.959963984540054


def _dense(frame) -> np.ndarray:
    if isinstance(frame, Frame):
        return frame.matrix()
    a = np.asarray(frame)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a.astype(np.complex128, copy=False)


def _shape(frame) -> tuple[int, int]:
    return frame.shape if isinstance(frame, Frame) else np.shape(frame)


# -- St1 / tight frame -------------------------------------------------------

def check_st1(frame) -> tuple[float, float]:
    """Largest off-diagonal row inner product and largest row-sum magnitude."""
    G = _dense(frame)
    gram = G @ G.conj().T
    off = gram - np.diag(np.diag(gram))
    orth = float(np.abs(off).max()) if gram.shape[0] > 1 else 0.0
    row_sum = float(np.abs(G.sum(axis=1)).max())
    return orth, row_sum


def check_tight_frame(frame) -> float:
    """Max entrywise deviation of ``G G^H`` from ``(cols / rows) * I``."""
    G = _dense(frame)
    rows, cols = G.shape
    gram = G @ G.conj().T
    return float(np.abs(gram - (cols / rows) * np.eye(rows)).max())


# -- St2 ---------------------------------------------------------------------

@dataclass
class ClosureReport:
    closure: bool
    exhaustive: bool
    pairs_checked: int
    group_law_mismatches: int | None = None
    counterexample: tuple[int, int] | None = None


def _codes(E: np.ndarray):
    """Exact hashable code per column of a Z4 exponent matrix."""
    rows = E.shape[0]
    if rows <= 32:
        weights = np.uint64(4) ** np.arange(rows, dtype=np.uint64)
        return (E.astype(np.uint64) * weights[:, None]).sum(axis=0,
                                                            dtype=np.uint64)
    return None


def _pairs(n_cols, exhaustive, samples, seed):
    if exhaustive:
        for j in range(n_cols):
            yield j, np.arange(n_cols)
    else:
        rng = np.random.default_rng(seed)
        a = rng.integers(0, n_cols, size=samples)
        b = rng.integers(0, n_cols, size=samples)
        for j in np.unique(a):
            yield int(j), b[a == j]


def _group_law_columns(frame: Frame, j: int, partners: np.ndarray) -> np.ndarray:
    """Vectorized column_group_product on column numbers."""
    m = frame.m
    mask = (1 << m) - 1
    diag = frame.dg_set.diagonals.astype(np.int64)
    pj, bj = j >> m, j & mask
    pk, bk = partners >> m, partners & mask
    return ((pj ^ pk) << m) | (bj ^ bk ^ (diag[pj] & diag[pk]))


def check_st2(frame, exhaustive_limit: int = 1024, samples: int = 20000,
              seed: int = 0, atol: float = 1e-9) -> ClosureReport:
    """Closure of the columns under pointwise multiplication.

    For frames, products are formed exactly as sums of Z4 exponents and are
    also compared with the closed-form group law.  Dense matrices are
    compared up to ``atol`` after dividing each product by the mean entry
    magnitude, which maps ``s^2 i^(e+e')`` back to ``s i^(e'')`` for
    unimodular frames.
    """
    if isinstance(frame, Frame):
        return _st2_exact(frame, exhaustive_limit, samples, seed)
    return _st2_dense(_dense(frame), exhaustive_limit, samples, seed, atol)


def _st2_exact(frame: Frame, exhaustive_limit, samples, seed) -> ClosureReport:
    N = frame.num_cols
    exhaustive = N <= exhaustive_limit
    if exhaustive or frame.num_cols <= frame.column_limit:
        E = frame.exponents()
    else:
        E = None
    codes = _codes(E) if E is not None else None
    lookup = None
    if codes is not None:
        order = np.argsort(codes, kind="stable")
        sorted_codes = codes[order]
    elif E is not None:
        lookup = {E[:, j].tobytes(): j for j in range(N)}

    def col(j):
        return E[:, j] if E is not None else frame.column_exponents(int(j))

    closure = True
    counter = None
    mismatches = 0
    checked = 0
    for j, partners in _pairs(N, exhaustive, samples, seed):
        ej = col(j).astype(np.int64)
        if E is not None:
            prod = (ej[:, None] + E[:, partners]) % 4
        else:
            prod = np.stack([(ej + col(k)) % 4 for k in partners], axis=1)
        checked += len(partners)
        expected = _group_law_columns(frame, j, partners)
        if E is not None:
            target = E[:, expected]
        else:
            target = np.stack([col(k) for k in expected], axis=1)
        bad = np.any(prod != target, axis=0)
        mismatches += int(bad.sum())
        if codes is not None:
            pc = _codes(prod)
            pos = np.searchsorted(sorted_codes, pc)
            pos = np.minimum(pos, N - 1)
            found = sorted_codes[pos] == pc
        elif lookup is not None:
            found = np.array([prod[:, i].astype(np.uint8).tobytes() in lookup
                              for i in range(prod.shape[1])])
        else:
            # too large to index: membership is certified via the group law
            found = ~bad
        if not found.all():
            closure = False
            if counter is None:
                i = int(np.argmin(found))
                counter = (int(j), int(partners[i]))
    return ClosureReport(closure, exhaustive, checked, mismatches, counter)


def _st2_dense(G, exhaustive_limit, samples, seed, atol) -> ClosureReport:
    N = G.shape[1]
    exhaustive = N <= exhaustive_limit
    scale = float(np.abs(G).mean())
    if scale == 0:
        return ClosureReport(True, exhaustive, 0)
    checked = 0
    counter = None
    for j, partners in _pairs(N, exhaustive, samples, seed):
        prod = G[:, [j]] * G[:, partners] / scale
        checked += len(partners)
        # distance of each product to its nearest column
        d = np.abs(prod[:, :, None] - G[:, None, :]).max(axis=0).min(axis=1)
        found = d <= atol
        if not found.all() and counter is None:
            counter = (int(j), int(partners[int(np.argmin(found))]))
    return ClosureReport(counter is None, exhaustive, checked, None, counter)


# -- St3 ---------------------------------------------------------------------

@dataclass
class ColumnSumReport:
    max_column_sum_sq: float
    all_ones_sum_sq: float
    eta_implied: float | None
    eta: float | None
    passed: bool | None
    spectrum: np.ndarray = field(repr=False)

    def distinct_values(self, decimals: int = 9) -> dict[float, int]:
        vals, counts = np.unique(np.round(self.spectrum, decimals),
                                 return_counts=True)
        return {float(v): int(c) for v, c in zip(vals, counts)}


def column_sums_sq(frame) -> np.ndarray:
    """``|sum_x phi_j(x)|^2`` for every column, in column order."""
    if isinstance(frame, Frame):
        E = frame.exponents()
        counts = np.stack([(E == e).sum(axis=0) for e in range(4)])
        re = counts[0] - counts[2]
        im = counts[1] - counts[3]
        # integer sums, scaled once: exact for unimodular entries
        return (re.astype(np.float64) ** 2 + im.astype(np.float64) ** 2) \
            * frame.normalization_sq
    G = _dense(frame)
    return np.abs(G.sum(axis=0)) ** 2


def check_st3(frame, eta: float | None = None) -> ColumnSumReport:
    """Column-sum bound over columns 2..N (column 1 is the all-ones column)."""
    sums = column_sums_sq(frame)
    N = sums.size
    rest = sums[1:]
    top = float(rest.max()) if rest.size else 0.0
    implied = None
    if top > 0 and N > 1:
        implied = 2.0 - math.log(top) / math.log(N)
    passed = None
    if eta is not None and 0 < eta < 1:
        passed = bool(top <= N ** (2.0 - eta))
    return ColumnSumReport(top, float(sums[0]), implied, eta, passed,
                           np.sort(rest))


# -- combined report ---------------------------------------------------------

@dataclass
class StripReport:
    st1_row_orthogonality_residual: float
    st1_row_sum_residual: float
    st2: ClosureReport
    st3: ColumnSumReport
    tight_frame_residual: float
    tolerance: float

    @property
    def st1_passed(self) -> bool:
        return (self.st1_row_orthogonality_residual <= self.tolerance
                and self.st1_row_sum_residual <= self.tolerance)

    @property
    def tight_frame_passed(self) -> bool:
        return self.tight_frame_residual <= self.tolerance

    @property
    def passed(self) -> bool:
        return bool(self.st1_passed and self.st2.closure
                    and self.tight_frame_passed and self.st3.passed)

    def to_dict(self) -> dict:
        st3 = self.st3
        return {
            "st1_row_orthogonality_residual": self.st1_row_orthogonality_residual,
            "st1_row_sum_residual": self.st1_row_sum_residual,
            "st1_passed": self.st1_passed,
            "st2_closure": self.st2.closure,
            "st2": asdict(self.st2),
            "st3_max_column_sum_sq": st3.max_column_sum_sq,
            "st3_eta_implied": st3.eta_implied,
            "st3_eta": st3.eta,
            "st3_passed": st3.passed,
            "all_ones_column_sum_sq": st3.all_ones_sum_sq,
            "column_sum_spectrum": [float(v) for v in st3.spectrum],
            "column_sum_distinct": [[v, c] for v, c in
                                    st3.distinct_values().items()],
            "tight_frame_residual": self.tight_frame_residual,
            "tight_frame_passed": self.tight_frame_passed,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def verify_frame(frame, eta: float, exhaustive_limit: int = 1024,
                 samples: int = 20000, seed: int = 0,
                 tolerance: float = 1e-9) -> StripReport:
    orth, row_sum = check_st1(frame)
    return StripReport(
        st1_row_orthogonality_residual=orth,
        st1_row_sum_residual=row_sum,
        st2=check_st2(frame, exhaustive_limit, samples, seed),
        st3=check_st3(frame, eta),
        tight_frame_residual=check_tight_frame(frame),
        tolerance=tolerance,
    )


# -- Monte Carlo isometry -------------------------------------------------------

@dataclass
class StripEstimate:
    k: int
    epsilon: float
    trials: int
    violations: int
    delta_hat: float
    half_width: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _trial_rngs(seed: int, trials: int):
    return [np.random.default_rng(s)
            for s in np.random.SeedSequence(seed).spawn(trials)]


def _draw_sparse(rng, N: int, k: int):
    support = np.sort(rng.choice(N, size=k, replace=False))
    values = rng.standard_normal(k)
    return support, values / np.linalg.norm(values)


def _columns(frame, support) -> np.ndarray:
    if isinstance(frame, Frame):
        return frame.columns(support)
    return np.asarray(frame)[:, support]


def _chunks(n: int, jobs: int):
    jobs = max(1, min(jobs, n))
    bounds = np.linspace(0, n, jobs + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def sparse_energy_ratios(frame, k: int, trials: int, seed: int = 0,
                         jobs: int = 1) -> np.ndarray:
    """``||Phi a||^2`` for ``trials`` unit-norm k-sparse draws.

    Each trial uses its own spawned seed, so results do not depend on
    ``jobs``.
    """
    N = _shape(frame)[1]
    if isinstance(frame, Frame) and frame.num_cols <= frame.column_limit:
        frame.exponents()
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in 1..{N}")
    rngs = _trial_rngs(seed, trials)
    out = np.empty(trials)

    def run(idx):
        for i in idx:
            support, values = _draw_sparse(rngs[i], N, k)
            out[i] = np.linalg.norm(_columns(frame, support) @ values) ** 2

    chunks = _chunks(trials, jobs)
    if len(chunks) == 1:
        run(chunks[0])
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            list(pool.map(run, chunks))
    return out


def estimate_strip(frame, k: int, epsilon: float, trials: int, seed: int = 0,
                   jobs: int = 1) -> StripEstimate:
    """Fraction of random k-sparse draws violating the two-sided isometry.

    Draw model: support uniform without replacement, standard normal values,
    then normalized to unit norm.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if k > _shape(frame)[0]:
        raise ValueError("k may not exceed the number of rows")
    ratios = sparse_energy_ratios(frame, k, trials, seed, jobs)
    violations = count_violations(ratios, epsilon)
    p = violations / trials
    return StripEstimate(k, float(epsilon), trials, violations, p,
                         Z_95 * math.sqrt(p * (1 - p) / trials), seed)


def count_violations(ratios: np.ndarray, epsilon: float) -> int:
    ok = (ratios >= 1 - epsilon) & (ratios <= 1 + epsilon)
    return int((~ok).sum())


# -- uniqueness ----------------------------------------------------------------

@dataclass
class UniquenessReport:
    k: int
    trials: int
    violations: int
    supports_per_trial: int
    seed: int
    tolerance: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_ustrip_uniqueness(frame, k: int, trials: int, seed: int = 0,
                            max_supports: int = 200_000,
                            tol: float = 1e-8) -> UniquenessReport:
    """Count draws whose measurement has a second k-sparse real preimage.

    Every k-support is tried by real least squares on the realified
    columns; a support other than the drawn one that reproduces the
    measurement within ``tol`` (with a coefficient vector whose squared
    distance from the draw exceeds ``tol``) is a violation.
    """
    G = _dense(frame)
    rows, N = G.shape
    n_supports = math.comb(N, k)
    if n_supports > max_supports:
        raise ValueError(f"C({N},{k}) = {n_supports} supports exceeds the "
                         f"ceiling of {max_supports}")
    Gr = np.vstack([G.real, G.imag])
    supports = np.array(list(combinations(range(N), k)), dtype=np.int64)
    A = Gr[:, supports].transpose(1, 0, 2)          # (S, 2 rows, k)
    pinv = np.linalg.pinv(A)                        # (S, k, 2 rows)
    violations = 0
    for rng in _trial_rngs(seed, trials):
        support, values = _draw_sparse(rng, N, k)
        alpha = np.zeros(N)
        alpha[support] = values
        y = Gr @ alpha
        beta = pinv @ y                              # (S, k)
        resid = np.linalg.norm(np.einsum("sik,sk->si", A, beta) - y, axis=1)
        a_T = alpha[supports]
        diff_sq = (1.0 - (a_T ** 2).sum(axis=1)) + ((beta - a_T) ** 2).sum(axis=1)
        other = ~np.all(supports == support, axis=1)
        if np.any(other & (resid <= tol) & (diff_sq > tol)):
            violations += 1
    return UniquenessReport(k, trials, violations, n_supports, seed, tol)


# -- Theorem-1 calculators ---------------------------------------------------------

@dataclass
class Theorem1Delta:
    delta: float
    hypotheses_satisfied: bool
    vacuous: bool
    notes: list[str]

    def to_dict(self) -> dict:
        return asdict(self)


def theorem1_delta(k: int, epsilon: float, m_rows: int, eta: float,
                   N: int) -> Theorem1Delta:
    """Failure probability of the statistical isometry for StRIP-able frames.

    ``2 exp(-(epsilon - (k-1)/(N-1))**2 * m_rows**eta / (8 k))``; hypotheses
    are checked and reported rather than enforced.
    """
    notes = []
    if not k < 1 + (m_rows - 1) * epsilon:
        notes.append("requires k < 1 + (m_rows - 1) * epsilon")
    if not eta > 0.5:
        notes.append("requires eta > 1/2")
    dev = epsilon - (k - 1) / (N - 1)
    delta = 2.0 * math.exp(-(dev ** 2) * m_rows ** eta / (8 * k))
    vacuous = delta >= 1
    if vacuous:
        notes.append("delta >= 1: bound is vacuous")
    hypotheses_ok = not any(n.startswith("requires") for n in notes)
    return Theorem1Delta(delta, hypotheses_ok, vacuous, notes)


def theorem1_measurement_bound(k: int, epsilon: float, eta: float, N: int,
                               c: float, ceil: bool = True):
    """Rows needed, ``(c k log N / epsilon^2) ** (1/eta)``."""
    if c <= 0:
        raise ValueError("c must be positive")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if epsilon <= 0 or k < 1 or N < 2:
        raise ValueError("need epsilon > 0, k >= 1, N >= 2")
    value = (c * k * math.log(N) / epsilon ** 2) ** (1.0 / eta)
    return math.ceil(value) if ceil else value
