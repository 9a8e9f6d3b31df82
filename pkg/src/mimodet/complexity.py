"""Closed-form FLOP accounting for every detector, plus measured counters.

A flop is one real add/subtract/multiply/divide. Complex operations are
charged at their real-valued block-decomposition sizes (2 n_t x 2 n_r).
Hermitian transposes, conditionals and random number generation are free.

Primitive costs (vectors length n / q, matrices m x q, q x p, q x q):

    square root               8
    norm-2 of length n        2n - 1 + 8
    matrix-vector m x q       m (2q - 1)
    matrix-matrix (m,q)(q,p)  m p (2q - 1)
    multiply-add  A B + C     2 m p q
    LU inversion of q x q     (2/3) q^3 + 2 q^2

Per-subcarrier detector totals (n_dim = 2 n_t, I = iteration count):

    MF        2 n_t (4 n_r - 1)
    ZF        16/3 n_t^3 + 4 n_t^2 + 32 n_t^2 n_r + 4 n_t n_r - 2 n_t
    MMSE      16/3 n_t^3 + 8 n_t^2 + 32 n_t^2 n_r + 4 n_t n_r
    PSO       n_pop I (8 n_t n_r + 20 n_t + 4 n_r + 7)
    DE        n_ind I (16 n_t n_r + 12 n_t + 8 n_r + 14)
    PSO-MF    PSO(I_hyb) + MF        (and analogously for the other hybrids)
    ML        M^(2 n_t) (8 n_t n_r + 4 n_r + 7)

The fractional 16/3 terms are reported as reals, never rounded, so the
hybrid additivity and the MMSE - ZF = 4 n_t^2 + 2 n_t identity hold
exactly. ML is evaluated in exact integer arithmetic because the power
term overflows doubles long before the formula stops being meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

DETECTOR_KINDS = ("MF", "ZF", "MMSE", "ML", "PSO", "DE",
                  "PSO-MF", "PSO-MMSE", "DE-MF", "DE-MMSE")


@dataclass(frozen=True)
class FlopFormulaInput:
    n_t: int
    n_r: int
    n_pop: int = 40
    iters: int = 1
    m_order: int = 4

    def __post_init__(self):
        if min(self.n_t, self.n_r, self.n_pop, self.iters, self.m_order) < 1:
            raise ValueError("all formula inputs must be >= 1")


def flops_primitive(op_kind: str, m: int = 0, p: int = 0, q: int = 0, n: int = 0) -> float:
    if op_kind == "sqrt":
        return 8.0
    if op_kind == "norm2":
        return 2.0 * n - 1.0 + 8.0
    if op_kind == "matvec":
        return m * (2.0 * q - 1.0)
    if op_kind == "matmat":
        return m * p * (2.0 * q - 1.0)
    if op_kind == "multiply_add":
        return 2.0 * m * p * q
    if op_kind == "lu_inversion":
        return (2.0 / 3.0) * q ** 3 + 2.0 * q ** 2
    raise ValueError(f"unknown primitive {op_kind!r}")


def fitness_eval_flops(n_t: int, n_r: int) -> float:
    """Real-domain residual fitness: matvec, vector subtract, norm-2."""
    return (flops_primitive("matvec", m=2 * n_r, q=2 * n_t)
            + 2 * n_r
            + flops_primitive("norm2", n=2 * n_r))


def flops_detector(kind: str, inp: FlopFormulaInput):
    """Per-subcarrier flop count for one detector. ML returns an exact int."""
    kind = kind.upper()
    n_t, n_r = inp.n_t, inp.n_r
    if kind == "MF":
        return 2.0 * n_t * (4 * n_r - 1)
    if kind == "ZF":
        return (16.0 / 3.0) * n_t ** 3 + 4.0 * n_t ** 2 + 32.0 * n_t ** 2 * n_r \
            + 4.0 * n_t * n_r - 2.0 * n_t
    if kind == "MMSE":
        # algebraically 16/3 n_t^3 + 8 n_t^2 + 32 n_t^2 n_r + 4 n_t n_r;
        # summed this way the MMSE - ZF = 4 n_t^2 + 2 n_t identity is exact
        # in floating point, not just up to rounding
        return flops_detector("ZF", inp) + (4.0 * n_t ** 2 + 2.0 * n_t)
    if kind == "PSO":
        return float(inp.n_pop * inp.iters) * (8 * n_t * n_r + 20 * n_t + 4 * n_r + 7)
    if kind == "DE":
        return float(inp.n_pop * inp.iters) * (16 * n_t * n_r + 12 * n_t + 8 * n_r + 14)
    if kind == "ML":
        return inp.m_order ** (2 * n_t) * (8 * n_t * n_r + 4 * n_r + 7)
    if kind in ("PSO-MF", "PSO-MMSE", "DE-MF", "DE-MMSE"):
        heuristic, linear = kind.split("-")
        return flops_detector(heuristic, inp) + flops_detector(linear, inp)
    raise ValueError(f"unknown detector kind {kind!r}")


def complexity_sweep(nt_values, pop_factor: int = 5, iters: int = 50,
                     iters_hybrid: int = 15, m_order: int = 4,
                     detectors=DETECTOR_KINDS):
    """Rows (n_t, detector, flops) for square arrays of increasing size.

    Populations scale with the search dimensionality: n_pop = n_ind =
    pop_factor * 2 * n_t. Hybrids run iters_hybrid iterations, plain
    heuristics run iters.
    """
    rows = []
    for n_t in nt_values:
        for kind in detectors:
            hybrid = "-" in kind
            inp = FlopFormulaInput(
                n_t=n_t, n_r=n_t,
                n_pop=pop_factor * 2 * n_t,
                iters=iters_hybrid if hybrid else iters,
                m_order=m_order,
            )
            rows.append((n_t, kind, flops_detector(kind, inp)))
    return rows


class FlopCounter:
    """Accumulates measured operation costs from instrumented runs.

    The detector and fitness code paths call the add_* hooks when handed a
    counter; costs follow the primitive table above so measured totals are
    directly comparable with the closed forms.
    """

    def __init__(self):
        self.flops = 0.0
        self.fitness_evals = 0

    def add(self, flops: float) -> None:
        self.flops += flops

    def add_matvec(self, m: int, q: int) -> None:
        self.flops += flops_primitive("matvec", m=m, q=q)

    def add_matmat(self, m: int, p: int, q: int) -> None:
        self.flops += flops_primitive("matmat", m=m, p=p, q=q)

    def add_lu_inversion(self, q: int) -> None:
        self.flops += flops_primitive("lu_inversion", q=q)

    def add_norm2(self, n: int) -> None:
        self.flops += flops_primitive("norm2", n=n)

    def add_fitness_evals(self, count: int, n_t: int, n_r: int) -> None:
        self.fitness_evals += count
        self.flops += count * fitness_eval_flops(n_t, n_r)

    def merge(self, other: "FlopCounter") -> None:
        self.flops += other.flops
        self.fitness_evals += other.fitness_evals
