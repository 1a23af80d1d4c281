"""Conic subproblem interface: a canonical problem form, concrete solver
backends, and a recorded-problem text format for external replay.

Canonical form (the SCS convention):

    minimize    c^T x
    subject to  A x + s = b,   s in K

where K is a product of zero, nonnegative, second-order, PSD-triangle, and
exponential cones, in that row order. PSD blocks use the scaled
lower-triangular column-major vectorization (off-diagonals times sqrt(2));
complex Hermitian constraints enter through the standard real embedding, which
the modeling layer (cvxpy) performs before export.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
from scipy import sparse

PROBLEM_FILE_VERSION = 1


@dataclass
class ConeDims:
    zero: int = 0
    nonneg: int = 0
    soc: list[int] = field(default_factory=list)
    psd: list[int] = field(default_factory=list)
    exp: int = 0

    def total_rows(self) -> int:
        return (
            self.zero
            + self.nonneg
            + sum(self.soc)
            + sum(k * (k + 1) // 2 for k in self.psd)
            + 3 * self.exp
        )


@dataclass
class ConicProblem:
    """minimize c^T x s.t. A x + s = b, s in the cone product given by dims."""

    c: np.ndarray
    a: sparse.csc_matrix
    b: np.ndarray
    dims: ConeDims

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.a = sparse.csc_matrix(self.a)
        if self.a.shape != (self.b.shape[0], self.c.shape[0]):
            raise ValueError(
                f"A has shape {self.a.shape}, expected ({self.b.shape[0]}, {self.c.shape[0]})"
            )
        if self.dims.total_rows() != self.b.shape[0]:
            raise ValueError(
                f"cone dims cover {self.dims.total_rows()} rows but b has {self.b.shape[0]}"
            )


@dataclass
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    status: str
    primal_objective: float
    dual_objective: float
    solve_info: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        scale = max(1.0, abs(self.primal_objective), abs(self.dual_objective))
        return abs(self.primal_objective - self.dual_objective) / scale

    @property
    def solved(self) -> bool:
        return self.status in ("optimal", "solved")


class BackendError(RuntimeError):
    """Solver reported infeasibility/unboundedness; certificate in the message."""


class ConicBackend:
    """Interface every concrete cone solver wrapper implements."""

    name = "abstract"

    def solve(self, problem: ConicProblem, accuracy: float = 1e-9) -> ConicSolution:
        raise NotImplementedError


class ScsBackend(ConicBackend):
    name = "scs"

    def solve(self, problem: ConicProblem, accuracy: float = 1e-9) -> ConicSolution:
        import scs

        cone: dict = {}
        d = problem.dims
        if d.zero:
            cone["z"] = d.zero
        if d.nonneg:
            cone["l"] = d.nonneg
        if d.soc:
            cone["q"] = list(d.soc)
        if d.psd:
            cone["s"] = list(d.psd)
        if d.exp:
            cone["ep"] = d.exp
        solver = scs.SCS(
            dict(A=problem.a, b=problem.b, c=problem.c),
            cone,
            verbose=False,
            eps_abs=accuracy,
            eps_rel=accuracy,
            max_iters=200_000,
        )
        out = solver.solve()
        status = out["info"]["status"].lower()
        if "infeasible" in status or "unbounded" in status:
            raise BackendError(f"scs: {out['info']['status']}")
        return ConicSolution(
            x=np.asarray(out["x"]),
            y=np.asarray(out["y"]),
            status="solved" if "solved" in status else status,
            primal_objective=float(out["info"]["pobj"]),
            dual_objective=float(out["info"]["dobj"]),
            solve_info={"iterations": out["info"]["iter"]},
        )


def _lower_to_upper_permutation(order: int) -> np.ndarray:
    """Row permutation mapping scaled-lower-triangular svec (SCS) to
    scaled-upper-triangular svec (Clarabel) for one PSD block."""
    lower_index = {}
    pos = 0
    for j in range(order):
        for i in range(j, order):
            lower_index[(i, j)] = pos
            pos += 1
    perm = []
    for j in range(order):
        for i in range(j + 1):
            perm.append(lower_index[(max(i, j), min(i, j))])
    return np.asarray(perm, dtype=int)


class ClarabelBackend(ConicBackend):
    name = "clarabel"

    def solve(self, problem: ConicProblem, accuracy: float = 1e-9) -> ConicSolution:
        import clarabel

        d = problem.dims
        cones = []
        if d.zero:
            cones.append(clarabel.ZeroConeT(d.zero))
        if d.nonneg:
            cones.append(clarabel.NonnegativeConeT(d.nonneg))
        for q in d.soc:
            cones.append(clarabel.SecondOrderConeT(q))
        for k in d.psd:
            cones.append(clarabel.PSDTriangleConeT(k))
        for _ in range(d.exp):
            cones.append(clarabel.ExponentialConeT())

        perm = np.arange(problem.b.shape[0])
        offset = d.zero + d.nonneg + sum(d.soc)
        for k in d.psd:
            block = k * (k + 1) // 2
            perm[offset : offset + block] = offset + _lower_to_upper_permutation(k)
            offset += block

        a = sparse.csc_matrix(problem.a[perm, :])
        b = problem.b[perm]
        p = sparse.csc_matrix((problem.c.shape[0], problem.c.shape[0]))
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = accuracy
        settings.tol_gap_rel = accuracy
        settings.tol_feas = accuracy
        solver = clarabel.DefaultSolver(p, problem.c, a, b, cones, settings)
        out = solver.solve()
        status = str(out.status).lower()
        if "infeasible" in status or "unbounded" in status:
            raise BackendError(f"clarabel: {out.status}")
        x = np.asarray(out.x)
        y_perm = np.asarray(out.z)
        y = np.empty_like(y_perm)
        y[perm] = y_perm
        pobj = float(problem.c @ x)
        # Clarabel reports obj_val for the primal; dual from the certificate.
        dobj = float(-problem.b @ y)
        return ConicSolution(
            x=x,
            y=y,
            status="solved" if "solved" in status else status,
            primal_objective=pobj,
            dual_objective=dobj,
            solve_info={"iterations": out.iterations},
        )


_BACKENDS = {"scs": ScsBackend, "clarabel": ClarabelBackend}


def available_backends() -> list[str]:
    found = []
    for name, cls in _BACKENDS.items():
        try:
            __import__(name)
        except ImportError:
            continue
        found.append(name)
    return found


def get_backend(name: str) -> ConicBackend:
    try:
        return _BACKENDS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; known: {sorted(_BACKENDS)}") from None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_problem(problem: ConicProblem, path) -> None:
    """Self-contained text record of one conic problem."""
    coo = problem.a.tocoo()
    lines = [
        f"conicproblem v{PROBLEM_FILE_VERSION}",
        f"vars {problem.c.shape[0]}",
        f"rows {problem.b.shape[0]}",
        "cones zero={} nonneg={} soc={} psd={} exp={}".format(
            problem.dims.zero,
            problem.dims.nonneg,
            ",".join(map(str, problem.dims.soc)) or "-",
            ",".join(map(str, problem.dims.psd)) or "-",
            problem.dims.exp,
        ),
        "c " + " ".join(_fmt(v) for v in problem.c),
        "b " + " ".join(_fmt(v) for v in problem.b),
        f"A {coo.nnz}",
    ]
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i} {j} {_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_problem(path) -> ConicProblem:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or lines[0] != f"conicproblem v{PROBLEM_FILE_VERSION}":
        raise ValueError(f"{path}: not a conicproblem v{PROBLEM_FILE_VERSION} file")
    n_vars = n_rows = None
    dims = ConeDims()
    c = b = None
    nnz = None
    triplets: list[tuple[int, int, float]] = []
    it = iter(lines[1:])
    for line in it:
        key, _, rest = line.partition(" ")
        if key == "vars":
            n_vars = int(rest)
        elif key == "rows":
            n_rows = int(rest)
        elif key == "cones":
            parts = dict(tok.split("=") for tok in rest.split())
            dims = ConeDims(
                zero=int(parts["zero"]),
                nonneg=int(parts["nonneg"]),
                soc=[] if parts["soc"] == "-" else [int(v) for v in parts["soc"].split(",")],
                psd=[] if parts["psd"] == "-" else [int(v) for v in parts["psd"].split(",")],
                exp=int(parts["exp"]),
            )
        elif key == "c":
            c = np.array([float(v) for v in rest.split()])
        elif key == "b":
            b = np.array([float(v) for v in rest.split()])
        elif key == "A":
            nnz = int(rest)
            for _ in range(nnz):
                i, j, v = next(it).split()
                triplets.append((int(i), int(j), float(v)))
        else:
            raise ValueError(f"{path}: unexpected line {line!r}")
    if n_vars is None or n_rows is None or c is None or b is None or nnz is None:
        raise ValueError(f"{path}: incomplete problem record")
    rows = np.array([t[0] for t in triplets], dtype=int)
    cols = np.array([t[1] for t in triplets], dtype=int)
    data = np.array([t[2] for t in triplets])
    a = sparse.csc_matrix((data, (rows, cols)), shape=(n_rows, n_vars))
    return ConicProblem(c=c, a=a, b=b, dims=dims)


def from_cvxpy(problem) -> ConicProblem:
    """Export a cvxpy problem to the canonical form (for recording/replay)."""
    import cvxpy as cp

    data, _, _ = problem.get_problem_data(cp.SCS)
    d = data["dims"]
    dims = ConeDims(
        zero=int(d.zero),
        nonneg=int(d.nonneg),
        soc=[int(v) for v in d.soc],
        psd=[int(v) for v in d.psd],
        exp=int(d.exp),
    )
    return ConicProblem(c=data["c"], a=sparse.csc_matrix(data["A"]), b=data["b"], dims=dims)
