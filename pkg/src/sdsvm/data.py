"""Dataset ingestion, seeded synthetic generators, and the simulation harness.

Generators are pure functions of (spec, seed, run index): every stream they
consume is derived from those values alone, so repeated calls are identical
and runs can execute in any order or in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateId,
    IoError,
    LabelError,
    MissingLabel,
    ParseError,
    SdsvmError,
)
from .kernels import KernelSpec, Sample, kernel_cross
from .outlyingness import DirectionPolicy
from .pipeline import CvConfig, fit_sdsvm
from .rng import Stream, derive_key


@dataclass(frozen=True)
class Dataset:
    """Aligned samples and -1/+1 labels plus provenance."""

    samples: tuple
    labels: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        samples = tuple(self.samples)
        labels = np.asarray(self.labels, dtype=np.float64).ravel().copy()
        if len(samples) != labels.shape[0]:
            raise ValueError(f"{len(samples)} samples vs {labels.shape[0]} labels")
        if labels.size and not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        kinds = {s.kind for s in samples}
        if len(kinds) > 1:
            raise ValueError(f"mixed payload kinds in one dataset: {sorted(kinds)}")
        if kinds == {"vector"}:
            dims = {s.payload.shape[0] for s in samples}
            if len(dims) > 1:
                raise ValueError(f"mixed vector dimensions in one dataset: {sorted(dims)}")
        labels.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SimulationSpec:
    """Constants of the two-Gaussian benchmark."""

    n_per_group: int = 25
    dim: int = 1000
    shift: float = 0.18
    outliers_per_group: int = 0
    outlier_mean_minus: float = 3.0  # appended to the negative group
    outlier_mean_plus: float = -3.0  # appended to the positive group
    test_size: int = 600
    runs: int = 50
    kappas: tuple = (0.5, 0.7, 0.9, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_group < 1 or self.dim < 1 or self.test_size < 2 or self.runs < 1:
            raise ValueError("simulation counts must be positive (test size >= 2)")
        if self.outliers_per_group < 0:
            raise ValueError("outliers_per_group must be >= 0")
        kappas = tuple(float(k) for k in self.kappas)
        if not kappas or any(not 0.5 <= k <= 1.0 for k in kappas):
            raise ValueError("kappa grid must be a nonempty subset of [0.5, 1]")
        object.__setattr__(self, "kappas", kappas)


def _normal_rows(seed, run_index, stream_name, count, dim):
    stream = Stream(derive_key(seed, "sim", run_index, stream_name))
    return stream.normals(count * dim).reshape(count, dim)


def gen_simulation(spec: SimulationSpec, run_index: int):
    """(train, test) datasets for one run.

    Negative group ~ N(0, I), positive group ~ N(shift, I); the contaminated
    variant appends outliers_per_group samples at mean outlier_mean_minus
    labeled -1 and as many at outlier_mean_plus labeled +1.  The test set is
    clean, split evenly between groups.
    """
    n, d = spec.n_per_group, spec.dim
    blocks = [
        _normal_rows(spec.seed, run_index, "train-minus", n, d),
        _normal_rows(spec.seed, run_index, "train-plus", n, d) + spec.shift,
    ]
    labels = [-np.ones(n), np.ones(n)]
    if spec.outliers_per_group:
        m = spec.outliers_per_group
        blocks.append(
            _normal_rows(spec.seed, run_index, "outliers-minus", m, d) + spec.outlier_mean_minus
        )
        labels.append(-np.ones(m))
        blocks.append(
            _normal_rows(spec.seed, run_index, "outliers-plus", m, d) + spec.outlier_mean_plus
        )
        labels.append(np.ones(m))
    x_train = np.vstack(blocks)
    y_train = np.concatenate(labels)
    train = Dataset(
        samples=tuple(Sample(id=i + 1, payload=row) for i, row in enumerate(x_train)),
        labels=y_train,
        provenance=f"simulation(seed={spec.seed},run={run_index})/train",
    )
    n_test_minus = spec.test_size // 2
    n_test_plus = spec.test_size - n_test_minus
    x_test = np.vstack(
        [
            _normal_rows(spec.seed, run_index, "test-minus", n_test_minus, d),
            _normal_rows(spec.seed, run_index, "test-plus", n_test_plus, d) + spec.shift,
        ]
    )
    y_test = np.concatenate([-np.ones(n_test_minus), np.ones(n_test_plus)])
    test = Dataset(
        samples=tuple(Sample(id=i + 1, payload=row) for i, row in enumerate(x_test)),
        labels=y_test,
        provenance=f"simulation(seed={spec.seed},run={run_index})/test",
    )
    return train, test


# Jitter spread of the toy outlier clusters ("around" a position).
TOY_JITTER_VARIANCE = 0.1


def gen_toy(seed: int = 0) -> Dataset:
    """The 66-sample two-dimensional illustration dataset.

    Ids 1-30: N((0,0), I) labeled -1.  Ids 31-60: N((1.5,1.5), I) labeled +1.
    Ids 61-63: +1 around (5,7); ids 64-65: +1 around (5,-5), both jittered by
    N(0, 0.1 I).  Id 66: exactly (0,0), labeled +1.
    """
    jitter = math.sqrt(TOY_JITTER_VARIANCE)

    def rows(name, count, center, scale=1.0):
        stream = Stream(derive_key(seed, "toy", name))
        return stream.normals(count * 2).reshape(count, 2) * scale + np.asarray(center)

    x = np.vstack(
        [
            rows("minus", 30, (0.0, 0.0)),
            rows("plus", 30, (1.5, 1.5)),
            rows("far", 3, (5.0, 7.0), jitter),
            rows("low", 2, (5.0, -5.0), jitter),
            np.array([[0.0, 0.0]]),
        ]
    )
    labels = np.concatenate([-np.ones(30), np.ones(36)])
    return Dataset(
        samples=tuple(Sample(id=i + 1, payload=row) for i, row in enumerate(x)),
        labels=labels,
        provenance=f"toy(seed={seed})",
    )


@dataclass(frozen=True)
class RunRow:
    """Test misclassification fraction of one (run, kappa) cell."""

    run: int
    kappa: float
    error: float  # nan marks a failed run
    failure: str | None = None


@dataclass(frozen=True)
class SummaryRow:
    kappa: float
    median: float
    q1: float
    q3: float


@dataclass(frozen=True)
class SimulationResult:
    rows: tuple
    summary: tuple


def _evaluate_run(spec, kernel, cv, policy, run, tol):
    train, test = gen_simulation(spec, run)
    rows = []
    cross = None
    for kappa in spec.kappas:
        try:
            fit = fit_sdsvm(train, kernel, kappa=kappa, cv=cv, policy=policy, tol=tol)
            if cross is None:
                cross = kernel_cross(kernel, train.samples, test.samples)
            retained = np.array(fit.plan.retained, dtype=np.intp)
            f_vals = (fit.model.alpha * fit.model.labels) @ cross[retained] + fit.model.bias
            predictions = np.where(f_vals >= 0.0, 1.0, -1.0)
            error = float(np.mean(predictions != test.labels))
            rows.append(RunRow(run=run, kappa=kappa, error=error))
        except SdsvmError as exc:
            rows.append(
                RunRow(run=run, kappa=kappa, error=math.nan, failure=type(exc).__name__)
            )
    return rows


def run_simulation(
    spec: SimulationSpec,
    kernel: KernelSpec | None = None,
    cv: CvConfig | None = None,
    policy: DirectionPolicy | None = None,
    threads: int = 1,
    tol: float = 1e-3,
) -> SimulationResult:
    """Fit every (run, kappa) cell and summarize test error per kappa.

    Failures inside a run are recorded as nan rows instead of aborting the
    sweep.  Results do not depend on the thread count: each run's data comes
    from its own (seed, run)-derived streams.
    """
    kernel = kernel or KernelSpec(kind="linear")
    cv = cv or CvConfig()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_run = list(
                pool.map(
                    lambda run: _evaluate_run(spec, kernel, cv, policy, run, tol),
                    range(spec.runs),
                )
            )
    else:
        per_run = [_evaluate_run(spec, kernel, cv, policy, run, tol) for run in range(spec.runs)]
    rows = tuple(row for chunk in per_run for row in chunk)
    summary = []
    for kappa in spec.kappas:
        errs = np.array([r.error for r in rows if r.kappa == kappa and not math.isnan(r.error)])
        if errs.size == 0:
            summary.append(SummaryRow(kappa=kappa, median=math.nan, q1=math.nan, q3=math.nan))
            continue
        summary.append(
            SummaryRow(
                kappa=kappa,
                median=float(np.median(errs)),
                q1=float(np.percentile(errs, 25)),
                q3=float(np.percentile(errs, 75)),
            )
        )
    return SimulationResult(rows=rows, summary=tuple(summary))


def simulation_rows_csv(result: SimulationResult) -> str:
    lines = ["run,kappa,error"]
    for r in result.rows:
        lines.append(f"{r.run},{r.kappa!r},{r.error!r}")
    return "\n".join(lines) + "\n"


def simulation_summary_csv(result: SimulationResult) -> str:
    lines = ["kappa,median,q1,q3"]
    for s in result.summary:
        lines.append(f"{s.kappa!r},{s.median!r},{s.q1!r},{s.q3!r}")
    return "\n".join(lines) + "\n"


def load_csv(path, label_col="last", coding=None) -> Dataset:
    """Rectangular numeric CSV (no header) with one label column.

    label_col is "first", "last", or a 0-based column index.  Labels must be
    +-1 unless a two-value coding (neg_token, pos_token) maps them.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path!r}: {exc}") from exc
    samples = []
    labels = []
    width = None
    row_num = 0
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        cells = [c.strip() for c in raw.split(",")]
        if width is None:
            width = len(cells)
            if width < 2:
                raise ParseError("need at least one feature column and one label column", line=lineno)
            if label_col == "last":
                col = width - 1
            elif label_col == "first":
                col = 0
            else:
                col = int(label_col)
            if not 0 <= col < width:
                raise ParseError(f"label column {col} outside row of width {width}", line=lineno)
        elif len(cells) != width:
            raise ParseError(f"ragged row: {len(cells)} cells, expected {width}", line=lineno)
        token = cells[col]
        if coding is not None:
            neg, pos = coding
            if token == str(neg):
                label = -1.0
            elif token == str(pos):
                label = 1.0
            else:
                raise LabelError(f"label {token!r} not in coding {coding!r}", line=lineno)
        else:
            try:
                label = float(token)
            except ValueError:
                raise LabelError(f"label {token!r} is not numeric", line=lineno) from None
            if label not in (-1.0, 1.0):
                raise LabelError(f"label {token!r} is not -1 or +1", line=lineno)
        features = cells[:col] + cells[col + 1 :]
        try:
            payload = np.array([float(c) for c in features])
        except ValueError as exc:
            raise ParseError(f"non-numeric cell: {exc}", line=lineno) from None
        row_num += 1
        samples.append(Sample(id=row_num, payload=payload))
        labels.append(label)
    if not samples:
        raise ParseError("no data rows", line=1)
    return Dataset(samples=tuple(samples), labels=np.array(labels), provenance=str(path))


def save_csv(dataset: Dataset, destination) -> None:
    """Write vector payloads plus a trailing label column (load_csv inverse)."""
    lines = []
    for sample, label in zip(dataset.samples, dataset.labels):
        if sample.kind != "vector":
            raise SdsvmError("save_csv requires vector payloads")
        cells = [repr(float(v)) for v in sample.payload] + [str(int(label))]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {destination!r}: {exc}") from exc


def load_fasta(path, labels_path) -> Dataset:
    """FASTA records plus a two-column whitespace-separated labels file.

    Multi-line sequences are concatenated.  Every record id must appear in
    the labels file exactly once with a +-1 label.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            fasta_lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path!r}: {exc}") from exc
    records = []  # (id, sequence) in file order
    seen = set()
    current_id = None
    chunks = []
    for lineno, raw in enumerate(fasta_lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            if current_id is not None:
                records.append((current_id, "".join(chunks)))
            header = line[1:].strip()
            if not header:
                raise ParseError("empty FASTA header", line=lineno)
            current_id = header.split()[0]
            if current_id in seen:
                raise DuplicateId(current_id)
            seen.add(current_id)
            chunks = []
        else:
            if current_id is None:
                raise ParseError("sequence data before any FASTA header", line=lineno)
            chunks.append(line)
    if current_id is not None:
        records.append((current_id, "".join(chunks)))
    if not records:
        raise ParseError("no FASTA records", line=1)

    try:
        with open(labels_path, "r", encoding="utf-8") as fh:
            label_lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {labels_path!r}: {exc}") from exc
    label_of = {}
    for lineno, raw in enumerate(label_lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'id label', got {line!r}", line=lineno)
        rid, token = parts
        if rid in label_of:
            raise DuplicateId(rid)
        try:
            value = float(token)
        except ValueError:
            raise LabelError(f"label {token!r} is not numeric", line=lineno) from None
        if value not in (-1.0, 1.0):
            raise LabelError(f"label {token!r} is not -1 or +1", line=lineno)
        label_of[rid] = value
    samples = []
    labels = []
    for rid, seq in records:
        if rid not in label_of:
            raise MissingLabel(rid)
        samples.append(Sample(id=rid, payload=seq))
        labels.append(label_of[rid])
    return Dataset(samples=tuple(samples), labels=np.array(labels), provenance=str(path))
