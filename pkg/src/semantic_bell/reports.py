"""Export of analysis tables (CSV/JSON/Markdown) and S histograms (SVG).

All writers sort their rows and avoid timestamps so that identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import (
    BenchmarkCorrelations,
    Marker,
    ModelDistributionSummary,
    OrderEffects,
    sampling_table,
)
from .chsh import CLASSICAL_BOUND
from .core import GRID_TEMPERATURES, GRID_TOP_K, GRID_TOP_P
from .protocol import GridResults
from .store import StorageError

TABLE1_COLUMNS = ["model", "n", "sigma", "gamma1", "kappa", "IQR", "viol%"]
TABLE2_COLUMNS = ["model", "temperature", "top_p", "top_k", "mean", "sigma", "n", "bold"]
GRID_POINT_COLUMNS = [
    "model", "word1", "word2", "order", "temperature", "top_p", "top_k",
    "n_trials", "n_complete", "n_discarded", "n_failed",
    "E_AB", "E_AB'", "E_A'B", "E_A'B'", "S_literal", "S_signed",
]
ORDER_COLUMNS = ["model", "word", "lens", "temperature", "top_p", "top_k", "p_original", "p_flipped", "delta"]
CORRELATION_COLUMNS = ["statistic", "benchmark", "rho", "p_value", "n", "pearson_r", "pearson_p", "models"]

CONVENTIONS = {
    "moments": "population (no small-sample correction): sigma=sqrt(m2), gamma1=m3/m2^1.5, kappa=m4/m2^2-3",
    "quantiles": "linear interpolation at fractional rank q*(n-1)",
    "violation": "|S| > 2, strict",
    "S": "S_literal = E(AB) - E(AB') + E(A'B) + E(A'B') with E(XY) = 4 Tr(rho P_XY)",
    "correlation": "Spearman with average ranks; exact permutation p for n<=8, t approximation otherwise",
}


def _fmt(v):
    if isinstance(v, Marker):
        return v.value
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    n = 0
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
        n += 1
    _write_text(path, buf.getvalue())
    return n


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def _safe_name(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", model_id) or "model"


def grid_point_rows(results: Sequence[GridResults]):
    for res in sorted(results, key=lambda r: r.model_id):
        for point, cell in res.cells.items():
            s = point.sampling
            c = cell.chsh
            stats = (
                [c.n_complete, c.n_discarded, cell.failed, *c.expectations, c.s_literal, c.s_signed]
                if c is not None
                else [0, len(cell.trials), cell.failed, None, None, None, None, None, None]
            )
            yield [
                res.model_id, point.pair.word1, point.pair.word2, point.order.value,
                s.temperature, s.top_p, s.top_k, len(cell.trials), *stats,
            ]


def write_grid_points(results: Sequence[GridResults], path: Path) -> int:
    return _write_csv(path, GRID_POINT_COLUMNS, grid_point_rows(results))


def write_summaries(summaries: Sequence[ModelDistributionSummary], path: Path) -> int:
    rows = [
        [s.model_id, s.n, s.std, s.skewness, s.excess_kurtosis, s.iqr, 100.0 * s.violation_rate]
        for s in sorted(summaries, key=lambda s: s.model_id)
    ]
    return _write_csv(path, TABLE1_COLUMNS, rows)


def write_sampling_tables(results: Sequence[GridResults], csv_path: Path, md_path: Path) -> int:
    rows = []
    md = ["# Mean S +/- sigma per sampling configuration (pooled over word pairs and orders)", ""]
    md.append("Bold marks |mean S| > 2.")
    for res in sorted(results, key=lambda r: r.model_id):
        cells = sampling_table(res)
        for c in cells:
            s = c.sampling
            rows.append([res.model_id, s.temperature, s.top_p, s.top_k, c.mean, c.std, c.n, c.bold])
        lookup = {(c.sampling.temperature, c.sampling.top_p, c.sampling.top_k): c for c in cells}
        md += ["", f"## {res.model_id}", ""]
        header = ["p"] + [f"tau={t} k={k}" for t in GRID_TEMPERATURES for k in GRID_TOP_K]
        md.append("| " + " | ".join(header) + " |")
        md.append("|" + "---|" * len(header))
        for p in GRID_TOP_P:
            line = [str(p)]
            for t in GRID_TEMPERATURES:
                for k in GRID_TOP_K:
                    c = lookup.get((t, p, k))
                    if c is None:
                        line.append("---")
                    else:
                        text = f"{c.mean:.2f} +/- {c.std:.2f}"
                        line.append(f"**{text}**" if c.bold else text)
            md.append("| " + " | ".join(line) + " |")
        off_grid = [c for key, c in lookup.items() if key[0] not in GRID_TEMPERATURES
                    or key[1] not in GRID_TOP_P or key[2] not in GRID_TOP_K]
        if off_grid:
            md.append("")
            md.append(f"{len(off_grid)} sampling configurations outside the default grid are listed in the CSV only.")
    _write_text(md_path, "\n".join(md) + "\n")
    return _write_csv(csv_path, TABLE2_COLUMNS, rows)


def write_order_effects(effects: OrderEffects, csv_path: Path, summary_path: Path) -> int:
    rows = [
        [r.model_id, r.word, r.lens.value, r.sampling.temperature, r.sampling.top_p, r.sampling.top_k,
         r.p_original, r.p_flipped, r.delta]
        for r in effects.records
    ]
    _write_text(summary_path, json.dumps(effects.summary(), indent=2, sort_keys=True) + "\n")
    return _write_csv(csv_path, ORDER_COLUMNS, rows)


def write_correlations(correlations: BenchmarkCorrelations, path: Path) -> int:
    rows = [
        [r.statistic, r.benchmark, r.rho, r.p_value, r.n, r.pearson_r, r.pearson_p, ";".join(r.models)]
        for r in correlations.records
    ]
    return _write_csv(path, CORRELATION_COLUMNS, rows)


def write_histogram(model_id: str, values: Sequence[float], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "semantic-bell", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3))
        bins = np.linspace(-4.0, 4.0, 41)
        ax.hist(values, bins=bins, color="0.6", edgecolor="0.2")
        for bound in (-CLASSICAL_BOUND, CLASSICAL_BOUND):
            ax.axvline(bound, color="tab:blue", linestyle="--", linewidth=1)
        ax.set_xlim(-4.0, 4.0)
        ax.set_xlabel("S per grid point")
        ax.set_ylabel("count")
        ax.set_title(f"{model_id} (n={len(values)})")
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc
        finally:
            plt.close(fig)


def export_reports(
    results: Sequence[GridResults],
    summaries: Sequence[ModelDistributionSummary],
    order_effects: OrderEffects | None,
    correlations: BenchmarkCorrelations | None,
    outdir: str | Path,
    *,
    plots: bool = True,
) -> dict:
    """Write every report that has data and return the manifest (also saved as manifest.json)."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {outdir}: {exc}") from exc
    files: list[dict] = []
    omitted: dict[str, str] = {}

    def add(name: str, kind: str, rows: int | None = None):
        entry = {"file": name, "kind": kind}
        if rows is not None:
            entry["rows"] = rows
        files.append(entry)

    if summaries:
        add("table1_summary.csv", "distribution summary", write_summaries(summaries, outdir / "table1_summary.csv"))
    else:
        omitted["table1_summary.csv"] = "no model summaries"

    if results and any(r.valid() for r in results):
        add("grid_points.csv", "per grid point CHSH", write_grid_points(results, outdir / "grid_points.csv"))
        n = write_sampling_tables(results, outdir / "table2_sampling_grid.csv", outdir / "table2_sampling_grid.md")
        add("table2_sampling_grid.csv", "sampling grid means", n)
        add("table2_sampling_grid.md", "sampling grid layout")
    else:
        omitted["grid_points.csv"] = "no grid point with a valid CHSH result"
        omitted["table2_sampling_grid.csv"] = "no grid point with a valid CHSH result"

    if order_effects is not None and order_effects.records:
        n = write_order_effects(order_effects, outdir / "order_effects.csv", outdir / "order_effects_summary.json")
        add("order_effects.csv", "word-order effects", n)
        add("order_effects_summary.json", "word-order effect summary")
    else:
        omitted["order_effects.csv"] = "no (word, lens, sampling) cell observed in both orders"

    if correlations is not None and correlations.records:
        add("correlations.csv", "benchmark correlations", write_correlations(correlations, outdir / "correlations.csv"))
    else:
        reason = "no correlation records"
        if correlations is not None and correlations.insufficient:
            reason += ": " + "; ".join(f"{k}: {v}" for k, v in sorted(correlations.insufficient.items()))
        elif correlations is None:
            reason += ": no benchmark table supplied"
        omitted["correlations.csv"] = reason

    if plots:
        for res in sorted(results, key=lambda r: r.model_id):
            values = res.s_values()
            if values:
                name = f"s_hist_{_safe_name(res.model_id)}.svg"
                write_histogram(res.model_id, values, outdir / name)
                add(name, "S histogram")

    manifest = {"files": files, "omitted": omitted, "conventions": CONVENTIONS}
    _write_text(outdir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
