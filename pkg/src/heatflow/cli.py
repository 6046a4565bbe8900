"""Command line interface: ``heatflow run | generate | wgll-scan``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import chronograph
from .datasets import generate, load_csv
from .estimator import HeatFlowClustering
from .potential import FAMILIES, Kernel
from .stability import auto_flow_setup, stability_table, wgll_scan

logger = logging.getLogger("heatflow")


@dataclass
class RunConfig:
    input: Optional[str] = None
    generator: Optional[str] = None
    seed: int = 0
    kernel: str = "gaussian"
    kernel_scale: float = 1.0
    t0: Optional[float] = None
    t_max: Optional[float] = None
    slices: int = 51
    grid_res: Optional[int] = None
    margin: float = 4.0
    path_samples: int = 256
    threshold: float = 0.4
    band: str = "0:0"
    out: str = "heatflow-out"

    def validate(self):
        if (self.input is None) == (self.generator is None):
            raise ValueError("give exactly one of --input or --generator")
        if self.slices < 2:
            raise ValueError("slice count must be at least 2")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.kernel not in FAMILIES:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.t0 is not None and self.t_max is not None and not self.t0 < self.t_max:
            raise ValueError("degenerate time range")
        s1, s2 = self.band_pair
        if s1 > s2:
            raise ValueError("band needs s1 <= s2")

    @property
    def band_pair(self) -> tuple:
        try:
            s1, s2 = (float(v) for v in self.band.split(":"))
        except ValueError:
            raise ValueError(f"band must look like s1:s2, got {self.band!r}") from None
        return s1, s2


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    kind = _TYPES[key]
    if value.lower() in ("", "none"):
        return None
    if "int" in kind:
        return int(value)
    if "float" in kind:
        return float(value)
    return value


def read_config(path) -> dict:
    """Flat ``key = value`` file; keys are flag names with - or _."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _load(cfg: RunConfig):
    if cfg.input is not None:
        return load_csv(cfg.input), None
    g = generate(cfg.generator, cfg.seed)
    return g.dataset, g


def run(cfg: RunConfig) -> dict:
    """Full pipeline; writes all artifacts into ``cfg.out`` and returns the summary."""
    cfg.validate()
    ds, gen = _load(cfg)
    band = cfg.band_pair
    est = HeatFlowClustering(
        kernel=cfg.kernel,
        kernel_scale=cfg.kernel_scale,
        n_slices=cfg.slices,
        t_min=cfg.t0,
        t_max=cfg.t_max,
        resolution=cfg.grid_res,
        margin=cfg.margin,
        path_samples=cfg.path_samples,
        threshold=cfg.threshold,
        band=band,
    ).fit(ds.points)
    flow = est.flow_
    if flow is None:
        raise ValueError("zero diameter")

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    times = flow.times.times

    _write_csv(
        out / "series.csv",
        ["k", "t", "M", "S"],
        [(k, times[k], m, s) for k, (m, s) in enumerate(zip(flow.M_series, flow.S_series))],
    )

    full = est.stability_
    trunc = stability_table(flow, est.horizon_, band=band)
    _write_csv(
        out / "stability.csv",
        ["n", "B", "B_band", "B_truncated", "B_band_truncated"],
        [
            (n, full[n], full.banded[n], trunc[n], trunc.banded[n])
            for n in range(1, ds.N + 1)
        ],
    )

    tree = est.chronodendrogram_
    (out / "chronodendrogram.json").write_text(chronograph.export_json(tree), encoding="utf-8")
    (out / "chronodendrogram.dot").write_text(chronograph.export_dot(tree), encoding="utf-8")

    scores = est.cluster_scores_
    _write_csv(
        out / "clusters.csv",
        ["index", "label", "score"],
        [
            (i, lab, None if np.isnan(scores[lab]) else scores[lab])
            for i, lab in enumerate(est.labels_)
        ],
    )

    scan = wgll_scan(ds, Kernel(cfg.kernel, cfg.kernel_scale), flow.times)
    _write_csv(out / "wgll.csv", ["t", "S_WGLL"], zip(scan.times, scan.entropy))

    c = est.consolidation_index_
    first = est.rounds_[0] if est.rounds_ else {}
    anchor = first.get("anchor")
    summary = {
        "config": asdict(cfg),
        "points": ds.N,
        "dimension": ds.n,
        "times": {"t0": float(times[0]), "t_max": float(times[-1]), "slices": len(times)},
        "consolidation": None if c is None else {"index": c, "t": float(times[c])},
        "horizon": est.horizon_,
        "chosen_n": est.n_selected_,
        "anchor": None if anchor is None else {"index": anchor, "t": float(times[anchor])},
        "clusters": [
            {
                "label": lab,
                "size": int(cl.indices.size),
                "score": cl.score,
                "t": cl.time,
                "round": cl.round,
            }
            for lab, cl in enumerate(est.clusters_)
        ],
        "wgll_minima": [float(scan.times[i]) for i in scan.minima],
    }
    if gen is not None:
        summary["generator"] = {"name": gen.name, "seed": gen.seed, "assumptions": gen.assumptions}
    (out / "run_summary.json").write_text(json.dumps(summary, indent=1) + "\n", encoding="utf-8")
    return summary


def _add_common(p: argparse.ArgumentParser):
    # defaults stay None so the config file can fill unset flags
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--input", help="CSV file, one point per row")
    p.add_argument("--generator", help="synthetic dataset: noisy1d, circles2d or toy")
    p.add_argument("--seed", type=int)
    p.add_argument("--kernel", choices=FAMILIES)
    p.add_argument("--kernel-scale", dest="kernel_scale", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--slices", type=int)
    p.add_argument("--grid-res", dest="grid_res", type=int)
    p.add_argument("--margin", type=float)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatflow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="cluster a dataset and write all reports")
    _add_common(p)
    p.add_argument("--path-samples", dest="path_samples", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--band", help="entropy band s1:s2 for local scores")

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    p.add_argument("--generator", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("wgll-scan", help="WGLL entropy over the time grid")
    _add_common(p)
    return parser


def _config_from(args) -> RunConfig:
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def _cmd_generate(args):
    g = generate(args.generator, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = [f"x{d}" for d in range(g.dataset.n)]
    _write_csv(out / "points.csv", header, g.dataset.points.tolist())
    _write_csv(out / "labels.csv", ["index", "label"], enumerate(g.labels.tolist()))
    print(f"wrote {g.dataset.N} points to {out / 'points.csv'}")


def _cmd_wgll(args):
    cfg = _config_from(args)
    cfg.validate()
    ds, _ = _load(cfg)
    kernel = Kernel(cfg.kernel, cfg.kernel_scale)
    tg, _ = auto_flow_setup(
        ds, kernel, cfg.slices, t_min=cfg.t0, t_max=cfg.t_max,
        resolution=cfg.grid_res, margin=cfg.margin,
    )
    scan = wgll_scan(ds, kernel, tg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "wgll.csv", ["t", "S_WGLL"], zip(scan.times, scan.entropy))
    for i in scan.minima:
        print(f"local minimum at t={float(scan.times[i])!r} S={float(scan.entropy[i])!r}")
    if not scan.minima.size:
        print("no interior local minimum")


def _cmd_run(args):
    summary = run(_config_from(args))
    print(f"{len(summary['clusters'])} clusters written to {summary['config']['out']}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    handler = {"run": _cmd_run, "generate": _cmd_generate, "wgll-scan": _cmd_wgll}[args.command]
    try:
        handler(args)
    except (ValueError, OSError) as exc:
        print(f"heatflow: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
