"""
Figure and table emission.

Every figure is written twice: a CSV holding the numbers and a static SVG
drawn from them. Any number printed as text inside an SVG is taken from,
and formatted exactly like, a value in the figure's CSV.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import clustering, features
from .evaluation import MODEL_LABELS, EvaluationReport, fmt
from .ingest import Dataset

HIST_COLUMNS = (
    "open",
    "high",
    "low",
    "close",
    "volume",
    "percent_change_price",
    "percent_change_volume_over_last_wk",
    "percent_change_next_weeks_price",
    "days_to_next_dividend",
    "percent_return_next_dividend",
)

FIGURE_STEMS = {
    1: "fig1_price_lines",
    2: "fig2_histograms",
    3: "fig3_log_price_lines",
    4: "fig4_elbow",
    5: "fig5_linear_regression",
    6: "fig6_random_forest",
    7: "fig7_gradient_boosting",
}
MODEL_FIGURE = {"linear_regression": 5, "random_forest": 6, "gradient_boosting": 7}

W, H = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 70, 90, 40, 50
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class Writer:
    """Collects emitted files so a manifest can be written at the end."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.paths: list[str] = []

    def text(self, rel: str, content: str) -> Path:
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(content)
        if rel not in self.paths:
            self.paths.append(rel)
        return path

    def table(self, rel: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        return self.text(rel, buf.getvalue())

    def manifest(self) -> Path:
        return self.text("manifest.txt", "".join(f"{p}\n" for p in sorted(self.paths)))


# -- SVG primitives ---------------------------------------------------------

def _svg(body: list[str], title: str, width=W, height=H) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
        f'{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _text(x, y, s, anchor="middle", **attrs) -> str:
    extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
    return f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'


class _Frame:
    """Maps data coordinates into a plot rectangle."""

    def __init__(self, xlo, xhi, ylo, yhi, left=PAD_L, top=PAD_T,
                 width=W - PAD_L - PAD_R, height=H - PAD_T - PAD_B):
        self.xlo, self.xhi = xlo, (xhi if xhi > xlo else xlo + 1)
        self.ylo, self.yhi = ylo, (yhi if yhi > ylo else ylo + 1)
        self.left, self.top, self.width, self.height = left, top, width, height

    def x(self, v):
        return self.left + (v - self.xlo) / (self.xhi - self.xlo) * self.width

    def y(self, v):
        return self.top + self.height - (v - self.ylo) / (self.yhi - self.ylo) * self.height

    def axes(self) -> list[str]:
        x0, y0 = self.left, self.top + self.height
        return [f'<line x1="{x0}" y1="{self.top}" x2="{x0}" y2="{y0}" stroke="black"/>',
                f'<line x1="{x0}" y1="{y0}" x2="{x0 + self.width}" y2="{y0}" stroke="black"/>']


def _polyline(frame, xs, ys, color) -> str:
    pts = " ".join(f"{frame.x(a):.2f},{frame.y(b):.2f}" for a, b in zip(xs, ys))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>'


def line_chart(title, x_labels, series: dict, y_label) -> str:
    """One line per series over a categorical x axis."""
    values = np.array(list(series.values()), dtype=float)
    ylo, yhi = float(values.min()), float(values.max())
    fr = _Frame(0, max(len(x_labels) - 1, 1), ylo, yhi)
    body = fr.axes()
    body.append(_text(fr.left - 6, fr.y(yhi) + 4, fmt(yhi), "end"))
    body.append(_text(fr.left - 6, fr.y(ylo) + 4, fmt(ylo), "end"))
    base = fr.top + fr.height
    body.append(_text(fr.x(0), base + 16, str(x_labels[0]), "start"))
    body.append(_text(fr.x(len(x_labels) - 1), base + 16, str(x_labels[-1]), "end"))
    body.append(_text(18, fr.top + fr.height / 2, y_label, "middle",
                      transform=f"rotate(-90 18 {fr.top + fr.height / 2:.1f})"))
    for i, (name, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        body.append(_polyline(fr, range(len(ys)), ys, color))
        body.append(_text(fr.left + fr.width + 4, fr.y(ys[-1]) + 3, name, "start",
                          fill=color, font_size="8"))
    return _svg(body, title)


def histogram_grid(title, panels: dict) -> str:
    """Small-multiple bar histograms; ``panels`` maps name -> [(lo, hi, count)]."""
    cols = 4
    rows = max(1, -(-len(panels) // cols))
    pw, ph = 200, 150
    width, height = cols * pw + 20, rows * ph + 40
    body = []
    for n, (name, bins) in enumerate(panels.items()):
        ox, oy = 10 + (n % cols) * pw, 35 + (n // cols) * ph
        top = max(c for _, _, c in bins)
        fr = _Frame(0, len(bins), 0, top, left=ox + 30, top=oy + 18, width=pw - 45, height=ph - 55)
        body.append(_text(ox + pw / 2, oy + 10, name, font_size="10"))
        body += fr.axes()
        for i, (_, _, c) in enumerate(bins):
            x0, x1 = fr.x(i), fr.x(i + 1)
            y1 = fr.y(c)
            body.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{max(x1 - x0 - 1, 0.5):.2f}" '
                        f'height="{fr.top + fr.height - y1:.2f}" fill="#4c72b0"/>')
        base = fr.top + fr.height
        body.append(_text(fr.left - 3, fr.y(top) + 4, fmt(top), "end", font_size="8"))
        body.append(_text(fr.x(0), base + 12, fmt(bins[0][0]), "start", font_size="8"))
        body.append(_text(fr.x(len(bins)), base + 24, fmt(bins[-1][1]), "end", font_size="8"))
    return _svg(body, title, width, height)


def scatter_chart(title, points: dict, x_label, y_label, diagonal=True) -> str:
    """Scatter groups; ``points`` maps group name -> (xs, ys)."""
    allx = np.concatenate([np.asarray(v[0], float) for v in points.values()])
    ally = np.concatenate([np.asarray(v[1], float) for v in points.values()])
    lo = float(min(allx.min(), ally.min()))
    hi = float(max(allx.max(), ally.max()))
    fr = _Frame(lo, hi, lo, hi)
    body = fr.axes()
    if diagonal:
        body.append(f'<line x1="{fr.x(lo):.2f}" y1="{fr.y(lo):.2f}" x2="{fr.x(hi):.2f}" '
                    f'y2="{fr.y(hi):.2f}" stroke="#999999" stroke-dasharray="4 3"/>')
    base = fr.top + fr.height
    body.append(_text(fr.left - 6, fr.y(hi) + 4, fmt(hi), "end"))
    body.append(_text(fr.left - 6, fr.y(lo) + 4, fmt(lo), "end"))
    body.append(_text(fr.x(lo), base + 16, fmt(lo), "start"))
    body.append(_text(fr.x(hi), base + 16, fmt(hi), "end"))
    body.append(_text(fr.left + fr.width / 2, base + 36, x_label))
    body.append(_text(18, fr.top + fr.height / 2, y_label, "middle",
                      transform=f"rotate(-90 18 {fr.top + fr.height / 2:.1f})"))
    for i, (name, (xs, ys)) in enumerate(points.items()):
        color = PALETTE[i % len(PALETTE)]
        for a, b in zip(xs, ys):
            body.append(f'<circle cx="{fr.x(a):.2f}" cy="{fr.y(b):.2f}" r="3" fill="{color}"/>')
        body.append(_text(fr.left + fr.width + 8, fr.top + 14 * (i + 1), name, "start", fill=color))
    return _svg(body, title)


def bar_chart(title, labels, groups: dict, y_label) -> str:
    """Grouped bars; ``groups`` maps legend name -> one value per label."""
    vals = np.array(list(groups.values()), dtype=float)
    ylo, yhi = min(0.0, float(vals.min())), max(0.0, float(vals.max()))
    fr = _Frame(0, len(labels), ylo, yhi)
    body = fr.axes()
    zero = fr.y(0.0)
    body.append(f'<line x1="{fr.left}" y1="{zero:.2f}" x2="{fr.left + fr.width}" '
                f'y2="{zero:.2f}" stroke="#555555"/>')
    ng = len(groups)
    for g, (name, values) in enumerate(groups.items()):
        color = PALETTE[g % len(PALETTE)]
        for i, v in enumerate(values):
            x0 = fr.x(i + 0.1 + 0.8 * g / ng)
            x1 = fr.x(i + 0.1 + 0.8 * (g + 1) / ng)
            y = fr.y(v)
            body.append(f'<rect x="{x0:.2f}" y="{min(y, zero):.2f}" width="{x1 - x0 - 1:.2f}" '
                        f'height="{abs(zero - y):.2f}" fill="{color}"/>')
            body.append(_text((x0 + x1) / 2, min(y, zero) - 3, fmt(v), font_size="9"))
        body.append(_text(fr.left + fr.width + 8, fr.top + 14 * (g + 1), name, "start", fill=color))
    base = fr.top + fr.height
    for i, lab in enumerate(labels):
        body.append(_text(fr.x(i + 0.5), base + 16, lab))
    body.append(_text(18, fr.top + fr.height / 2, y_label, "middle",
                      transform=f"rotate(-90 18 {fr.top + fr.height / 2:.1f})"))
    return _svg(body, title)


# -- figures ------------------------------------------------------------------

def _closes(d: Dataset):
    tickers, dates = d.tickers, d.dates
    grid = {(r.stock, r.date): r.close for r in d.records}
    return tickers, dates, np.array([[grid[(t, dt)] for dt in dates] for t in tickers])


def emit_eda(d: Dataset, w: Writer, bins: int = 20) -> None:
    """Price lines, per-column histograms and log-price lines."""
    tickers, dates, close = _closes(d)
    iso = [dt.isoformat() for dt in dates]

    w.table(f"{FIGURE_STEMS[1]}.csv", ("date", "ticker", "close"),
            ((iso[j], t, fmt(close[i, j])) for i, t in enumerate(tickers)
             for j in range(len(dates))))
    rounded = np.vectorize(lambda v: float(fmt(v)))(close)
    w.text(f"{FIGURE_STEMS[1]}.svg",
           line_chart("Weekly close price by stock", iso,
                      dict(zip(tickers, rounded)), "close (USD)"))

    panels = {}
    for col in HIST_COLUMNS:
        vals = [getattr(r, col) for r in d.records if getattr(r, col) is not None]
        if vals:
            panels[col] = [(float(fmt(lo)), float(fmt(hi)), c)
                           for lo, hi, c in features.histogram(vals, bins)]
    w.table(f"{FIGURE_STEMS[2]}.csv", ("column", "bin_lower", "bin_upper", "count"),
            ((col, fmt(lo), fmt(hi), c) for col, b in panels.items() for lo, hi, c in b))
    w.text(f"{FIGURE_STEMS[2]}.svg", histogram_grid("Frequency histograms", panels))

    logc = features.log_transform(close)
    w.table(f"{FIGURE_STEMS[3]}.csv", ("date", "ticker", "log_close"),
            ((iso[j], t, fmt(logc[i, j])) for i, t in enumerate(tickers)
             for j in range(len(dates))))
    rounded = np.vectorize(lambda v: float(fmt(v)))(logc)
    w.text(f"{FIGURE_STEMS[3]}.svg",
           line_chart("Close price after log transformation", iso,
                      dict(zip(tickers, rounded)), "ln(close)"))


def emit_clusters(model: clustering.ClusterModel, curve, anchors: Sequence[str],
                  w: Writer) -> None:
    """Elbow curve (figure data), assignments and anchor cluster members."""
    w.table(f"{FIGURE_STEMS[4]}.csv", ("k", "wcss"), ((k, fmt(v)) for k, v in curve))
    ks = [k for k, _ in curve]
    ws = [float(fmt(v)) for _, v in curve]
    fr = _Frame(min(ks), max(ks), min(ws), max(ws))
    body = fr.axes()
    body.append(_polyline(fr, ks, ws, PALETTE[0]))
    for k, v in zip(ks, ws):
        body.append(f'<circle cx="{fr.x(k):.2f}" cy="{fr.y(v):.2f}" r="3" fill="{PALETTE[0]}"/>')
        body.append(_text(fr.x(k), fr.top + fr.height + 16, str(k)))
        body.append(_text(fr.x(k) + 4, fr.y(v) - 6, fmt(v), "start", font_size="8"))
    body.append(_text(fr.left + fr.width / 2, fr.top + fr.height + 36, "number of clusters"))
    body.append(_text(18, fr.top + fr.height / 2, "within-cluster sum of squares", "middle",
                      transform=f"rotate(-90 18 {fr.top + fr.height / 2:.1f})"))
    w.text(f"{FIGURE_STEMS[4]}.svg", _svg(body, "Elbow curve for k-means on weekly returns"))

    w.table("clusters.csv", ("ticker", "cluster"),
            sorted(model.assignments.items()))
    w.table("cluster_members.csv", ("anchor", "members"),
            ((a, " ".join(clustering.cluster_members(model, a))) for a in anchors))


def emit_evaluation(report: EvaluationReport, w: Writer) -> None:
    w.text("report.txt", report.to_text())
    w.text("report.kv", report.to_kv())

    for name, fig in MODEL_FIGURE.items():
        stem = FIGURE_STEMS[fig]
        rows, groups = [], {}
        for res in report.results:
            s = next(x for x in res.scores if x.name == name)
            for part, idx, pred in (("train", res.train_idx, s.train_pred),
                                    ("test", res.test_idx, s.test_pred)):
                actual = res.design.y[idx]
                for i, a, p in zip(idx, actual, pred):
                    rows.append((res.target, res.design.dates[i].isoformat(), part,
                                 fmt(a), fmt(p)))
                groups[f"{res.target} {part}"] = ([float(fmt(v)) for v in actual],
                                                  [float(fmt(v)) for v in pred])
        w.table(f"{stem}.csv", ("target", "date", "split", "actual", "predicted"), rows)
        w.text(f"{stem}.svg", scatter_chart(f"{MODEL_LABELS[name]}: predicted vs actual",
                                            groups, "actual next-week return (%)",
                                            "predicted (%)"))

    acc_rows = [(s.target, s.name, fmt(s.accuracy), fmt(s.reference_accuracy))
                for s in report.scores]
    w.table("accuracy.csv", ("target", "model", "accuracy", "reference_accuracy"), acc_rows)
    labels = [f"{MODEL_LABELS[s.name]} {s.target}" for s in report.scores]
    w.text("accuracy.svg", bar_chart(
        "Model accuracy (100 x test R2) beside reference values", labels,
        {"obtained": [float(fmt(s.accuracy)) for s in report.scores],
         "reference": [float(fmt(s.reference_accuracy)) for s in report.scores]},
        "accuracy"))


def emit_figures(artifacts: dict, out_dir) -> list[str]:
    """Write every figure the artifacts allow; returns the manifest entries.

    Recognised keys: ``dataset`` (figures 1-3), ``clusters`` + ``elbow``
    (+ ``anchors``) for figure 4, ``evaluation`` for figures 5-7.
    """
    w = Writer(out_dir)
    if "dataset" in artifacts:
        emit_eda(artifacts["dataset"], w, artifacts.get("bins", 20))
    if "clusters" in artifacts:
        emit_clusters(artifacts["clusters"], artifacts["elbow"], artifacts.get("anchors", ()), w)
    if "evaluation" in artifacts:
        emit_evaluation(artifacts["evaluation"], w)
    w.manifest()
    return sorted(p for p in w.paths if p != "manifest.txt")
