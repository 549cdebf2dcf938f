"""Deterministic SVG rendering of profile, history, and convergence CSVs.

Every plot is produced from an on-disk CSV so rendered figures and their
data stay in one-to-one correspondence; the SVG output carries no
timestamps and uses a fixed hash salt, making reruns byte-identical.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["profile_svg", "history_svg", "convergence_svg", "render_csv"]

PROFILE_HEADER = ("d", "abs_u", "model_fit")
HISTORY_HEADER = ("iteration", "rayleigh")
CONVERGENCE_HEADER = ("h", "center_value", "cauchy_ratio")

# fixed geometry and salt: rendered bytes depend only on the data
_RC = {
    "svg.hashsalt": "ma-eigen",
    "svg.fonttype": "path",
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "path.simplify": False,
}


def _read_columns(csv_path, header):
    """Parse a numeric CSV with the exact expected header into columns."""
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None:
            raise ValueError(f"{csv_path}: empty CSV")
        if [c.strip() for c in got] != list(header):
            raise ValueError(
                f"{csv_path}: expected header {','.join(header)}, "
                f"got {','.join(got)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or row == [""]:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{csv_path}:{lineno}: expected {len(header)} fields, "
                    f"got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(
                    f"{csv_path}:{lineno}: non-numeric field in {row}"
                ) from None
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    return [list(col) for col in zip(*rows)]


def _save(fig, svg_path):
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def profile_svg(csv_path, svg_path) -> None:
    """Render a boundary-growth profile: measured |u| and fitted model.

    Parameters
    ----------
    csv_path : str or Path
        CSV with columns d, abs_u, model_fit.
    svg_path : str or Path
        Output SVG path.

    Raises
    ------
    ValueError
        On an empty, headerless, or non-numeric CSV.
    """
    d, abs_u, model = _read_columns(csv_path, PROFILE_HEADER)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.loglog(d, abs_u, "o-", color="#1f4e79", markersize=4,
                  label="measured |u|")
        ax.loglog(d, model, "--", color="#c04a00",
                  label="fit C d |log d|^beta")
        ax.set_xlabel("distance to the boundary")
        ax.set_ylabel("|u|")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        _save(fig, svg_path)


def history_svg(csv_path, svg_path) -> None:
    """Render a Rayleigh-quotient history as a line plot over iterations."""
    k, r = _read_columns(csv_path, HISTORY_HEADER)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(k, r, "o-", color="#1f4e79", markersize=4)
        ax.set_xlabel("iteration")
        ax.set_ylabel("Rayleigh quotient")
        ax.grid(True, alpha=0.3)
        _save(fig, svg_path)


def convergence_svg(csv_path, svg_path) -> None:
    """Render a grid-refinement study: center value against spacing h."""
    h, center, _ratio = _read_columns(csv_path, CONVERGENCE_HEADER)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.semilogx(h, center, "o-", color="#1f4e79", markersize=4)
        ax.invert_xaxis()
        ax.set_xlabel("grid spacing h")
        ax.set_ylabel("u(center)")
        ax.grid(True, which="both", alpha=0.3)
        _save(fig, svg_path)


_RENDERERS = {
    "profile": profile_svg,
    "history": history_svg,
    "convergence": convergence_svg,
}


def render_csv(kind: str, csv_path, svg_path) -> None:
    """Dispatch to the renderer for one of the known CSV layouts."""
    try:
        fn = _RENDERERS[kind]
    except KeyError:
        raise ValueError(
            f"unknown plot kind {kind!r}; expected one of "
            f"{sorted(_RENDERERS)}") from None
    fn(csv_path, svg_path)
