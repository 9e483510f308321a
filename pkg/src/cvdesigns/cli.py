"""Command-line front end: ``cvdesigns <group> <command>``.

Every output embeds the configuration that produced it. CSV files start with
a ``# config`` comment line; JSON files carry a ``config`` key.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field

import click
import numpy as np

from . import classical_designs as cd
from . import cp_designs as cp
from . import fidelity as fid
from . import regularized as reg
from . import rigged as rg
from . import shadows as sh
from ._kernels import BACKEND, configure_threads
from .fock_core import coherent_state

log = logging.getLogger("cvdesigns")


@dataclass
class RunConfig:
    command: str
    D: int | None = None
    seed: int | None = None
    tolerance: float | None = None
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    conventions: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.D is not None and self.D < 1:
            raise click.BadParameter("D must be >= 1")

    def as_dict(self):
        return {k: v for k, v in asdict(self).items() if v not in (None, {}, [])}


# ---------------------------------------------------------------- io helpers

def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc.strerror}") from exc


def _write_json(path, payload):
    text = json.dumps(payload, indent=1, sort_keys=True)
    if path in (None, "-"):
        click.echo(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _write_csv(path, config, header, rows):
    buf = io.StringIO()
    buf.write("# config " + json.dumps(config.as_dict(), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    if path in (None, "-"):
        click.echo(buf.getvalue(), nl=False)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _verdict(err, tol, label="max error"):
    ok = err < tol
    click.echo(f"{'PASS' if ok else 'FAIL'} {label} {err:.3e} (tol {tol:.0e})")
    return ok


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Build, verify and apply truncated-Fock state designs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    threads = configure_threads()
    log.info("kernel backend %s, threads %s", BACKEND, threads)


# ---------------------------------------------------------------- designs

BUILDERS = {
    "simplex-centroid": lambda a: cd.simplex_centroid_1design(a.d - 1),
    "simplex-extremal": lambda a: cd.simplex_extremal_1design(a.d - 1),
    "simplex-2": lambda a: cd.simplex_extremal_centroid_2design(a.d - 1),
    "hammer-stroud": lambda a: cd.simplex_hammer_stroud_2design(a.d - 1),
    "torus-cycle": lambda a: cd.torus_cycle_1design(a.d),
    "torus-product": lambda a: cd.torus_product_tdesign(a.d, a.t),
    "torus-prime": lambda a: cd.torus_prime_2design(a.d),
    "cp-mub": lambda a: cp.construction1_mub_design(a.d),
    "cp-uniform": lambda a: cp.construction2_uniform_design(a.d),
}


@dataclass
class _BuildArgs:
    d: int
    t: int


@main.group()
def designs():
    """Simplex, torus and complex-projective designs."""


@designs.command("build")
@click.option("--kind", required=True, type=click.Choice(sorted(BUILDERS)))
@click.option("--d", "d", required=True, type=int, help="Coordinates (simplex), angles (torus) or levels (cp).")
@click.option("--t", "t", default=2, show_default=True, type=int, help="Strength for torus-product.")
@click.option("--out", default="-", help="Output JSON path.")
def designs_build(kind, d, t, out):
    """Write a WeightedPointSet JSON."""
    config = RunConfig("designs build", params={"kind": kind, "d": d, "t": t}, outputs={"out": out})
    try:
        built = BUILDERS[kind](_BuildArgs(d, t))
    except cd.DesignError as exc:
        raise click.ClickException(str(exc)) from exc
    payload = built.to_dict()
    payload["config"] = config.as_dict()
    _write_json(out, payload)
    if out not in (None, "-"):
        click.echo(f"wrote {len(payload['weights'])} points to {out}")


def _load_point_set(path):
    data = _load_json(path)
    try:
        return cd.WeightedPointSet.from_dict(data)
    except (cd.DesignError, KeyError, ValueError) as exc:
        raise click.ClickException(f"{path}: {exc}") from exc


def point_set_error(ens, t):
    if ens.kind == "simplex":
        return cd.verify_simplex_design(ens, t)
    if ens.kind == "torus":
        return cd.verify_torus_design(ens, t)
    return cp.verify_cp_design(cp.CPDesign.from_point_set(ens), t, norm="max")


@designs.command("verify")
@click.argument("path")
@click.option("--t", "t", required=True, type=int)
@click.option("--tol", default=1e-10, show_default=True, type=float)
def designs_verify(path, t, tol):
    """Print the largest moment error; exit 1 above tolerance."""
    ens = _load_point_set(path)
    try:
        err = point_set_error(ens, t)
    except cd.DesignError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"{ens.kind} set, {len(ens)} points, dim {ens.dim}, t={t}")
    if not _verdict(err, tol):
        sys.exit(1)


@designs.command("project")
@click.argument("path")
@click.option("--out", default="-")
def designs_project(path, out):
    """Born-project a state design to a simplex point set."""
    ens = _load_point_set(path)
    if ens.kind != "state":
        raise click.ClickException(f"{path}: expected a state design, got {ens.kind}")
    simplex = cp.born_project(cp.CPDesign.from_point_set(ens))
    payload = simplex.to_dict()
    payload["config"] = RunConfig("designs project", inputs={"path": path}).as_dict()
    _write_json(out, payload)


# ---------------------------------------------------------------- rigged

@main.group()
def rigged():
    """Rigged phase-state designs."""


@rigged.command("check")
@click.option("--family", required=True)
@click.option("--t", "t", default=2, show_default=True, type=click.IntRange(1, 2))
@click.option("--D", "D", default=8, show_default=True, type=click.IntRange(1))
@click.option("--tol", default=1e-12, show_default=True, type=float)
@click.option("--quad-tol", default=1e-10, show_default=True, type=float)
@click.option("--gamma", default=0.0, show_default=True, type=float, help="Rotation for the rotated family.")
@click.option("--out", default=None, help="Per-element error table (CSV).")
def rigged_check(family, t, D, tol, quad_tol, gamma, out):
    """Compare exact integrals with quadrature and the assembled moment with alpha_t Pi_t."""
    if family not in rg.FAMILIES:
        raise click.ClickException(f"unknown family {family!r}; choose from {', '.join(rg.FAMILIES)}")
    config = RunConfig("rigged check", D=D, tolerance=tol, params={"family": family, "t": t, "gamma": gamma},
                       conventions={"sign": rg.default_sign(family), "measure": "rigged"})
    ok = True
    if t == 2:
        exact = rg.rigged2_exact_tensor(family, D, gamma)
        quad = rg.rigged2_quadrature_tensor(family, D, gamma=gamma)
        diff = np.abs(exact - quad)
        ok &= _verdict(float(diff.max()), quad_tol, "quadrature vs exact")
        if out:
            idx = np.argwhere(np.ones_like(diff, dtype=bool))
            rows = [
                {"a": int(a), "b": int(b), "c": int(c), "d": int(d),
                 "exact_re": float(exact[a, b, c, d].real), "exact_im": float(exact[a, b, c, d].imag),
                 "abs_error": float(diff[a, b, c, d])}
                for a, b, c, d in idx
            ]
            _write_csv(out, config, ["a", "b", "c", "d", "exact_re", "exact_im", "abs_error"], rows)
    err = rg.verify_rigged_design(family, t, D, gamma=gamma)
    ok &= _verdict(err, tol, f"moment vs alpha_{t} Pi_{t}")
    sys.exit(0 if ok else 1)


# ---------------------------------------------------------------- regularized

@main.group()
def regularized():
    """Soft-regularized Kerred designs."""


@regularized.command("check")
@click.option("--beta", required=True, type=float)
@click.option("--D", "D", default=60, show_default=True, type=click.IntRange(1))
@click.option("--tol", default=1e-8, show_default=True, type=float)
@click.option("--out", default=None, help="JSON summary path.")
def regularized_check(beta, D, tol, out):
    """Second moment of the Kerred design against the regularized projector."""
    design = reg.regularized_kerred_design(beta, D)
    err = reg.design_error(design, 2)
    weight = design.total_weight
    click.echo(f"beta={beta} D={D} total weight - 1 = {weight - 1:.3e}")
    ok = _verdict(err, tol, "second moment")
    if out:
        config = RunConfig("regularized check", D=D, tolerance=tol, params={"beta": beta})
        _write_json(out, {"config": config.as_dict(), "second_moment_error": err, "total_weight": weight,
                          "pass": ok})
    sys.exit(0 if ok else 1)


@regularized.command("frame-potential")
@click.option("--beta", required=True, type=float)
@click.option("--D", "D", default=40, show_default=True, type=click.IntRange(1))
@click.option("--t", "t", default=2, show_default=True, type=click.IntRange(1, 2))
@click.option("--tol", default=1e-6, show_default=True, type=float)
def regularized_frame_potential(beta, D, t, tol):
    """Frame potential of the Kerred design and its lower bound."""
    design = reg.regularized_kerred_design(beta, D)
    value = design.frame_potential(design.regularizer, t)
    bound = reg.frame_potential_bound(design.regularizer, t)
    click.echo(f"V = {value:.15g}")
    click.echo(f"bound = {bound:.15g}")
    ok = _verdict(abs(value - bound), tol, "|V - bound|")
    sys.exit(0 if ok else 1)


# ---------------------------------------------------------------- shadows

def load_state(path):
    """Density matrix from JSON.

    Accepted forms: {"kind": "coherent", "alpha": [re, im], "dim": D},
    {"kind": "pure", "amplitudes": [[re, im], ...]} and
    {"kind": "density", "re": [[...]], "im": [[...]]}.
    """
    data = _load_json(path)
    kind = data.get("kind")
    try:
        if kind == "coherent":
            re, im = data["alpha"] if isinstance(data["alpha"], list) else (data["alpha"], 0.0)
            psi = coherent_state(int(data["dim"]), complex(re, im))
            return np.outer(psi, psi.conj())
        if kind == "pure":
            raw = np.asarray(data["amplitudes"], dtype=float)
            psi = raw[:, 0] + 1j * raw[:, 1]
            psi = psi / np.linalg.norm(psi)
            return np.outer(psi, psi.conj())
        if kind == "density":
            return np.asarray(data["re"], dtype=float) + 1j * np.asarray(data.get("im", 0.0), dtype=float)
    except (KeyError, ValueError, IndexError) as exc:
        raise click.ClickException(f"{path}: malformed {kind} state ({exc})") from exc
    raise click.ClickException(f"{path}: unknown state kind {kind!r}")


def load_observables(path):
    data = _load_json(path)
    items = data["observables"] if isinstance(data, dict) else data
    try:
        return [sh.Observable.from_dict(item) for item in items]
    except (KeyError, sh.ShadowError) as exc:
        raise click.ClickException(f"{path}: {exc}") from exc


@main.group()
def shadows():
    """Classical shadows from the Fock plus Kerred-phase measurement."""


@shadows.command("example")
@click.option("--state-out", default="state.json", show_default=True)
@click.option("--observables-out", default="observables.json", show_default=True)
@click.option("--D", "D", default=20, show_default=True, type=int)
@click.option("--m", "m", default=20, show_default=True, type=int)
def shadows_example(state_out, observables_out, D, m):
    """Write the worked example: a truncated |alpha=1> state and m flip-pair observables."""
    _write_json(state_out, {"kind": "coherent", "alpha": [1.0, 0.0], "dim": D})
    _write_json(observables_out, {"observables": [o.to_dict() for o in sh.worked_example_observables(m)]})
    click.echo(f"wrote {state_out} and {observables_out}")


@shadows.command("run")
@click.option("--state", "state_path", required=True)
@click.option("--observables", "obs_path", required=True)
@click.option("--epsilon", default=0.1, show_default=True, type=float)
@click.option("--delta", default=0.05, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--k", "k", default=1, show_default=True, type=int, help="Median-of-means groups.")
@click.option("--grid", "n_grid", default=sh.DEFAULT_GRID, show_default=True, type=int)
@click.option("--out", default="-")
def shadows_run(state_path, obs_path, epsilon, delta, seed, k, n_grid, out):
    """Plan N by Hoeffding, sample, and estimate every observable."""
    rho = load_state(state_path)
    observables = load_observables(obs_path)
    log.info("seed %d", seed)
    try:
        plan, est, truth = sh.run_protocol(rho, observables, epsilon, delta, seed, k=k, n_grid=n_grid)
    except sh.ShadowError as exc:
        raise click.ClickException(str(exc)) from exc
    config = RunConfig("shadows run", D=rho.shape[0], seed=seed, tolerance=epsilon,
                       inputs={"state": state_path, "observables": obs_path},
                       params={"epsilon": epsilon, "delta": delta, "k": k, "grid": n_grid},
                       conventions={"sign": sh.DEFAULT_SIGN, "measure": "probability"})
    rows = [
        {"observable_id": j, "true_value": float(truth[j]), "estimate": float(est[j]),
         "abs_error": float(abs(est[j] - truth[j])), "N": plan.N, "K": plan.K, "seed": seed}
        for j in range(len(observables))
    ]
    _write_csv(out, config, ["observable_id", "true_value", "estimate", "abs_error", "N", "K", "seed"], rows)
    worst = max(r["abs_error"] for r in rows)
    click.echo(f"N={plan.N} K={plan.K} max |error| {worst:.4f}", err=True)


# ---------------------------------------------------------------- fidelity

CURVE_COLUMNS = [
    "kappa", "Fe_soft", "Fe_hard", "F1_soft", "F2_soft_halfbeta", "F12_hard", "F_coh",
    "Fe_soft_numeric", "Fe_hard_numeric", "F1_soft_numeric", "F2_soft_halfbeta_numeric",
    "F12_hard_numeric", "F_coh_numeric", "F1_soft_design", "F2_soft_halfbeta_design", "F12_hard_design",
    "soft_tail", "D", "coherent_D", "coherent_samples",
]


@main.group()
def fidelity():
    """Pure-loss fidelities."""


@fidelity.command("loss-curve")
@click.option("--nbar", default=4.0, show_default=True, type=float)
@click.option("--kappa-steps", default=21, show_default=True, type=click.IntRange(2))
@click.option("--D", "D", default=None, type=int, help="Truncation (default: thermal tail below 1e-12).")
@click.option("--samples", default=100_000, show_default=True, type=int, help="Coherent-state MC samples.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--no-design", is_flag=True, help="Skip the design-expectation columns.")
@click.option("--out", default="-")
@click.option("--svg", default=None, help="Also draw the two panels to this SVG file.")
def fidelity_loss_curve(nbar, kappa_steps, D, samples, seed, no_design, out, svg):
    """Closed forms with their numeric twins on a uniform kappa grid."""
    grid = np.linspace(0.0, 1.0, kappa_steps)
    reports = fid.loss_curve(nbar, grid, dim=D, samples=samples, seed=seed, design=not no_design)
    config = RunConfig("fidelity loss-curve", D=reports[0].dim, seed=seed,
                       params={"nbar": nbar, "kappa_steps": kappa_steps, "samples": samples,
                               "beta": fid.beta_for(nbar), "d": fid.hard_cutoff_for(nbar)})
    rows = [r.row() for r in reports]
    header = [c for c in CURVE_COLUMNS if c in rows[0]]
    _write_csv(out, config, header, rows)
    if svg:
        with open(svg, "w") as fh:
            fh.write(loss_svg(rows, nbar))


# ---------------------------------------------------------------- svg

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]


def _panel(rows, keys, x0, title):
    w, h, pad = 320, 240, 40
    parts = [f'<g transform="translate({x0},0)">',
             f'<rect x="{pad}" y="{pad}" width="{w}" height="{h}" fill="none" stroke="black"/>',
             f'<text x="{pad + w / 2}" y="{pad - 12}" text-anchor="middle" font-size="13">{title}</text>',
             f'<text x="{pad + w / 2}" y="{pad + h + 30}" text-anchor="middle" font-size="12">kappa</text>']
    for tick in (0.0, 0.5, 1.0):
        x = pad + tick * w
        y = pad + h - tick * h
        parts.append(f'<text x="{x}" y="{pad + h + 14}" text-anchor="middle" font-size="10">{tick:g}</text>')
        parts.append(f'<text x="{pad - 6}" y="{y + 3}" text-anchor="end" font-size="10">{tick:g}</text>')
    for j, key in enumerate(keys):
        pts = " ".join(f"{pad + r['kappa'] * w:.2f},{pad + h - r[key] * h:.2f}" for r in rows)
        color = _COLORS[j % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{pad + 8}" y="{pad + 16 + 14 * j}" font-size="11" fill="{color}">{key}</text>')
    parts.append("</g>")
    return "\n".join(parts)


def loss_svg(rows, nbar):
    """Two panels: reference-mode fidelities and average fidelities against kappa."""
    body = [
        _panel(rows, ["Fe_hard", "Fe_soft"], 0, f"(a) entanglement fidelity, nbar={nbar:g}"),
        _panel(rows, ["F12_hard", "F1_soft", "F2_soft_halfbeta", "F_coh"], 380, "(b) average fidelity"),
    ]
    return ('<svg xmlns="http://www.w3.org/2000/svg" width="760" height="330">\n'
            + "\n".join(body) + "\n</svg>\n")


if __name__ == "__main__":
    main()
