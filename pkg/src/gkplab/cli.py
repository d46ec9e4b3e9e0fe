"""Command-line experiment runner.

Every subcommand resolves its configuration (flags over an optional flat
key=value config file), runs deterministically from an explicit seed, and
embeds the resolved configuration in a manifest inside each output file.
Figures are rendered with matplotlib to SVG next to the delimited output.
"""

from __future__ import annotations

import csv
import json
import sys

import click
import numpy as np

from . import __version__
from .gkp_channels import (
    click_coefficients,
    heterodyne_shell_probs,
    parity_fidelity_bound,
)
from .lattice import named_code
from .logical_shadows import (
    ShadowRecord,
    estimate_logical_observable,
    run_shadow_protocol,
)
from .phase_space import make_coherent, parse_state
from .random_lattice import cv_shadow_run, mvt_check
from .symplectic import (
    ModSymplecticMatrix,
    compile_symplectic,
    multiply_sequence,
)
from .twirl import RandomWalkTwirl, nu_generators

_PAULI_CLASSES = {"I": (0, 0), "Z": (0, 1), "X": (1, 0), "Y": (1, 1)}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(ctx: click.Context, config_path: str | None) -> dict:
    """Merge flag values over config-file values over defaults."""
    cfg = _load_config(config_path)
    resolved = {}
    for name, value in ctx.params.items():
        if name == "config":
            continue
        source = ctx.get_parameter_source(name)
        if (
            source == click.core.ParameterSource.DEFAULT
            and name in cfg
        ):
            cast = type(value) if value is not None else str
            value = cast(cfg[name]) if cast is not bool else cfg[name] == "true"
        resolved[name] = value
    return resolved


def _manifest(command: str, config: dict, tolerances: dict | None = None) -> dict:
    cfg = {
        k: (v.tolist() if isinstance(v, np.ndarray) else v)
        for k, v in config.items()
        if k not in ("out", "out_prefix")  # artifact paths, not parameters
    }
    return {
        "version": __version__,
        "command": command,
        "config": cfg,
        "tolerances": tolerances or {},
    }


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@click.group()
def main() -> None:
    """gkplab experiment runner."""


@main.command("channel-coeffs")
@click.option("--code", "code_name", default="hexagonal", show_default=True)
@click.option(
    "--povm",
    type=click.Choice(["heterodyne", "click", "parity"]),
    default="click",
    show_default=True,
)
@click.option("--samples", default=1000000, show_default=True)
@click.option("--sigma", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--config", default=None)
@click.pass_context
def channel_coeffs(ctx, code_name, povm, samples, sigma, seed, out, config):
    """Depolarizing coefficients of a twirled measurement back-end."""
    cfg = _resolve(ctx, config)
    code = named_code(cfg["code_name"])
    povm = cfg["povm"]
    if povm == "click":
        coeffs = click_coefficients(code)
        body = {
            "alpha": coeffs.alpha,
            "beta": coeffs.beta,
            "quadrature_error": coeffs.error_bars,
            **coeffs.details,
        }
    elif povm == "heterodyne":
        rng = np.random.default_rng(cfg["seed"])
        res = heterodyne_shell_probs(code, cfg["samples"], rng)
        body = {
            "p0": res.p0,
            "p1": res.p1,
            "alpha": res.alpha,
            "stderr_p0": res.stderr_p0,
            "stderr_alpha": res.stderr_alpha,
        }
    else:
        bound = parity_fidelity_bound(code, cfg["sigma"])
        body = {
            "fidelity_bound": bound.fidelity_bound,
            "p_bound": bound.p_bound,
        }
    _write_json(
        cfg["out"],
        {"manifest": _manifest("channel-coeffs", cfg), "result": body},
    )


@main.command("shadow-run")
@click.option("--state", "state_spec", default="grid:hexagonal,delta=0.2")
@click.option("--code", "code_name", default="hexagonal", show_default=True)
@click.option(
    "--povm",
    type=click.Choice(["heterodyne"]),
    default="heterodyne",
    show_default=True,
)
@click.option("--n-total", default=10000, show_default=True)
@click.option("--twirl-steps", default=3, show_default=True)
@click.option("--epsilon", default=0.1, show_default=True)
@click.option("--delta", default=0.05, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, required=False)
@click.option("--config", default=None)
@click.pass_context
def shadow_run(
    ctx, state_spec, code_name, povm, n_total, twirl_steps, epsilon, delta,
    seed, out, config,
):
    """Run the heterodyne shadow protocol; emit JSON-lines records."""
    cfg = _resolve(ctx, config)
    code = named_code(cfg["code_name"])
    state = parse_state(cfg["state_spec"])
    rng = np.random.default_rng(cfg["seed"])
    twirl = (
        RandomWalkTwirl(code.dual, cfg["twirl_steps"])
        if cfg["twirl_steps"] > 0
        else None
    )
    records = run_shadow_protocol(
        state, code, cfg["povm"], cfg["n_total"], twirl, rng
    )
    lines = [json.dumps({"manifest": _manifest("shadow-run", cfg)},
                        sort_keys=True)]
    lines += [json.dumps(r.to_json(), sort_keys=True) for r in records]
    text = "\n".join(lines) + "\n"
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command("shadow-estimate")
@click.option("--records", "records_path", required=True)
@click.option("--observable", default="Z", show_default=True)
@click.option("--code", "code_name", default="hexagonal", show_default=True)
@click.option("--alpha", default=0.32, show_default=True)
@click.option("--beta", default=0.0, show_default=True)
@click.option("--epsilon", default=0.1, show_default=True)
@click.option("--delta", default=0.05, show_default=True)
@click.option("--out", default=None)
@click.option("--config", default=None)
@click.pass_context
def shadow_estimate(
    ctx, records_path, observable, code_name, alpha, beta, epsilon, delta,
    out, config,
):
    """Median-of-means logical observable estimate from stored records."""
    from .gkp_channels import DepolarizingCoefficients

    cfg = _resolve(ctx, config)
    code = named_code(cfg["code_name"])
    records = []
    with open(cfg["records_path"]) as fh:
        for line in fh:
            obj = json.loads(line)
            if "manifest" in obj:
                continue
            records.append(ShadowRecord.from_json(obj))
    letter = cfg["observable"].upper()
    if letter not in _PAULI_CLASSES:
        raise click.BadParameter(f"unknown observable {letter!r}")
    classes = [(0, 0), (0, 1), (1, 0), (1, 1)]
    obs_vec = np.array(
        [1.0 if c == _PAULI_CLASSES[letter] else 0.0 for c in classes]
    )
    coeffs = DepolarizingCoefficients(
        cfg["alpha"], cfg["beta"], "heterodyne", 0.0
    )
    report = estimate_logical_observable(
        records, obs_vec, coeffs, code, cfg["epsilon"], cfg["delta"]
    )
    _write_json(
        cfg["out"],
        {
            "manifest": _manifest("shadow-estimate", cfg),
            "result": {
                "value": report.value,
                "K": report.K,
                "N": report.N,
                "per_batch_means": list(report.per_batch_means),
            },
        },
    )


@main.command("cv-shadow")
@click.option("--state", "state_spec", default="coherent:0.3,-0.2")
@click.option("--observable", default="coherent:0.1,0.1", show_default=True)
@click.option("--sigma", default=1.0, show_default=True)
@click.option("--eps", default=0.1, show_default=True)
@click.option("--delta", default=0.05, show_default=True)
@click.option(
    "--mode",
    type=click.Choice(["oracle", "parity"]),
    default="oracle",
    show_default=True,
)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--config", default=None)
@click.pass_context
def cv_shadow(ctx, state_spec, observable, sigma, eps, delta, mode, seed, out,
              config):
    """Random-lattice CV shadow estimate of Tr[rho G] plus parity offset."""
    cfg = _resolve(ctx, config)
    state = parse_state(cfg["state_spec"])
    if not cfg["observable"].startswith("coherent:"):
        raise click.BadParameter("observable must be coherent:<q>,<p>")
    vals = [float(v) for v in cfg["observable"].split(":", 1)[1].split(",")]
    G = make_coherent(np.array(vals))
    rng = np.random.default_rng(cfg["seed"])
    res = cv_shadow_run(
        state, [G], cfg["sigma"], cfg["eps"], cfg["delta"], rng,
        mode=cfg["mode"],
    )[0]
    _write_json(
        cfg["out"],
        {
            "manifest": _manifest("cv-shadow", cfg),
            "result": {
                "value": res.report.value,
                "parity_offset": res.parity_offset,
                "trace_estimate": res.report.value - res.parity_offset,
                "K": res.report.K,
                "B": res.report.N,
                "second_moment_raw": res.second_moment_raw,
                "per_batch_means": list(res.report.per_batch_means),
            },
        },
    )


@main.command("lattice-mvt")
@click.option("--f", "f_spec", default="ball:1", show_default=True)
@click.option("--samples", default=100000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
@click.option("--config", default=None)
@click.pass_context
def lattice_mvt(ctx, f_spec, samples, seed, out, config):
    """Siegel mean value Monte Carlo check for a ball indicator."""
    cfg = _resolve(ctx, config)
    spec = cfg["f_spec"]
    if not spec.startswith("ball:"):
        raise click.BadParameter("only ball:R test functions are supported")
    radius = float(spec.split(":", 1)[1])

    def f(pts):
        return (
            np.einsum("ij,ij->i", pts, pts) <= radius**2 + 1e-12
        ).astype(float)

    rng = np.random.default_rng(cfg["seed"])
    res = mvt_check(
        f, radius, cfg["samples"], rng,
        integral_f=float(np.pi * radius**2),
    )
    if abs(res.z_score) > 5.0:
        click.echo(
            f"mean value check did not converge: z = {res.z_score:.2f}",
            err=True,
        )
        sys.exit(3)
    _write_json(
        cfg["out"],
        {
            "manifest": _manifest(
                "lattice-mvt", cfg, {"z_score_limit": 5.0}
            ),
            "result": {
                "mc_mean": res.mc_mean,
                "target": res.target,
                "z_score": res.z_score,
                "stderr": res.stderr,
            },
        },
    )


@main.command("compile-symplectic")
@click.option("--n", default=1, show_default=True)
@click.option("--d", default=2, show_default=True)
@click.option("--matrix", required=True, help="row-major comma-separated")
@click.option("--out", default=None)
@click.option("--config", default=None)
@click.pass_context
def compile_symplectic_cmd(ctx, n, d, matrix, out, config):
    """Decompose a mod-d symplectic matrix into elementary generators."""
    cfg = _resolve(ctx, config)
    n, d = cfg["n"], cfg["d"]
    entries = [int(v) for v in cfg["matrix"].split(",")]
    if len(entries) != (2 * n) ** 2:
        raise click.BadParameter(
            f"matrix needs {(2 * n) ** 2} entries for n = {n}"
        )
    U = ModSymplecticMatrix(n, d, np.array(entries).reshape(2 * n, 2 * n))
    seq = compile_symplectic(U)
    product = multiply_sequence(seq, n, d)
    if not np.array_equal(product.U, U.U):
        click.echo("compilation round-trip failed", err=True)
        sys.exit(3)
    _write_json(
        cfg["out"],
        {
            "manifest": _manifest("compile-symplectic", cfg),
            "result": {
                "gates": [g.to_json() for g in seq],
                "length": len(seq),
                "round_trip_ok": True,
            },
        },
    )


@main.command("twirl-viz")
@click.option("--m", default=3, show_default=True)
@click.option("--extent", default=2.0, show_default=True)
@click.option("--grid", "grid_n", default=121, show_default=True)
@click.option("--out-prefix", default="twirl_nu", show_default=True)
@click.option("--config", default=None)
@click.pass_context
def twirl_viz(ctx, m, extent, grid_n, out_prefix, config):
    """Heatmaps of the generator twirl characteristic function nu."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = _resolve(ctx, config)
    extent, grid_n = cfg["extent"], cfg["grid_n"]
    axis = np.linspace(-extent, extent, grid_n)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    csv_rows = [("code", "q", "p", "nu")]
    for ax, name in zip(axes, ("square", "hexagonal")):
        code = named_code(name)
        twirl = RandomWalkTwirl(code.dual, cfg["m"])
        vals = np.array(
            [[nu_generators(twirl, np.array([q, p])) for q in axis]
             for p in axis]
        )
        for i, p in enumerate(axis):
            for j, q in enumerate(axis):
                csv_rows.append((name, f"{q:.6f}", f"{p:.6f}",
                                 f"{vals[i, j]:.8f}"))
        im = ax.imshow(
            vals,
            origin="lower",
            extent=(-extent, extent, -extent, extent),
            cmap="viridis",
            vmin=0.0,
            vmax=1.0,
        )
        ax.set_title(f"$\\nu$ ({name})")
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    prefix = cfg["out_prefix"]
    fig.savefig(f"{prefix}.svg", metadata={"Date": None})
    plt.close(fig)
    with open(f"{prefix}.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(csv_rows)
    _write_json(
        f"{prefix}.json",
        {
            "manifest": _manifest("twirl-viz", cfg),
            "result": {
                "figure": f"{prefix}.svg",
                "table": f"{prefix}.csv",
            },
        },
    )


def run(argv: list[str]) -> int:
    """Programmatic entry point returning the process exit code."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except RuntimeError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except SystemExit as exc:  # raised by sys.exit(3) paths
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
