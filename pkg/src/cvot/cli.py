"""Command line interface: rate points, security regions, bound sweeps,
protocol sessions and reconciliation benches.

Report commands write delimited output plus rendered figures into a
directory, together with a manifest that pins the resolved parameters,
the seed and the SHA-256 of every artifact.  Numeric inputs default to
shot-noise units (vacuum variance 1), the convention of lab work;
``--units natural`` switches to the internal convention (vacuum 1/2).

Exit codes: 0 success, 2 invalid parameters, 3 infeasible operating
point or budget, 4 protocol abort / reconciliation failure.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, gaussmodel, plotting, protocol, rateengine, recon, uncertainty
from .core import (DecodeFailure, DiscretizationScheme, EpsilonBudget,
                   InfeasibleBudget, InfeasibleRate, InvalidParams,
                   MemoryAssumption, ProtocolAbort, SeededRng, SNU_QUAD_SCALE,
                   load_config, seed_from_env)

_FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    if isinstance(v, float):
        return _FLOAT_FMT % v
    return str(v)


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InvalidParams as ex:
            click.echo(f"error: {ex}", err=True)
            sys.exit(2)
        except (InfeasibleBudget, InfeasibleRate) as ex:
            click.echo(f"infeasible: {ex}", err=True)
            sys.exit(3)
        except (ProtocolAbort, DecodeFailure) as ex:
            click.echo(f"protocol failure: {ex}", err=True)
            sys.exit(4)
    return wrapper


def _apply_config(ctx: click.Context, kwargs: dict) -> dict:
    """Fill parameters from --config for options the user left at defaults."""
    path = kwargs.pop("config", None)
    if not path:
        return kwargs
    cfg = load_config(path)
    unknown = set(cfg) - set(kwargs)
    if unknown:
        raise InvalidParams([("InvalidConfig", f"unknown config keys: {sorted(unknown)}")])
    for key, value in cfg.items():
        src = ctx.get_parameter_source(key)
        if src is None or src.name == "DEFAULT":
            kwargs[key] = value
    return kwargs


def _scheme_and_sigma(units: str, sigma_a: float, delta: float, alpha_cut: float,
                      bits: int) -> tuple[DiscretizationScheme, float]:
    scheme = DiscretizationScheme(delta=float(delta), alpha_cut=float(alpha_cut),
                                  bits=int(bits))
    if units == "snu":
        return scheme.scaled(SNU_QUAD_SCALE), float(sigma_a) * SNU_QUAD_SCALE
    return scheme, float(sigma_a)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(out_dir: Path, command: str, seed: int, params: dict,
                    outputs: list[Path]) -> Path:
    digests = {}
    for p in outputs:
        digests[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    manifest = {
        "command": command,
        "argv": sys.argv,
        "version": __version__,
        "seed": seed,
        "params": params,
        "outputs": digests,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# shared option stacks -------------------------------------------------------

def _source_options(fn):
    for opt in reversed([
        click.option("--sigma-a", type=float, default=4.838, show_default=True,
                     help="Sender quadrature std at the operating point."),
        click.option("--rho", type=float, default=0.996, show_default=True,
                     help="Matched-basis Pearson correlation at the operating point."),
        click.option("--mu", type=float, default=0.0, show_default=True,
                     help="Receiver-arm loss."),
        click.option("--delta", type=float, default=0.1, show_default=True,
                     help="Bin width."),
        click.option("--alpha-cut", type=float, default=51.2, show_default=True,
                     help="Binning half-range (must equal 2^(bits-1) delta)."),
        click.option("--bits", type=int, default=10, show_default=True,
                     help="Bits per symbol."),
        click.option("--units", type=click.Choice(["snu", "natural"]), default="snu",
                     show_default=True, help="Unit convention of the numeric inputs."),
    ]):
        fn = opt(fn)
    return fn


def _budget_options(fn):
    for opt in reversed([
        click.option("--eps-a", type=float, default=1e-7, show_default=True,
                     help="Overall security parameter."),
        click.option("--nu", type=float, default=0.001, show_default=True,
                     help="Storage rate (channel uses per pulse)."),
        click.option("--eta", type=float, default=0.75, show_default=True,
                     help="Storage channel transmissivity."),
        click.option("--n-max", type=float, default=100.0, show_default=True,
                     help="Mean photon cap of the storage channel."),
        click.option("--xi", type=float, default=1.0, show_default=True,
                     help="Sifting efficiency factor."),
        click.option("--encoding", type=click.Choice(["arbitrary", "gaussian", "iid"]),
                     default="gaussian", show_default=True,
                     help="Adversary storage-encoding class."),
        click.option("--iid-block", type=int, default=10, show_default=True,
                     help="Block size for the iid storage bound."),
        click.option("--formula", type=click.Choice(["half_margin", "full_margin"]),
                     default="half_margin", show_default=True,
                     help="Whether the entropy margin is halved before the "
                          "storage subtraction."),
    ]):
        fn = opt(fn)
    return fn


def _common_options(fn):
    for opt in reversed([
        click.option("--seed", type=int, default=None,
                     help="Deterministic seed (CVOT_SEED env overrides the default)."),
        click.option("--config", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="key = value file supplying defaults."),
    ]):
        fn = opt(fn)
    return fn


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    return seed_from_env(202400)


def _memory(encoding: str, nu: float, eta: float, n_max: float, xi: float,
            iid_block: int) -> MemoryAssumption:
    return MemoryAssumption(encoding=encoding, nu=nu, eta=eta, n_max=n_max,
                            xi=xi, iid_block=int(iid_block))


@click.group()
@click.version_option(version=__version__, prog_name="cvot")
def main() -> None:
    """Continuous-variable randomized oblivious transfer toolkit."""


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

@main.command()
@_source_options
@_budget_options
@_common_options
@click.option("--n", type=float, default=2e5, show_default=True,
              help="Number of measured pulses entering the accounting.")
@click.option("--beta", type=float, default=None,
              help="Reconciliation efficiency for a synthetic disclosure (default 0.942).")
@click.option("--code-rate", type=float, default=None,
              help="Disclose 4 + 6 (1 - R) bits/symbol of an actual code instead of --beta.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Optional report directory (rate.json + manifest.json).")
@click.pass_context
@_cli_errors
def rate(ctx, **kw):
    """Secure length and rate at one operating point."""
    kw = _apply_config(ctx, kw)
    seed = _resolve_seed(kw["seed"])
    if kw["beta"] is not None and kw["code_rate"] is not None:
        raise InvalidParams([("InvalidConfig", "--beta and --code-rate are mutually exclusive")])

    scheme, sigma_nat = _scheme_and_sigma(kw["units"], kw["sigma_a"], kw["delta"],
                                          kw["alpha_cut"], kw["bits"])
    source = gaussmodel.SourceModel.tuned(sigma_nat, kw["rho"], 0.0, kw["mu"])
    stats = gaussmodel.channel_stats(source)
    if kw["code_rate"] is not None:
        r_ec = recon.leakage_per_symbol(kw["code_rate"])
    else:
        beta = kw["beta"] if kw["beta"] is not None else 0.942
        r_ec = rateengine.reconciliation_leakage(stats.sigma_a, stats.rho, scheme, beta)
    memory = _memory(kw["encoding"], kw["nu"], kw["eta"], kw["n_max"], kw["xi"],
                     kw["iid_block"])
    inputs = rateengine.RateInputs(
        n=kw["n"], scheme=scheme, sigma_a=stats.sigma_a, rho=stats.rho, r_ec=r_ec,
        budget=EpsilonBudget(eps_a=kw["eps_a"]), memory=memory, formula=kw["formula"],
        p_out=gaussmodel.p_outside_range(gaussmodel.epr_covariance(source), scheme))
    result = rateengine.secure_length(inputs)

    payload = dataclasses.asdict(result)
    payload["n"] = kw["n"]
    payload["mu"] = kw["mu"]
    click.echo(json.dumps(payload, indent=2))
    if kw["out"]:
        out = _out_dir(kw["out"])
        rate_path = out / "rate.json"
        rate_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        _write_manifest(out, "rate", seed, {k: kw[k] for k in sorted(kw) if k != "out"},
                        [rate_path])


# ---------------------------------------------------------------------------
# region
# ---------------------------------------------------------------------------

@main.command()
@_source_options
@_budget_options
@_common_options
@click.option("--n", type=float, default=2e5, show_default=True,
              help="Number of measured pulses entering the accounting.")
@click.option("--beta", type=float, default=0.942, show_default=True,
              help="Reconciliation efficiency of the synthetic disclosure.")
@click.option("--mu-max", type=float, default=0.5, show_default=True)
@click.option("--mu-steps", type=int, default=26, show_default=True)
@click.option("--nus", type=float, multiple=True, default=(0.001, 0.01),
              show_default=True, help="Storage rates to sweep (repeatable).")
@click.option("--thresholds/--no-thresholds", default=True, show_default=True,
              help="Also bisect the loss threshold per storage rate.")
@click.option("--out", type=click.Path(file_okay=False), default="cvot-region",
              show_default=True)
@click.pass_context
@_cli_errors
def region(ctx, **kw):
    """Sweep the OT rate over channel loss and storage rate."""
    kw = _apply_config(ctx, kw)
    seed = _resolve_seed(kw["seed"])
    scheme, sigma_nat = _scheme_and_sigma(kw["units"], kw["sigma_a"], kw["delta"],
                                          kw["alpha_cut"], kw["bits"])
    source = gaussmodel.SourceModel.tuned(sigma_nat, kw["rho"], 0.0, kw["mu"])
    memory = _memory(kw["encoding"], kw["nu"], kw["eta"], kw["n_max"], kw["xi"],
                     kw["iid_block"])
    budget = EpsilonBudget(eps_a=kw["eps_a"])
    mus = np.linspace(0.0, kw["mu_max"], kw["mu_steps"])
    nus = np.array(sorted(set(kw["nus"])))
    reg = rateengine.security_region(source, scheme, kw["n"], budget, memory,
                                     kw["beta"], mus, nus, formula=kw["formula"])

    out = _out_dir(kw["out"])
    rows = [[float(nu), float(mu), float(reg.rates[i, j]), int(reg.ells[i, j])]
            for i, nu in enumerate(nus) for j, mu in enumerate(mus)]
    region_csv = out / "region.csv"
    _write_csv(region_csv, ["nu", "mu", "rate", "ell"], rows)
    outputs = [region_csv]

    thresholds: dict[float, float] = {}
    if kw["thresholds"]:
        thr_rows = []
        for nu in nus:
            mem = dataclasses.replace(memory, nu=float(nu))
            try:
                thr = rateengine.loss_threshold(source, scheme, kw["n"], budget,
                                                mem, kw["beta"], formula=kw["formula"])
            except InfeasibleRate:
                thr = float("nan")
            thresholds[float(nu)] = thr
            thr_rows.append([float(nu), thr])
        thr_csv = out / "thresholds.csv"
        _write_csv(thr_csv, ["nu", "loss_threshold"], thr_rows)
        outputs.append(thr_csv)

    fig_path = out / "region.png"
    plotting.plot_region(reg, str(fig_path), thresholds or None)
    outputs.append(fig_path)
    manifest = _write_manifest(out, "region", seed,
                               {k: kw[k] for k in sorted(kw) if k != "out"}, outputs)
    click.echo(json.dumps({"out": str(out), "thresholds": thresholds,
                           "manifest": str(manifest)}, indent=2))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

@main.command()
@_common_options
@click.option("--delta-min", type=float, default=0.05, show_default=True,
              help="Smallest bin width (natural units).")
@click.option("--delta-max", type=float, default=1.0, show_default=True,
              help="Largest bin width (natural units).")
@click.option("--steps", type=int, default=12, show_default=True)
@click.option("--n", type=float, default=1e8, show_default=True)
@click.option("--eps-a", type=float, default=1e-7, show_default=True,
              help="Smoothing parameter handed to each bound as-is.")
@click.option("--m-e", type=int, default=10, show_default=True,
              help="Block size of the iid storage bound.")
@click.option("--sigma-a", type=float, default=3.4209826073805165, show_default=True,
              help="Sender std (natural units) for the iid bound's marginal.")
@click.option("--out", type=click.Path(file_okay=False), default="cvot-bounds",
              show_default=True)
@click.pass_context
@_cli_errors
def bounds(ctx, **kw):
    """Sweep all three min-entropy rate bounds over the bin width."""
    kw = _apply_config(ctx, kw)
    seed = _resolve_seed(kw["seed"])
    deltas = np.geomspace(kw["delta_min"], kw["delta_max"], kw["steps"])
    rows = []
    curves = {"arbitrary": [], "iid": [], "gaussian": []}
    for d in deltas:
        lam_m = uncertainty.lambda_majorization(float(d), kw["n"], kw["eps_a"]).rate
        lam_i = uncertainty.lambda_iid(float(d), kw["n"], kw["eps_a"], kw["m_e"],
                                       kw["sigma_a"])
        lam_g = uncertainty.lambda_gaussian(float(d), kw["n"], kw["eps_a"]).rate
        curves["arbitrary"].append(lam_m)
        curves["iid"].append(lam_i)
        curves["gaussian"].append(lam_g)
        rows.append([float(d), lam_m, lam_i, lam_g])

    out = _out_dir(kw["out"])
    csv_path = out / "bounds.csv"
    _write_csv(csv_path, ["delta", "lambda_arbitrary", "lambda_iid", "lambda_gaussian"],
               rows)
    fig_path = out / "bounds.png"
    plotting.plot_bounds(deltas, {k: np.array(v) for k, v in curves.items()},
                         str(fig_path))
    manifest = _write_manifest(out, "bounds", seed,
                               {k: kw[k] for k in sorted(kw) if k != "out"},
                               [csv_path, fig_path])
    click.echo(json.dumps({"out": str(out), "manifest": str(manifest)}, indent=2))


# ---------------------------------------------------------------------------
# protocol
# ---------------------------------------------------------------------------

@main.command(name="protocol")
@_source_options
@_budget_options
@_common_options
@click.option("--runs", type=int, default=1, show_default=True)
@click.option("--transport", type=click.Choice(["queue", "tcp"]), default="queue",
              show_default=True)
@click.option("--t", "choice", type=click.Choice(["0", "1", "random"]),
              default="random", show_default=True, help="Receiver choice bit.")
@click.option("--n-pulses", type=int, default=20000, show_default=True)
@click.option("--n-symbols", type=int, default=9600, show_default=True)
@click.option("--code-rate", type=float, default=0.94, show_default=True)
@click.option("--wait", type=float, default=0.0, show_default=True,
              help="Storage waiting time in seconds.")
@click.option("--out", type=click.Path(file_okay=False), default="cvot-protocol",
              show_default=True)
@click.pass_context
@_cli_errors
def protocol_cmd(ctx, **kw):
    """Run complete randomized-OT sessions and report the outcomes."""
    kw = _apply_config(ctx, kw)
    seed = _resolve_seed(kw["seed"])
    scheme, sigma_nat = _scheme_and_sigma(kw["units"], kw["sigma_a"], kw["delta"],
                                          kw["alpha_cut"], kw["bits"])
    source = gaussmodel.SourceModel.tuned(sigma_nat, kw["rho"], 0.0, kw["mu"])
    memory = _memory(kw["encoding"], kw["nu"], kw["eta"], kw["n_max"], kw["xi"],
                     kw["iid_block"])
    root = SeededRng(seed)
    params = protocol.SessionParams(
        n_pulses=kw["n_pulses"], n_symbols=kw["n_symbols"], scheme=scheme,
        source=source, budget=EpsilonBudget(eps_a=kw["eps_a"]), memory=memory,
        code_rate=kw["code_rate"], code_seed=seed ^ 0xC0DE,
        records_seed=0, wait_seconds=kw["wait"], formula=kw["formula"])

    rows, outcomes = [], []
    transcript_rows: list[list] = []
    any_bad = False
    for r in range(kw["runs"]):
        t = int(kw["choice"]) if kw["choice"] in ("0", "1") else \
            int(root.child(1000 + r).generator().integers(0, 2))
        run_params = dataclasses.replace(
            params, records_seed=int(root.child(r).generator().integers(0, 2 ** 63)))
        t0 = time.monotonic()
        if kw["transport"] == "tcp":
            alice, bob, _ = protocol.run_rot_tcp(run_params, session_seed=seed + r, t=t)
        elif r == 0:
            # record the first queue run's traffic for the transcript
            ta, tb = protocol.queue_pair()
            rec_ta = protocol.RecordingTransport(ta)
            th, box = protocol._in_thread(protocol.run_alice, rec_ta, run_params,
                                          SeededRng(seed + r, stream=1))
            bob = protocol.run_bob(tb, run_params, t)
            th.join(timeout=120.0)
            if "error" in box:
                raise box["error"]
            alice = box["result"]
            transcript_rows = [[i, d, tag, nbytes, digest]
                               for i, (d, tag, nbytes, digest) in enumerate(rec_ta.log)]
        else:
            alice, bob = protocol.run_rot(run_params, session_seed=seed + r, t=t)
        elapsed = time.monotonic() - t0
        s_alice = alice.s0 if t == 0 else alice.s1
        match = (alice.phase == "done" and bob.phase == "done"
                 and np.array_equal(s_alice, bob.s_t))
        if not match:
            any_bad = True
        outcomes.append((t, match))
        rows.append([r, t, alice.phase, bob.phase,
                     alice.abort_reason or bob.abort_reason, alice.ell,
                     int(bob.decode_ok), bob.decode_iters, int(match), elapsed])

    out = _out_dir(kw["out"])
    runs_csv = out / "runs.csv"
    _write_csv(runs_csv, ["run", "t", "sender_phase", "receiver_phase", "abort",
                          "ell", "decode_ok", "decode_iters", "s_match", "elapsed_s"],
               rows)
    outputs = [runs_csv]
    if transcript_rows:
        tr_csv = out / "transcript.csv"
        _write_csv(tr_csv, ["frame", "direction", "tag", "payload_bytes", "sha256"],
                   transcript_rows)
        outputs.append(tr_csv)
    fig_path = out / "runs.png"
    plotting.plot_run_outcomes(outcomes, str(fig_path))
    outputs.append(fig_path)
    manifest = _write_manifest(out, "protocol", seed,
                               {k: kw[k] for k in sorted(kw) if k != "out"}, outputs)
    summary = {"out": str(out), "runs": kw["runs"],
               "matched": sum(m for _, m in outcomes), "manifest": str(manifest)}
    click.echo(json.dumps(summary, indent=2))
    if any_bad:
        sys.exit(4)


# ---------------------------------------------------------------------------
# recon-bench
# ---------------------------------------------------------------------------

@main.command(name="recon-bench")
@_source_options
@_common_options
@click.option("--frames", type=int, default=100, show_default=True)
@click.option("--n", "n_symbols", type=int, default=10000, show_default=True,
              help="Symbols per frame.")
@click.option("--code-rate", type=float, default=0.94, show_default=True)
@click.option("--max-iter", type=int, default=100, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="cvot-recon",
              show_default=True)
@click.pass_context
@_cli_errors
def recon_bench(ctx, **kw):
    """Measure the reconciliation frame error rate at an operating point."""
    kw = _apply_config(ctx, kw)
    seed = _resolve_seed(kw["seed"])
    scheme, sigma_nat = _scheme_and_sigma(kw["units"], kw["sigma_a"], kw["delta"],
                                          kw["alpha_cut"], kw["bits"])
    source = gaussmodel.SourceModel.tuned(sigma_nat, kw["rho"], 0.0, kw["mu"])
    stats = gaussmodel.channel_stats(source)
    n = kw["n_symbols"]
    code = recon.build_code(n, kw["code_rate"], seed ^ 0xC0DE)

    rows, iters = [], []
    n_failed = 0
    for f in range(kw["frames"]):
        rec = gaussmodel.sample_records(source, 2 * n + max(2000, n // 4),
                                        SeededRng(seed, stream=10_000 + f))
        rec = rec[rec["basis_a"] == rec["basis_b"]]
        if rec.shape[0] < n:
            raise InfeasibleRate("not enough matched records for a frame")
        rec = rec[:n]
        z = gaussmodel.discretize(rec["value_a"], scheme)
        low, high = recon.split_planes(z)
        priors = recon.channel_priors(rec["value_b"], low, stats, scheme)
        try:
            hat, it = recon.decode(code, recon.syndrome(code, high), priors,
                                   max_iter=kw["max_iter"])
            converged = bool(np.array_equal(hat, high))
            if converged:
                iters.append(it)
            errors = int((hat != high).sum())
        except DecodeFailure:
            converged, it, errors = False, kw["max_iter"], -1
        if not converged:
            n_failed += 1
        rows.append([f, int(converged), it, errors])

    out = _out_dir(kw["out"])
    csv_path = out / "bench.csv"
    _write_csv(csv_path, ["frame", "converged", "iters", "symbol_errors"], rows)
    fig_path = out / "bench.png"
    plotting.plot_decode_iters(iters, n_failed, str(fig_path))
    manifest = _write_manifest(out, "recon-bench", seed,
                               {k: kw[k] for k in sorted(kw) if k != "out"},
                               [csv_path, fig_path])
    fer = n_failed / kw["frames"]
    click.echo(json.dumps({"out": str(out), "frames": kw["frames"],
                           "failed": n_failed, "fer": fer,
                           "leakage_per_symbol": recon.leakage_per_symbol(kw["code_rate"]),
                           "manifest": str(manifest)}, indent=2))


if __name__ == "__main__":
    main()
