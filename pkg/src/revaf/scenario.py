"""Scenario files and the property runners behind the command line.

A scenario binds one model to named (or inline) functions and a list of
property checks.  Each check draws its own master seed from the scenario
seed and its property name, so results do not depend on the order in
which properties are listed, and path batches are aggregated in fixed
chunks so worker counts cannot change the output bytes.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import yaml

from . import catalog, circle
from .chain import ModelError, ParseError, ChainModel, default_horizon, revuz_limit_check
from .functionals import dyadic_times, fukushima, levy_system_check
from .integrals import (
    associativity_check,
    ito_residual,
    lambda_trajectory,
    quad_variation,
    riemann_deviation_profile,
    stieltjes_consistency,
)
from .nakao import characterization_check, lambda_gamma_agreement, solve_gamma
from .paths import evaluate
from .reversal import LambdaAF, as_jump_matrix, dual_af, parity_check
from .rng import derive_master
from .simulate import sample_batch, sample_stationary

CHAIN_PROPERTIES = (
    "fukushima",
    "revuz",
    "levy",
    "lambda-keystone",
    "dual-af",
    "parity",
    "gamma-solve",
    "characterization",
    "lambda-gamma",
    "riemann",
    "quadvar",
    "associativity",
    "stieltjes",
    "ito",
)
CIRCLE_PROPERTIES = ("diffusion-rates",)
ALL_PROPERTIES = CHAIN_PROPERTIES + CIRCLE_PROPERTIES

_CHUNK = 64

DEFAULT_N_GRID = (16, 32, 64, 128, 256, 512, 1024)


class Scenario:
    """Parsed scenario file plus resolved model and functions."""

    def __init__(self, raw, name=None):
        if not isinstance(raw, dict):
            raise ParseError("scenario must be a mapping")
        self.name = str(raw.get("name", name or "scenario"))
        if "model" not in raw:
            raise ParseError("scenario needs a model")
        ref = raw["model"]
        self.is_circle = isinstance(ref, str) and ref == "circle-bm"
        if self.is_circle:
            self.model = None
        elif isinstance(ref, str):
            try:
                self.model = catalog.model_by_name(ref)
            except KeyError as e:
                raise ParseError(str(e))
        elif isinstance(ref, dict):
            self.model = ChainModel.from_dict(ref, name=self.name)
        else:
            raise ParseError("model must be a catalog name or a mapping")

        props = raw.get("properties", [])
        if not isinstance(props, (list, tuple)):
            raise ParseError("properties must be a list")
        self.properties = [str(p) for p in props]
        allowed = CIRCLE_PROPERTIES if self.is_circle else CHAIN_PROPERTIES
        for p in self.properties:
            if p not in ALL_PROPERTIES:
                raise ParseError("unknown property %r" % (p,))
            if p not in allowed:
                raise ParseError(
                    "property %r does not apply to this model kind" % (p,)
                )

        self.seed = int(raw.get("seed", 0))
        self.paths = int(raw.get("paths", 500))
        if self.paths <= 0:
            raise ParseError("paths must be positive")
        self.t = float(raw.get("t", 1.0))
        self.times = tuple(float(x) for x in raw.get("times", ())) or None
        self.n_grid = tuple(int(x) for x in raw.get("n_grid", DEFAULT_N_GRID))
        self.grid_times = int(raw.get("grid_times", 64))
        self.h = float(raw.get("h", 2e-3))
        if self.is_circle:
            self.horizon = float(raw.get("horizon", self.t))
        else:
            self.horizon = float(raw.get("horizon", default_horizon(self.model)))
        if self.t > self.horizon:
            raise ParseError("t exceeds the path horizon")
        self.workers = int(raw.get("workers", 1))

        fns = raw.get("functions", {})
        if not isinstance(fns, dict):
            raise ParseError("functions must be a mapping")
        if self.is_circle:
            self.u_circle = catalog.circle_function(str(fns.get("u", "sin1")))
            self.map_circle = catalog.circle_map(str(fns.get("Phi", "square")))
        else:
            self.u = self._chain_fn(fns.get("u", "indicator-last"))
            self.f = self._chain_fn(fns.get("f", "affine"))
            self.g = self._chain_fn(fns.get("g", "cosine"))
            phi = fns.get("phi", "first-edge")
            if isinstance(phi, str):
                try:
                    self.phi = catalog.chain_jump_function(self.model, phi)
                except KeyError as e:
                    raise ParseError(str(e))
            else:
                self.phi = as_jump_matrix(self.model, phi)
            spec = fns.get("Phi", {"name": "square", "dim": 1})
            if isinstance(spec, str):
                spec = {"name": spec, "dim": 1}
            if not isinstance(spec, dict) or "name" not in spec:
                raise ParseError("Phi must be a name or {name, dim}")
            try:
                self.Phi = catalog.smooth_map(str(spec["name"]), int(spec.get("dim", 1)))
            except KeyError as e:
                raise ParseError(str(e))

    def _chain_fn(self, ref):
        if isinstance(ref, str):
            try:
                return catalog.chain_function(self.model, ref)
            except KeyError as e:
                raise ParseError(str(e))
        try:
            return self.model.function(ref)
        except (TypeError, ValueError) as e:
            raise ParseError("bad function value: %s" % (e,))


def load_scenario(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as e:
        raise ParseError("cannot read scenario: %s" % (e,))
    except yaml.YAMLError as e:
        raise ParseError("bad scenario syntax: %s" % (e,))
    return Scenario(raw)


def _map_chunks(worker, n_items, workers=1, chunk=_CHUNK):
    """Apply worker(lo, hi) over fixed chunks; reduce in chunk order.

    worker returns (max, sum, count).  The chunk layout is independent
    of the worker count, so the reduction is bit-stable under threading.
    """
    tasks = [(lo, min(lo + chunk, n_items)) for lo in range(0, n_items, chunk)]
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda ab: worker(*ab), tasks))
    else:
        parts = [worker(lo, hi) for lo, hi in tasks]
    worst = 0.0
    total = 0.0
    count = 0
    for pm, ps, pc in parts:
        worst = max(worst, pm)
        total += ps
        count += pc
    return worst, (total / count if count else 0.0), count


def _stats_row(name, n, paths, worst, mean, ok):
    return {
        "property": name,
        "n": int(n),
        "paths": int(paths),
        "max_residual": float(worst),
        "mean_residual": float(mean),
        "pass": bool(ok),
    }


def _chunk_paths(scn, master, lo, hi):
    return [
        sample_stationary(scn.model, scn.horizon, seed=(master, i))
        for i in range(lo, hi)
    ]


def _run_fukushima(scn):
    model = scn.model
    u = scn.u
    M, N = fukushima(model, u)
    ts = dyadic_times(scn.horizon, scn.grid_times)
    upad = np.concatenate([u, [0.0]])
    master = derive_master(scn.seed, "fukushima")

    def worker(lo, hi):
        worst = 0.0
        total = 0.0
        count = 0
        for p in _chunk_paths(scn, master, lo, hi):
            mv = M.eval_grid(p, ts)
            nv = N.eval_grid(p, ts)
            base = u[p.x0]
            for j, t in enumerate(ts):
                xt = evaluate(p, t)
                lhs = (upad[xt] if xt >= 0 else 0.0) - base
                r = abs(lhs - mv[j] - nv[j])
                worst = max(worst, r)
                total += r
                count += 1
        return worst, total, count

    worst, mean, count = _map_chunks(worker, scn.paths, scn.workers)
    return _stats_row("fukushima", scn.grid_times, scn.paths, worst, mean, worst <= 1e-12)


def _run_lambda_keystone(scn):
    model = scn.model
    M, N = fukushima(model, scn.u)
    L = LambdaAF(model, M)
    ts = dyadic_times(scn.horizon, scn.grid_times)
    master = derive_master(scn.seed, "lambda-keystone")

    def worker(lo, hi):
        worst = 0.0
        total = 0.0
        count = 0
        for p in _chunk_paths(scn, master, lo, hi):
            lv = L.eval_grid(p, ts)
            nv = N.eval_grid(p, ts)
            for j, t in enumerate(ts):
                want = L.eval_held(p, t) if t >= p.zeta else lv[j]
                r = abs(want - nv[j])
                worst = max(worst, r)
                total += r
                count += 1
        return worst, total, count

    worst, mean, count = _map_chunks(worker, scn.paths, scn.workers)
    return _stats_row(
        "lambda-keystone", scn.grid_times, scn.paths, worst, mean, worst <= 1e-12
    )


def _run_dual_af(scn):
    model = scn.model
    M, N = fukushima(model, scn.u)
    D = dual_af(M, model=model)
    ts = dyadic_times(scn.horizon, scn.grid_times)
    master = derive_master(scn.seed, "dual-af")

    def worker(lo, hi):
        worst = 0.0
        total = 0.0
        count = 0
        for p in _chunk_paths(scn, master, lo, hi):
            live = ts[ts < p.zeta]
            if not len(live):
                continue
            mv = M.eval_grid(p, live)
            nv = N.eval_grid(p, live)
            for j, t in enumerate(live):
                r = abs(D.eval(p, t) + mv[j] + 2.0 * nv[j])
                worst = max(worst, r)
                total += r
                count += 1
        return worst, total, count

    worst, mean, count = _map_chunks(worker, scn.paths, scn.workers)
    return _stats_row("dual-af", scn.grid_times, scn.paths, worst, mean, worst <= 1e-12)


def _run_parity(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    L = LambdaAF(model, M)
    rep = parity_check(
        model,
        L,
        scn.t,
        scn.paths,
        master=derive_master(scn.seed, "parity"),
        horizon=scn.horizon,
    )
    ok = rep["verdict"] == "even" and rep["even_residual"] <= 1e-9
    return _stats_row(
        "parity", rep["paths_used"], scn.paths, rep["even_residual"],
        rep["even_residual"], ok,
    )


def _run_levy(scn):
    model = scn.model
    rep = levy_system_check(
        model,
        scn.phi,
        model.states[0],
        scn.t,
        scn.paths,
        master=derive_master(scn.seed, "levy"),
    )
    z = abs(rep["z"])
    return _stats_row("levy", 1, scn.paths, z, z, rep["ok"])


def _run_revuz(scn):
    ts = scn.times or (2e-3, 1e-3, 5e-4)
    a = scn.f
    if np.any(a < 0):
        raise ParseError("revuz needs a nonnegative density for f")
    rep = revuz_limit_check(scn.model, a, scn.g, ts=ts)
    decreasing = all(
        rep.residuals[i] > rep.residuals[i + 1] or rep.residuals[i] <= 1e-13
        for i in range(len(rep.residuals) - 1)
    )
    ok = decreasing and rep.extrapolated_residual <= 1e-8
    return _stats_row(
        "revuz", len(ts), 0, rep.extrapolated_residual,
        float(np.mean(rep.residuals)), ok,
    )


def _run_gamma_solve(scn):
    _, resid = solve_gamma(scn.model, scn.phi)
    return _stats_row(
        "gamma-solve", len(scn.model.states), 0, resid, resid, resid <= 1e-10
    )


def _run_characterization(scn):
    ts = scn.times or (1e-1, 1e-2, 1e-3)
    rep = characterization_check(scn.model, scn.phi, scn.g, ts=ts)
    rates_ok = all(r is None or 1.5 <= r <= 2.5 for r in rep["rates"])
    ok = rates_ok and rep["extrapolated_residual"] <= 1e-6
    return _stats_row(
        "characterization", len(ts), 0, rep["extrapolated_residual"],
        float(np.mean(rep["residuals"])), ok,
    )


def _run_lambda_gamma(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    paths = sample_batch(
        model, scn.paths, scn.horizon, derive_master(scn.seed, "lambda-gamma")
    )
    rep = lambda_gamma_agreement(model, M, paths, k=scn.grid_times)
    ok = rep["max_residual"] <= 1e-9
    return _stats_row(
        "lambda-gamma", rep["points"], scn.paths, rep["max_residual"],
        rep["mean_residual"], ok,
    )


def _run_riemann(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    master = derive_master(scn.seed, "riemann")
    n_paths = min(scn.paths, 200)
    sums = {v: np.zeros(len(scn.n_grid)) for v in ("forward", "backward", "stratonovich")}
    worst_at_max = 0.0
    gap_at_max = 0.0
    for i in range(n_paths):
        p = sample_stationary(model, scn.horizon, seed=(master, i))
        devs = riemann_deviation_profile(model, scn.f, M, p, scn.t, scn.n_grid)
        for v in sums:
            sums[v] += np.asarray(devs[v])
            worst_at_max = max(worst_at_max, devs[v][-1])
        gap_at_max = max(gap_at_max, abs(devs["forward"][-1] - devs["backward"][-1]))
    ok = worst_at_max <= 1e-2 and gap_at_max <= 2e-2
    means = {v: sums[v] / n_paths for v in sums}
    floor = 1e-12
    for mv in means.values():
        for i in range(len(scn.n_grid) - 1):
            if mv[i] <= floor or mv[i + 1] <= floor:
                continue
            if not 1.5 <= mv[i] / mv[i + 1] <= 2.6:
                ok = False
    mean_dev = float(np.mean([means[v][-1] for v in means]))
    return _stats_row(
        "riemann", scn.n_grid[-1], n_paths, worst_at_max, mean_dev, ok
    )


def _run_quadvar(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    master = derive_master(scn.seed, "quadvar")
    n_paths = min(scn.paths, 300)
    good = 0
    used = 0
    worst_abs = 0.0
    total_abs = 0.0
    doublings = len(scn.n_grid) - 1
    for i in range(n_paths):
        p = sample_stationary(model, scn.horizon, seed=(master, i))
        qv = [
            quad_variation(lambda_trajectory(model, M, p, scn.t, n))
            for n in scn.n_grid
        ]
        worst_abs = max(worst_abs, qv[-1])
        total_abs += qv[-1]
        used += 1
        if qv[0] <= 0.0 or qv[-1] <= 0.0:
            good += 1  # flat trajectory: vanishing is vacuous
            continue
        # per-doubling halving rate over the whole dyadic range; single
        # ratios at small n carry O(1/n) event-cell corrections
        rate = (qv[0] / qv[-1]) ** (1.0 / doublings)
        if 1.8 <= rate <= 2.2:
            good += 1
    frac = good / used if used else 1.0
    ok = frac >= 0.95 and worst_abs <= 1e-2 * scn.t ** 2
    return _stats_row(
        "quadvar", scn.n_grid[-1], used, worst_abs,
        total_abs / used if used else 0.0, ok,
    )


def _run_associativity(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    paths = sample_batch(
        model, min(scn.paths, 300), scn.horizon,
        derive_master(scn.seed, "associativity"),
    )
    rep = associativity_check(model, scn.f, scn.g, M, paths, k=scn.grid_times)
    ok = rep["max_residual"] <= 1e-9
    return _stats_row(
        "associativity", rep["points"], len(paths), rep["max_residual"],
        rep["mean_residual"], ok,
    )


def _run_stieltjes(scn):
    model = scn.model
    M, _ = fukushima(model, scn.u)
    paths = sample_batch(
        model, min(scn.paths, 300), scn.horizon,
        derive_master(scn.seed, "stieltjes"),
    )
    rep = stieltjes_consistency(model, scn.f, M, paths, k=scn.grid_times)
    ok = rep["max_residual"] <= 1e-10
    return _stats_row(
        "stieltjes", rep["points"], len(paths), rep["max_residual"],
        rep["mean_residual"], ok,
    )


def _run_ito(scn):
    model = scn.model
    Phi = scn.Phi
    pool = [scn.u, scn.f, scn.g]
    us = pool[: Phi.dim]
    if len(us) < Phi.dim:
        raise ParseError("Phi dimension exceeds available functions")
    Phi.validate()
    ts = dyadic_times(scn.horizon, min(scn.grid_times, 16))
    master = derive_master(scn.seed, "ito")
    n_paths = min(scn.paths, 300)

    def worker(lo, hi):
        worst = 0.0
        total = 0.0
        count = 0
        for p in _chunk_paths(scn, master, lo, hi):
            for t in ts:
                r = abs(ito_residual(model, Phi, us, p, t)["residual"])
                worst = max(worst, r)
                total += r
                count += 1
        return worst, total, count

    worst, mean, count = _map_chunks(worker, n_paths, scn.workers)
    return _stats_row("ito", count, n_paths, worst, mean, worst <= 1e-10)


def _run_diffusion_rates(scn):
    u = scn.u_circle
    phi, dphi, ddphi = scn.map_circle
    hs = (scn.h, scn.h / 4.0)
    seed = derive_master(scn.seed, "diffusion-rates")
    n = scn.paths
    lam = [circle.lambda_defect_rms(u, h, scn.t, n, master=seed) for h in hs]
    ito = [
        circle.ito_residual_rms(phi, dphi, ddphi, u, h, scn.t, n, master=seed + 1)
        for h in hs
    ]
    var = circle.variance_check(scn.h, scn.t, max(n, 2000), master=seed + 2)
    ratios = [lam[0] / lam[1], ito[0] / ito[1]]
    ok = all(1.6 <= r <= 2.6 for r in ratios) and var["ok"]
    worst = max(abs(r - 2.0) for r in ratios)
    return _stats_row(
        "diffusion-rates", int(round(scn.t / scn.h)), n, worst,
        float(np.mean([abs(r - 2.0) for r in ratios])), ok,
    )


_RUNNERS = {
    "fukushima": _run_fukushima,
    "revuz": _run_revuz,
    "levy": _run_levy,
    "lambda-keystone": _run_lambda_keystone,
    "dual-af": _run_dual_af,
    "parity": _run_parity,
    "gamma-solve": _run_gamma_solve,
    "characterization": _run_characterization,
    "lambda-gamma": _run_lambda_gamma,
    "riemann": _run_riemann,
    "quadvar": _run_quadvar,
    "associativity": _run_associativity,
    "stieltjes": _run_stieltjes,
    "ito": _run_ito,
    "diffusion-rates": _run_diffusion_rates,
}


def run_properties(scn):
    """Execute every property listed in the scenario, in listed order."""
    rows = []
    for prop in scn.properties:
        row = _RUNNERS[prop](scn)
        row["scenario"] = scn.name
        rows.append(row)
    return rows


CSV_COLUMNS = ("scenario", "property", "n", "paths", "max_residual", "mean_residual", "pass")


def render_csv(rows):
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            v = row[col]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_json(scenario_name, seed, rows):
    doc = {
        "scenario": scenario_name,
        "seed": int(seed),
        "rows": [
            {col: row[col] for col in CSV_COLUMNS if col != "scenario"}
            for row in rows
        ],
        "pass": all(row["pass"] for row in rows),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_reports(scn, rows, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "report.csv")
    json_path = os.path.join(out_dir, "report.json")
    with open(csv_path, "w") as fh:
        fh.write(render_csv(rows))
    with open(json_path, "w") as fh:
        fh.write(render_json(scn.name, scn.seed, rows))
    return csv_path, json_path
