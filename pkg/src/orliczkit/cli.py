"""Batch experiment harness: scenario configs in, CSV tables and figures out.

Configs are TOML with flat typed sections; a file holds either one scenario
or a [[scenario]] batch.  Every scenario carries a seed, and a fixed seed
yields byte-identical CSV payloads (wall times live only in summary.json).
Scenarios are isolated: one failure never blocks the rest of a batch, and the
process exit code aggregates (0 pass, 1 assertion failures, 2 config errors).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from . import czop, elliptic, gridfn, oscillation, report, young
from .errors import ConfigError, OrliczkitError
from .gridfn import Grid, GridFunction

TASKS = ("certify-young", "norms", "maximal-bmo", "operator-norms", "elliptic-verify")


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunReport:
    scenario_id: str
    task: str
    wall_time: float
    assertions: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(a.passed for a in self.assertions)


# -- config loading ----------------------------------------------------------------


def load_config(path) -> list:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}")
    scenarios = data.get("scenario", [data]) if "scenario" in data else [data]
    out = []
    seen = set()
    for sc in scenarios:
        sid = sc.get("id")
        if not sid:
            raise ConfigError("scenario missing key 'id'")
        if sid in seen:
            raise ConfigError(f"duplicate scenario id {sid!r}")
        seen.add(sid)
        task = sc.get("task")
        if task not in TASKS:
            raise ConfigError(f"scenario {sid!r}: unknown task {task!r}; known: {TASKS}")
        if "seed" in sc and not isinstance(sc["seed"], int):
            raise ConfigError(f"scenario {sid!r}: seed must be an integer")
        out.append(sc)
    return out


def _grid_from(sc, key="grid", default_dim=2, default_n=64, topology="torus") -> Grid:
    block = sc.get(key, {})
    try:
        return Grid(
            dim=int(block.get("dim", default_dim)),
            n=int(block.get("n", default_n)),
            topology=block.get("topology", topology),
            side=float(block.get("side", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"[{key}]: {exc}")


def _young_list(sc):
    specs = sc.get("young")
    if not specs:
        raise ConfigError("missing [[young]] section")
    out = []
    for spec in specs:
        kind = spec.get("kind")
        try:
            phi = young.make_young(kind, p=spec.get("p"), scan=spec.get("scan"))
        except (ValueError, OrliczkitError) as exc:
            raise ConfigError(f"[[young]] {spec.get('label', kind)}: {exc}")
        label = spec.get("label")
        if label:
            phi.label = label
        out.append((phi, spec))
    return out


def _fields(sc, grid: Grid, seed: int):
    specs = sc.get("field")
    if not specs:
        raise ConfigError("missing [[field]] section")
    out = []
    for i, spec in enumerate(specs):
        gen = spec.get("generator")
        if gen not in gridfn.GENERATORS:
            raise ConfigError(
                f"[[field]] {i}: unknown generator {gen!r}; known: {sorted(gridfn.GENERATORS)}"
            )
        params = {k: v for k, v in spec.items() if k not in ("generator", "name")}
        for key in ("center", "lo", "hi", "freq"):
            if key in params:
                params[key] = tuple(params[key])
        if gen == "random_smooth":
            params.setdefault("seed", seed)
        try:
            f = gridfn.make_field(grid, gen, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[[field]] {spec.get('name', gen)}: {exc}")
        out.append((spec.get("name", f"{gen}{i}"), f))
    return out


# -- task pipelines ------------------------------------------------------------------


def _task_certify_young(sc, outdir, seed, plots):
    artifacts = []
    asserts = []
    rows = []
    curves = {}
    for phi, spec in _young_list(sc):
        cert = young.certify(phi)
        rows.append(cert.csv_row())
        t = phi.grid()
        curves[phi.label] = (t, phi(2.0 * t) / phi(t))
        for cond, value in (("delta2", cert.mu), ("nabla2", cert.ell)):
            expect = spec.get(f"expect_{cond}")
            if expect is not None:
                ok = (value is not None) == bool(expect)
                asserts.append(Assertion(
                    name=f"{phi.label}:{cond}",
                    passed=ok,
                    detail=f"expected {'present' if expect else 'absent'}, got {value}",
                ))
        agree_mu = (cert.mu is not None) == math.isfinite(cert.index_upper)
        agree_ell = (cert.ell is not None) == (cert.index_lower > 1.0)
        asserts.append(Assertion(f"{phi.label}:index-agreement", agree_mu and agree_ell))
    artifacts.append(report.write_csv(os.path.join(outdir, "certificates.csv"),
                                      young.GrowthCertificate.CSV_HEADER, rows))
    if plots:
        artifacts.append(report.fig_doubling_ratios(
            os.path.join(outdir, "certificates.png"), curves))
    return asserts, artifacts


def _task_norms(sc, outdir, seed, plots):
    grid = _grid_from(sc)
    fields = _fields(sc, grid, seed)
    youngs = _young_list(sc)
    order = int(sc.get("norms", {}).get("sobolev_order", 0))
    rows = []
    asserts = []
    labels, values = [], []
    for fname, f in fields:
        for phi, spec in youngs:
            mod = gridfn.modular(f, phi)
            lux = gridfn.luxemburg_norm(f, phi)
            sob = gridfn.sobolev_orlicz_norm(f, phi, order) if order else None
            rows.append((fname, phi.label, mod, lux, sob))
            labels.append(f"{fname}|{phi.label}")
            values.append(lux)
            if spec.get("kind") == "power":
                p = float(spec["p"])
                exact = (np.sum(f.magnitude() ** p) * grid.cell_measure) ** (1.0 / p)
                asserts.append(Assertion(
                    f"{fname}:{phi.label}:gauge-vs-Lp",
                    bool(abs(lux - exact) <= 1e-9 * max(exact, 1e-300)),
                    f"gauge {lux:.12g} vs direct {exact:.12g}",
                ))
    fname0, f0 = fields[0]
    phi0 = youngs[0][0]
    base = gridfn.luxemburg_norm(f0, phi0)
    scaled = gridfn.luxemburg_norm(f0.scale(3.0), phi0)
    asserts.append(Assertion(
        "gauge-homogeneity",
        bool(abs(scaled - 3.0 * base) <= 1e-9 * max(scaled, 1e-300)),
        f"3x field: {scaled:.12g} vs {3 * base:.12g}",
    ))
    artifacts = [report.write_csv(os.path.join(outdir, "norms.csv"),
                                  ("field", "phi", "modular", "luxemburg", "sobolev"), rows)]
    if plots:
        artifacts.append(report.fig_norm_bars(os.path.join(outdir, "norms.png"),
                                              labels, values, "Luxemburg norms"))
    return asserts, artifacts


def _task_maximal_bmo(sc, outdir, seed, plots):
    grid = _grid_from(sc)
    fields = _fields(sc, grid, seed)
    youngs = _young_list(sc)
    block = sc.get("oscillation", {})
    radii = block.get("radii_cells") or oscillation.geometric_radii_cells(grid)
    radii = sorted(set(int(k) for k in radii))
    R_grid = block.get("R_grid") or [k * grid.h for k in radii if k >= 2]
    p_list = [float(p) for p in block.get("p_list", (1.0, 2.0))]

    osc_rows, gamma_rows, jn_rows, max_rows = [], [], [], []
    gamma_curves = {}
    asserts = []
    for fname, f in fields:
        mf = oscillation.maximal_values(f, radii)
        asserts.append(Assertion(
            f"{fname}:pointwise-domination",
            bool(np.all(mf >= f.magnitude())),
        ))
        table = oscillation.mean_oscillation_table(f, radii)
        for radius, sup in table:
            osc_rows.append((fname, radius, sup))
        seminorm = max(v for _, v in table)
        sup_abs = float(np.max(f.magnitude()))
        asserts.append(Assertion(
            f"{fname}:seminorm-le-2sup",
            bool(seminorm <= 2.0 * sup_abs * (1.0 + 1e-12)),
            f"{seminorm:.6g} vs 2*{sup_abs:.6g}",
        ))
        gamma = oscillation.vmo_modulus(f, R_grid, radii)
        gamma_curves[fname] = gamma
        for R, val in gamma:
            gamma_rows.append((fname, R, val))
        vals = [v for _, v in gamma]
        asserts.append(Assertion(
            f"{fname}:gamma-monotone",
            all(x <= y + 1e-15 for x, y in zip(vals, vals[1:])),
        ))
        for p, ratio in oscillation.john_nirenberg_check(f, p_list, radii).items():
            jn_rows.append((fname, p, ratio))
        for phi, _ in youngs:
            bounds = oscillation.maximal_bounds_check(f, phi, p=2.0, radii_cells=radii)
            max_rows.append((fname, phi.label, bounds.weak11, bounds.strong_p,
                             bounds.weak_orlicz, bounds.strong_orlicz))
            jrep = oscillation.jensen_maximal_check(f, phi, radii)
            asserts.append(Assertion(
                f"{fname}:{phi.label}:maximal-jensen",
                jrep.violations == 0,
                f"min slack {jrep.min_slack:.3e}",
            ))
    artifacts = [
        report.write_csv(os.path.join(outdir, "oscillation.csv"),
                         ("field", "radius", "sup_mean_oscillation"), osc_rows),
        report.write_csv(os.path.join(outdir, "gamma.csv"),
                         ("field", "R", "gamma"), gamma_rows),
        report.write_csv(os.path.join(outdir, "john_nirenberg.csv"),
                         ("field", "p", "ratio"), jn_rows),
        report.write_csv(os.path.join(outdir, "maximal.csv"),
                         ("field", "phi", "weak11", "strong_L2", "weak_orlicz",
                          "strong_orlicz"), max_rows),
    ]
    if plots:
        artifacts.append(report.fig_gamma(os.path.join(outdir, "gamma.png"), gamma_curves))
    return asserts, artifacts


def _task_operator_norms(sc, outdir, seed, plots):
    kernels = sc.get("kernels")
    if not kernels:
        raise ConfigError("missing 'kernels' list")
    youngs = _young_list(sc)
    n_list = [int(n) for n in sc.get("n_list", [64])]
    asserts = []
    rows = []
    modular_rows = []
    series = {}
    reports_by_key = {}
    for kname in kernels:
        try:
            kern = czop.make_kernel(kname)
        except ValueError as exc:
            raise ConfigError(str(exc))
        for n in n_list:
            grid = Grid(dim=kern.dim, n=n)
            family = czop.test_family(grid, seed=seed)
            for phi, _ in youngs:
                cert = young.certify(phi)
                if not cert.doubly_certified:
                    raise ConfigError(f"{phi.label}: operator bounds need both growth conditions")
                rep = czop.empirical_orlicz_bound(kern, phi, family, cert=cert)
                reports_by_key[(kname, phi.label, n)] = rep
                series[f"{kname}|{phi.label}|N={n}"] = [r["ratio"] for r in rep.rows]
                for r in rep.rows:
                    for p, wk in r["weak"].items():
                        rows.append((kname, phi.label, r["id"], n, r["ratio"], p, wk))
                modular_rows.append((kname, phi.label, n, rep.modular_c, rep.theoretical_c,
                                     rep.sup_ratio, rep.sup_witness))
                asserts.append(Assertion(
                    f"{kname}:{phi.label}:N{n}:finite",
                    bool(np.isfinite(rep.sup_ratio) and np.isfinite(rep.modular_c)),
                ))
        for phi, _ in youngs:
            if len(n_list) >= 2:
                c_small = reports_by_key[(kname, phi.label, n_list[0])].modular_c
                c_big = reports_by_key[(kname, phi.label, n_list[-1])].modular_c
                drift = abs(c_big - c_small) / max(c_small, 1e-300)
                asserts.append(Assertion(
                    f"{kname}:{phi.label}:modular-drift",
                    bool(drift <= 0.25),
                    f"{c_small:.6g} -> {c_big:.6g}",
                ))
    com_rows = []
    com_block = sc.get("commutator")
    if com_block:
        kern = czop.make_kernel(com_block.get("kernel", kernels[0]))
        n = int(com_block.get("n", n_list[0]))
        grid = Grid(dim=kern.dim, n=n)
        family = czop.test_family(grid, seed=seed)[: int(com_block.get("family_size", 8))]
        eps_list = [float(e) for e in com_block.get("eps_list", (0.05, 0.1))]
        freq = tuple(com_block.get("freq", (1,) + (0,) * (kern.dim - 1)))
        for phi, _ in youngs:
            cert = young.certify(phi)
            sups = []
            for eps in eps_list:
                a = gridfn.gen_sin(grid, freq=freq, amplitude=eps)
                a_bmo = oscillation.bmo_seminorm(a, oscillation.geometric_radii_cells(grid))
                rep = czop.empirical_orlicz_bound(kern, phi, family, cert=cert,
                                                  a=a, a_bmo=a_bmo)
                sups.append(rep.sup_ratio)
                com_rows.append((kern.label, phi.label, eps, a_bmo, rep.sup_ratio,
                                 rep.commutator["normalized_sup"]))
            for e1, e2, s1, s2 in zip(eps_list, eps_list[1:], sups, sups[1:]):
                if abs(e2 / e1 - 2.0) < 1e-12 and s1 > 0:
                    asserts.append(Assertion(
                        f"commutator:{phi.label}:eps{e1:g}->{e2:g}",
                        bool(1.6 <= s2 / s1 <= 2.4),
                        f"factor {s2 / s1:.3f}",
                    ))
    artifacts = [
        report.write_csv(os.path.join(outdir, "operator_norms.csv"),
                         ("kernel", "phi", "function_id", "N", "ratio", "weak_p",
                          "weak_const"), rows),
        report.write_csv(os.path.join(outdir, "modular_constants.csv"),
                         ("kernel", "phi", "N", "modular_C", "theoretical_C",
                          "sup_ratio", "witness"), modular_rows),
    ]
    if com_rows:
        artifacts.append(report.write_csv(
            os.path.join(outdir, "commutator.csv"),
            ("kernel", "phi", "eps", "a_bmo", "sup_ratio", "normalized_sup"), com_rows))
    if plots and series:
        artifacts.append(report.fig_operator_ratios(
            os.path.join(outdir, "operator_norms.png"), series, "gauge-norm ratios"))
    return asserts, artifacts


def _system_from(sc, grid: Grid) -> elliptic.EllipticSystem:
    block = sc.get("system", {})
    family = block.get("family")
    if family not in elliptic.SYSTEM_FAMILIES:
        raise ConfigError(
            f"[system]: unknown family {family!r}; known: {sorted(elliptic.SYSTEM_FAMILIES)}"
        )
    params = {k: v for k, v in block.items() if k != "family"}
    if "diag" in params:
        params["diag"] = tuple(params["diag"])
    try:
        return elliptic.SYSTEM_FAMILIES[family](grid, **params)
    except TypeError as exc:
        raise ConfigError(f"[system] {family}: {exc}")


def _task_elliptic_verify(sc, outdir, seed, plots):
    gblock = sc.get("grid", {})
    dim = int(gblock.get("dim", 2))
    n_list = [int(n) for n in gblock.get("n_list", [64])]
    topology = gblock.get("topology", "rect")
    est_block = sc.get("estimate", {})
    r = float(est_block.get("r", 0.2))
    centers = [tuple(c) for c in est_block.get("centers", [[0.5] * dim])]
    thetas = tuple(float(t) for t in est_block.get("thetas", (0.25, 0.5, 0.75)))
    max_spread = float(est_block.get("max_spread", 2.0))
    manufactured = est_block.get("manufactured", "sin")
    with_gamma = bool(est_block.get("with_gamma", False))
    youngs = _young_list(sc)

    asserts = []
    est_rows = []
    series = {}
    order = None
    for n in n_list:
        grid = Grid(dim=dim, n=n, topology=topology)
        sys = _system_from(sc, grid)
        if manufactured == "sin":
            u = gridfn.gen_sin(grid, freq=(1,) * dim)
        elif manufactured == "harmonic_poly":
            mesh = grid.mesh()
            u = GridFunction(grid, mesh[0] ** 2 - mesh[1] ** 2)
        else:
            raise ConfigError(f"[estimate]: unknown manufactured field {manufactured!r}")
        order = sys.order
        for phi, _ in youngs:
            reps = elliptic.interior_estimate(sys, u, phi, r, centers, thetas,
                                              with_gamma=with_gamma)
            worst = max(reps, key=lambda rep: rep.c_emp)
            series.setdefault(phi.label, []).append((n, worst.c_emp))
            for rep in reps:
                est_rows.append(rep.csv_row(order))
    for phi_label, pairs in series.items():
        cs = [c for _, c in pairs]
        if len(cs) >= 2 and min(cs) > 0:
            asserts.append(Assertion(
                f"{phi_label}:constant-spread",
                bool(max(cs) <= max_spread * min(cs)),
                f"{min(cs):.6g} .. {max(cs):.6g}",
            ))
        asserts.append(Assertion(f"{phi_label}:constant-finite",
                                 bool(np.isfinite(max(cs)))))
    header = list(elliptic.EstimateReport.CSV_HEADER)
    header += [f"Theta_{s}" for s in range(order + 1)] + ["gamma_coeff"]
    artifacts = [report.write_csv(os.path.join(outdir, "estimates.csv"), header, est_rows)]

    cov_block = sc.get("covering")
    if cov_block:
        grid = Grid(dim=dim, n=n_list[-1], topology=topology)
        sys = _system_from(sc, grid)
        u = gridfn.gen_sin(grid, freq=(1,) * dim)
        box = (tuple(cov_block["lo"]), tuple(cov_block["hi"]))
        cov_rows = []
        for phi, _ in youngs:
            out = elliptic.covering_estimate(sys, u, phi, box,
                                             float(cov_block.get("r", r)))
            cov_rows.append((phi.label, n_list[-1], out["n_balls"], out["lhs"],
                             out["rhs"], out["c_emp"]))
            asserts.append(Assertion(
                f"{phi.label}:covering-finite",
                bool(np.isfinite(out["c_emp"]) and out["c_emp"] > 0),
                f"C = {out['c_emp']:.6g} over {out['n_balls']} balls",
            ))
        artifacts.append(report.write_csv(
            os.path.join(outdir, "covering.csv"),
            ("phi", "N", "n_balls", "lhs", "rhs", "C_emp"), cov_rows))

    rep_block = sc.get("representation")
    if rep_block and rep_block.get("enabled", True):
        alpha = tuple(int(a) for a in rep_block.get("alpha", (2,) + (0,) * (dim - 1)))
        radius = float(rep_block.get("support_radius", 0.2))
        rep_rows = []
        residuals = []
        for n in rep_block.get("n_list", n_list):
            grid = Grid(dim=dim, n=int(n), topology="torus")
            sys = _system_from(sc, grid)
            rho = grid.distance(tuple(0.5 for _ in range(dim)))
            v = GridFunction(grid, np.where(rho < radius, (1 - (rho / radius) ** 2) ** 6, 0.0))
            rep = elliptic.representation_residual(sys, v, alpha)
            rel = rep.residual_l2 / max(rep.lhs_l2, 1e-300)
            residuals.append((int(n), rel))
            rep_rows.append((int(n), str(alpha), rep.residual_l2, rep.lhs_l2, rel, rep.method))
        for (n1, r1), (n2, r2) in zip(residuals, residuals[1:]):
            emp_order = math.log(r1 / r2, n2 / n1) if r2 > 0 else math.inf
            asserts.append(Assertion(
                f"representation:order:{n1}->{n2}",
                bool(emp_order >= 0.9),
                f"order {emp_order:.3f}",
            ))
        artifacts.append(report.write_csv(
            os.path.join(outdir, "representation.csv"),
            ("N", "alpha", "residual_l2", "lhs_l2", "relative", "method"), rep_rows))
        if plots:
            artifacts.append(report.fig_residual_orders(
                os.path.join(outdir, "representation.png"), residuals,
                "representation residual"))
    if plots:
        artifacts.append(report.fig_estimate_constants(
            os.path.join(outdir, "estimates.png"), series, "interior estimate constants"))
    return asserts, artifacts


_PIPELINES = {
    "certify-young": _task_certify_young,
    "norms": _task_norms,
    "maximal-bmo": _task_maximal_bmo,
    "operator-norms": _task_operator_norms,
    "elliptic-verify": _task_elliptic_verify,
}


# -- execution --------------------------------------------------------------------------


def run_scenario(sc: dict, out_root: str, seed_override: Optional[int] = None,
                 plots: bool = True) -> RunReport:
    sid = sc["id"]
    root = out_root if out_root is not None else sc.get("output_dir", "out")
    outdir = os.path.join(root, sid)
    os.makedirs(outdir, exist_ok=True)
    seed = seed_override if seed_override is not None else int(sc.get("seed", 0))
    start = time.perf_counter()
    rep = RunReport(scenario_id=sid, task=sc["task"], wall_time=0.0)
    try:
        asserts, artifacts = _PIPELINES[sc["task"]](sc, outdir, seed, plots)
        rep.assertions = asserts
        rep.artifacts = artifacts
    except ConfigError:
        raise
    except OrliczkitError as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # isolation: a failing scenario never blocks the batch
        rep.error = f"{type(exc).__name__}: {exc}"
    rep.wall_time = time.perf_counter() - start
    summary = {
        "scenario": sid,
        "task": sc["task"],
        "seed": seed,
        "wall_time_s": rep.wall_time,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "error": rep.error,
        "assertions": [{"name": a.name, "passed": a.passed, "detail": a.detail}
                       for a in rep.assertions],
        "artifacts": rep.artifacts,
    }
    tmp = os.path.join(outdir, "summary.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(summary, fh, indent=2)
    os.replace(tmp, os.path.join(outdir, "summary.json"))
    return rep


def cmd_run(args) -> int:
    try:
        scenarios = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_root = args.out  # None keeps per-scenario output_dir (default "out")
    reports = []
    try:
        if args.threads > 1 and len(scenarios) > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                futures = [pool.submit(run_scenario, sc, out_root, args.seed,
                                       not args.no_plots)
                           for sc in scenarios]
                reports = [f.result() for f in futures]
        else:
            for sc in scenarios:
                reports.append(run_scenario(sc, out_root, args.seed, not args.no_plots))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    failed = 0
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(f"[{status}] {rep.scenario_id} ({rep.task}, {rep.wall_time:.2f}s)")
        if rep.error:
            print(f"    error: {rep.error}")
        for a in rep.assertions:
            mark = "ok" if a.passed else "FAILED"
            line = f"    {mark:>6}  {a.name}"
            if a.detail:
                line += f"  [{a.detail}]"
            print(line)
        if not rep.passed:
            failed += 1
    return 1 if failed else 0


def cmd_list(_args) -> int:
    print("Young-function families:")
    for name in sorted(young.YOUNG_KINDS):
        params = "p" if name in ("power", "power_log") else "-"
        print(f"  {name:<22} params: {params}, scan")
    print("kernels:")
    for name in czop.builtin_kernel_names():
        print(f"  {name}")
    print("field generators:")
    for name in sorted(gridfn.GENERATORS):
        print(f"  {name}")
    print("system families:")
    for name in sorted(elliptic.SYSTEM_FAMILIES):
        print(f"  {name}")
    print(f"tasks: {', '.join(TASKS)}")
    return 0


def cmd_validate(args) -> int:
    try:
        scenarios = load_config(args.config)
        for sc in scenarios:
            _validate_scenario(sc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.config}: {len(scenarios)} scenario(s) valid")
    return 0


def _validate_scenario(sc):
    """Parse-only pass: resolve every referenced name without running pipelines."""
    task = sc["task"]
    if task == "certify-young":
        _young_list(sc)
    elif task == "norms":
        grid = _grid_from(sc)
        _fields(sc, grid, 0)
        _young_list(sc)
    elif task == "maximal-bmo":
        grid = _grid_from(sc)
        _fields(sc, grid, 0)
        _young_list(sc)
    elif task == "operator-norms":
        if not sc.get("kernels"):
            raise ConfigError("missing 'kernels' list")
        for kname in sc["kernels"]:
            czop.make_kernel(kname)
        _young_list(sc)
    elif task == "elliptic-verify":
        gblock = sc.get("grid", {})
        dim = int(gblock.get("dim", 2))
        n0 = int(gblock.get("n_list", [64])[0])
        grid = Grid(dim=dim, n=n0, topology=gblock.get("topology", "rect"))
        _system_from(sc, grid)
        _young_list(sc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orliczkit",
        description="Scenario harness for Orlicz-space operator bounds and "
                    "elliptic estimate verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output root (default: out)")
    p_run.add_argument("--seed", type=int, default=None, help="override every scenario seed")
    p_run.add_argument("--threads", type=int, default=1, help="concurrent scenarios")
    p_run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list", help="print the builtin catalog")
    p_list.set_defaults(func=cmd_list)

    p_val = sub.add_parser("validate", help="parse a config without running it")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
