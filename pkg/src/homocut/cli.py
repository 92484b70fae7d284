"""Command-line entry point: solve / flow / verify.

Configs are JSON, validated against a schema; every tolerance has a
documented default and can be overridden.  Exit codes: 0 success,
1 error, 2 success with warnings (boundary adhesion or a non-mean-convex
boundary).  Identical config and seed give byte-identical reports.
"""

import argparse
import json
import math
import os
import sys

import numpy as np
import jsonschema

from . import geometries as geo
from . import graphflow as gf
from . import homology as hm
from . import leastgradient as lg
from . import report
from .mesh import load_mesh, load_off

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "geometry": {
            "type": "object",
            "properties": {
                "kind": {"enum": list(geo.GeometrySpec.KINDS)},
            },
            "required": ["kind"],
        },
        "mesh_path": {"type": "string"},
        "metric_path": {"type": "string"},
        "class_coefficients": {"type": "array",
                               "items": {"type": "number"}},
        "class_kind": {"enum": ["absolute", "relative"]},
        "cycle": {
            "type": "object",
            "properties": {
                "vertex_weights": {"type": "object"},
                "antipodal_pair": {"type": "number"},
            },
        },
        "norm": {"enum": ["riemannian", "l1"]},
        "schedule": {
            "oneOf": [
                {"type": "array",
                 "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                {"type": "object",
                 "properties": {
                     "p_end": {"type": "number"},
                     "eps_start": {"type": "number"},
                     "eps_end": {"type": "number"},
                     "stages": {"type": "integer", "minimum": 1},
                 }},
            ]
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "gap": {"type": "number"},
                "newton": {"type": "number"},
                "gamma": {"type": "number"},
                "adhesion": {"type": "number"},
            },
        },
        "packing": {
            "type": "object",
            "properties": {
                "schedule": {"type": "array"},
                "theta": {"type": "number"},
                "terminals": {"type": "array"},
            },
        },
        "seed": {"type": "integer"},
    },
    "additionalProperties": True,
}

DEFAULT_TOLERANCES = {
    "gap": 1e-2,       # relative duality gap accepted as converged
    "newton": 1e-9,    # stationarity residual per continuation stage
    "gamma": 1e-2,     # slack on the calibration sup norm
    "adhesion": 1e-2,  # boundary-layer mass fraction triggering a warning
}


class ConfigError(ValueError):
    pass


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}")
    return cfg


def build_schedule(spec):
    if spec is None:
        return lg.default_schedule()
    if isinstance(spec, list):
        sched = [(float(p), float(e)) for p, e in spec]
        ps = [p for p, _ in sched]
        if any(b > a + 1e-15 for a, b in zip(ps, ps[1:])):
            raise ConfigError("schedule must be non-increasing in p")
        if any(not (1.0 < p <= 2.0) for p in ps):
            raise ConfigError("schedule p values must lie in (1, 2]")
        return sched
    return lg.default_schedule(
        p_end=spec.get("p_end", 1.002),
        eps_start=spec.get("eps_start", 1e-1),
        eps_end=spec.get("eps_end", 1e-7),
        stages=spec.get("stages", 16),
    )


def assemble_problem(cfg):
    """Mesh + least-gradient problem + oracle metadata from a config."""
    norm = lg.NORMS[cfg.get("norm", "riemannian")]()
    coeffs = cfg.get("class_coefficients", [])
    oracle = None
    if "geometry" in cfg:
        gspec = geo.GeometrySpec(**cfg["geometry"])
        mesh = gspec.build()
        kind = gspec.kind
        p = gspec.params
        if kind == "flat_torus":
            if len(coeffs) != 2:
                raise ConfigError("flat torus needs two class coefficients")
            n = p.get("n", 8)
            ex, ey = geo.torus_cocycles(mesh, n)
            eta = coeffs[0] * ex + coeffs[1] * ey
            f, crossing = {}, None
            try:
                oracle = geo.oracle_values(gspec, tuple(coeffs))
            except KeyError:
                oracle = None
        elif kind in ("flat_cylinder", "hyperbolic_cylinder"):
            c = coeffs[0] if coeffs else 1.0
            n_x = p.get("n_x", 16 if kind == "hyperbolic_cylinder" else 8)
            n_t = p.get("n_t", 16 if kind == "hyperbolic_cylinder" else 8)
            wind, step = geo.cylinder_cocycles(mesh, n_x, n_t)
            if cfg.get("class_kind", "absolute") == "absolute":
                eta = c * step
            else:
                eta = c * wind
            weights = _cycle_weights(cfg)
            f, crossing = lg.boundary_data_from_cycle(mesh, weights, eta)
            try:
                oracle = geo.oracle_values(gspec, c)
            except KeyError:
                oracle = None
        else:  # flat_disk
            c = coeffs[0] if coeffs else 1.0
            eta = np.zeros(mesh.n_edges)
            weights = _cycle_weights(cfg)
            if cfg.get("cycle") and "antipodal_pair" in cfg["cycle"]:
                w = cfg["cycle"]["antipodal_pair"]
                pv, qv = geo.disk_boundary_antipodes(
                    mesh, p.get("n_r", 4), p.get("n_t", 16))
                weights = {pv: w, qv: -w}
            f, crossing = lg.boundary_data_from_cycle(mesh, weights, eta)
            if weights:
                try:
                    oracle = geo.oracle_values(gspec, c)
                except KeyError:
                    oracle = None
        problem = lg.LeastGradientProblem(
            mesh, eta=eta, boundary_values=f, norm=norm,
            crossing_cochain=crossing)
        return mesh, problem, oracle, gspec
    if "mesh_path" in cfg:
        path = cfg["mesh_path"]
        if path.endswith(".off"):
            mesh = load_off(path, cfg.get("metric_path"))
        else:
            mesh = load_mesh(path)
        kind = cfg.get("class_kind", "relative")
        basis = hm.homology_basis(mesh, mesh.dimension - 1, "R", kind=kind)
        if len(coeffs) != basis.betti:
            raise ConfigError(
                f"class needs {basis.betti} coefficients for this mesh")
        cls = basis.class_from_coefficients(coeffs)
        eta_map, _cert = hm.lefschetz_dual(mesh, cls)
        eta = np.zeros(mesh.n_edges)
        for eid, w in eta_map.items():
            eta[eid] = float(w)
        weights = _cycle_weights(cfg)
        f, crossing = lg.boundary_data_from_cycle(mesh, weights, eta) \
            if mesh.has_boundary() else ({}, None)
        problem = lg.LeastGradientProblem(
            mesh, eta=eta, boundary_values=f, norm=norm,
            alpha=cls, crossing_cochain=crossing)
        return mesh, problem, None, None
    raise ConfigError("config needs 'geometry' or 'mesh_path'")


def _cycle_weights(cfg):
    cyc = cfg.get("cycle") or {}
    weights = {}
    for k, v in (cyc.get("vertex_weights") or {}).items():
        weights[int(k)] = float(v)
    return weights


def cmd_solve(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    if args.tolerance is not None:
        tol["gap"] = args.tolerance
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    try:
        mesh, problem, oracle, gspec = assemble_problem(cfg)
        schedule = build_schedule(cfg.get("schedule"))
    except (ConfigError, lg.SolverError, hm.HomologyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    convexity = {"has_boundary": mesh.has_boundary()}
    warnings = []
    if mesh.has_boundary() and mesh.dimension >= 2:
        values, _, verdict = mesh.boundary_mean_curvature()
        convexity["strictly_mean_convex"] = bool(verdict)
        convexity["min_curvature"] = float(values.min()) if values.size else None
        convexity["max_curvature"] = float(values.max()) if values.size else None
        if not verdict:
            warnings.append(
                "boundary is not strictly mean convex: minimizers may "
                "adhere to the boundary")
    try:
        sol = lg.continuation(problem, schedule, tol=tol["newton"],
                              adhesion_threshold=tol["adhesion"])
    except lg.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    audit = lg.duality_gap(sol)
    cut = lg.extract_cut(sol)
    warnings.extend(sol.warnings)

    payload = {
        "config": cfg,
        "mass": sol.mass,
        "duality": audit,
        "gamma_extrema": {
            "sup": sol.gamma_sup,
            "min": float(problem.norm.dual_norm(sol.gamma).min()),
        },
        "cut": {
            "support_fraction": cut.support_fraction,
            "dual_mass_estimate": cut.dual_mass_estimate,
            "boundary_trace_error": cut.boundary_trace_error(),
        },
        "trace": sol.trace,
        "warnings": warnings,
        "notes": sol.notes,
        "mean_convexity": convexity,
        "converged": sol.converged,
    }
    if oracle is not None:
        payload["oracle"] = oracle
        payload["oracle_relative_error"] = (
            abs(sol.mass - oracle["min_mass"]) / oracle["min_mass"]
            if oracle["min_mass"] else None)
    report.write_json(os.path.join(outdir, "solution.json"), payload)
    report.write_trace_csv(os.path.join(outdir, "trace.csv"), sol.trace)
    report.write_cut_csv(os.path.join(outdir, "cut.csv"), cut)
    if args.plot:
        report.plot_trace(os.path.join(outdir, "trace.png"), sol.trace)
        report.plot_cut(os.path.join(outdir, "cut.png"), cut)
        profile = None
        if gspec is not None and gspec.kind == "hyperbolic_cylinder":
            profile = lambda x: 1.0 / math.cosh(x)
        report.plot_calibration(os.path.join(outdir, "calibration.png"),
                                sol, profile)
    ok = sol.converged and audit["relative_gap"] <= tol["gap"] \
        and audit["calibration_sup"] <= 1.0 + tol["gamma"]
    print(f"mass {sol.mass:.8g}  relative gap {audit['relative_gap']:.3e}  "
          f"converged {sol.converged}")
    for w in warnings:
        print(f"warning: {w}")
    if not ok:
        return 1
    return 2 if warnings else 0


def cmd_flow(args):
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    if args.network:
        try:
            net = gf.load_network(args.network)
        except (OSError, gf.FlowError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        value, flow = gf.max_flow(net)
        cut_value, cut = gf.min_cut(net)
        print(f"max flow = {value}")
        print(f"min cut = {cut_value}: {sorted(map(str, cut.edges))}")
        payload = {
            "max_flow": float(value),
            "min_cut": float(cut_value),
            "cut_edges": sorted(map(str, cut.edges)),
        }
        if args.oracle:
            try:
                bf = gf.brute_force_min_cut(net)
            except gf.FlowError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 1
            payload["brute_force"] = float(bf)
            match = (bf == value)
            payload["oracle_match"] = bool(match)
            print(f"brute force = {bf} ({'match' if match else 'MISMATCH'})")
            if not match:
                return 1
        report.write_json(os.path.join(outdir, "flow.json"), payload)
        return 0
    # packing-experiment mode
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    pack = cfg.get("packing") or {}
    gcfg = cfg.get("geometry") or {}
    kind = gcfg.get("kind")
    if kind == "flat_cylinder":
        sampler = geo.FlatCylinderSampler(gcfg.get("height", 1.0),
                                          gcfg.get("circumference", 1.0))
        continuum = gcfg.get("circumference", 1.0)
    elif kind == "hyperbolic_cylinder":
        sampler = geo.HyperbolicCylinderSampler(gcfg.get("x_min", -1.0),
                                                gcfg.get("x_max", 1.0))
        continuum = 2 * math.pi * math.cosh(
            min(max(0.0, gcfg.get("x_min", -1.0)), gcfg.get("x_max", 1.0)))
    else:
        print("error: packing mode needs a cylinder geometry", file=sys.stderr)
        return 1
    schedule = [(float(a), float(b)) for a, b in pack.get(
        "schedule", [[0.2, 0.05], [0.15, 0.03]])]
    rows = gf.convergence_experiment(
        sampler, continuum, schedule, theta=pack.get("theta", 0.25),
        seed=cfg.get("seed", 0))
    path = os.path.join(outdir, "experiment.csv")
    gf.write_experiment_csv(rows, path)
    if args.plot:
        report.plot_convergence(os.path.join(outdir, "convergence.png"),
                                rows, continuum)
    for row in rows:
        print(f"eps0={row['eps0']:g} eps1={row['eps1']:g} "
              f"cut={row['cut']:g} normalized={row['normalized_cut']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# verification suites


def _suite_homology_signs(seed):
    results = []
    disk = geo.flat_disk_mesh(3, 8)
    basis = hm.relative_homology_basis(disk, 1)
    results.append(("disk_relative_rank", basis.betti == 0,
                    f"betti {basis.betti}"))
    p, q = geo.disk_boundary_antipodes(disk, 3, 8)
    path = [p, 1 + 8, 1, 0, 5, 1 + 8 + 4, q]
    chain = {}
    for a, b in zip(path, path[1:]):
        v, w = sorted((a, b))
        ei = disk.simplex_index[1][(v, w)]
        chain[ei] = chain.get(ei, 0) + (1 if a == v else -1)
    _, bdry = hm.connecting_homomorphism(disk, chain, degree=1)
    expect = {disk.simplex_index[0][(q,)]: 1, disk.simplex_index[0][(p,)]: -1}
    got = {k: int(v) for k, v in bdry.items()}
    results.append(("disk_chain_boundary", got == expect, f"{got}"))

    cyl = geo.hyperbolic_cylinder_mesh(-1, 1, 4, 6)
    bc = hm.relative_homology_basis(cyl, 1)
    ok, rep = hm.verify_sign_diagram(cyl, bc.class_from_coefficients([1]))
    results.append(("cylinder_sign_diagram", ok, str(rep)))

    st = geo.solid_torus_mesh(5, 5)
    b2 = hm.relative_homology_basis(st, 2)
    ok3, rep3 = hm.verify_sign_diagram(st, b2.class_from_coefficients([1]))
    results.append(("solid_torus_sign_diagram", ok3, str(rep3)))

    t = geo.flat_torus_mesh(4)
    bt = hm.relative_homology_basis(t, 1)
    okt, rept = hm.verify_sign_diagram(t, bt.class_from_coefficients([1, 2]))
    results.append(("torus_vacuous", okt, str(rept)))
    return results


def _suite_duality(seed):
    results = []
    rng = np.random.default_rng(seed)
    # graph weak duality on random feasible flows and random cuts
    worst = 0.0
    for _ in range(40):
        net = gf.random_unit_network(int(rng.integers(4, 10)), rng)
        value, flow = gf.max_flow(net)
        others = sorted(net.vertices - {net.source, net.sink}, key=str)
        for _ in range(25):
            side = {net.source} | {v for v in others if rng.random() < 0.5}
            cut = gf.Cut(net, side)
            worst = max(worst, value - cut.value)
    results.append(("graph_weak_duality", worst <= 0, f"worst excess {worst}"))

    mesh = geo.flat_torus_mesh(8)
    ex, ey = geo.torus_cocycles(mesh, 8)
    problem = lg.LeastGradientProblem(mesh, eta=ex)
    sol = lg.continuation(problem)
    audit = lg.duality_gap(sol)
    results.append(("torus_gap", audit["relative_gap"] <= 1e-3,
                    f"relative gap {audit['relative_gap']:.2e}"))
    results.append(("calibration_sup", audit["calibration_sup"] <= 1.01,
                    f"sup {audit['calibration_sup']:.4f}"))
    # continuum weak duality: random competitor chains against gamma
    c_gamma = sol.gamma
    sup = sol.gamma_sup
    worst_c = 0.0
    for _ in range(200):
        u = rng.standard_normal(mesh.n_vertices)
        omega = problem.omega(u)
        comp = problem.cell_components(omega)
        pair = float(np.einsum("ti,ti->t", comp, c_gamma) @ problem.volumes)
        mass = problem.mass(omega)
        worst_c = max(worst_c, pair - mass * sup)
    results.append(("continuum_weak_duality", worst_c <= 1e-9,
                    f"worst excess {worst_c:.2e}"))
    return results


def _suite_oracles(seed):
    results = []
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(50):
        net = gf.random_unit_network(int(rng.integers(4, 11)), rng)
        if gf.max_flow(net)[0] != gf.brute_force_min_cut(net):
            mismatches += 1
    results.append(("flow_vs_brute_force", mismatches == 0,
                    f"{mismatches} mismatches"))
    mesh = geo.flat_torus_mesh(3)
    ex, ey = geo.torus_cocycles(mesh, 3)
    problem = lg.LeastGradientProblem(mesh, eta=ex)
    oracle = lg.exact_small_oracle(problem, max_iter=60000, restart_iter=40000,
                                   restarts=1)
    sol = lg.continuation(problem, lg.default_schedule(
        p_end=1.0005, eps_end=1e-9, stages=20))
    diff = abs(oracle["value"] - sol.mass)
    results.append(("small_oracle_vs_continuation", diff <= 1e-4,
                    f"difference {diff:.2e}"))
    return results


SUITES = {
    "homology-signs": _suite_homology_signs,
    "duality": _suite_duality,
    "oracles": _suite_oracles,
}


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; "
              f"available: {sorted(SUITES)}", file=sys.stderr)
        return 1
    results = SUITES[args.suite](args.seed if args.seed is not None else 0)
    xml = report.junit_xml(f"homocut-{args.suite}", results)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"verify_{args.suite}.xml")
    with open(path, "w") as fh:
        fh.write(xml)
    failures = [name for name, ok, _ in results if not ok]
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if not failures else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="homocut",
        description="homology-constrained minimal cuts, maximal flows and "
                    "the packing-graph experiment")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a least-gradient problem")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", default="out")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--tolerance", type=float, default=None,
                         help="override the relative duality-gap tolerance")
    p_solve.add_argument("--plot", dest="plot", action="store_true",
                         default=True)
    p_solve.add_argument("--no-plot", dest="plot", action="store_false")
    p_solve.set_defaults(func=cmd_solve)

    p_flow = sub.add_parser("flow", help="discrete max-flow / packing graphs")
    p_flow.add_argument("--network", default=None,
                        help="edge-list network file")
    p_flow.add_argument("--config", default=None,
                        help="packing experiment config")
    p_flow.add_argument("--out", default="out")
    p_flow.add_argument("--seed", type=int, default=None)
    p_flow.add_argument("--oracle", action="store_true",
                        help="cross-check with the brute-force cut")
    p_flow.add_argument("--plot", dest="plot", action="store_true",
                        default=True)
    p_flow.add_argument("--no-plot", dest="plot", action="store_false")
    p_flow.set_defaults(func=cmd_flow)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite")
    p_verify.add_argument("--out", default="out")
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    if args.command == "flow" and not (args.network or args.config):
        parser.error("flow needs --network or --config")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
