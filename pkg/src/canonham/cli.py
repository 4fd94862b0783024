"""``canon``: batch front end for canonical decompositions.

    canon run problem.json [--set key=value]... [--out DIR] [--seed N]
    canon verify problem.json
    canon haar-check --d 2 --samples 100000 --seed 0

Exit codes: 0 success, 2 invalid input, 3 numerical failure (singular
channel, non-HPTA generator), 4 a result failed its certification tolerance.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .canonical import (
    avg_inner_product,
    avg_inner_product_mc,
    avg_norm,
    canonical_hamiltonian,
    canonical_rates,
    canonicalize,
    gauge_shift,
    markovianity_check,
    minimality_certificate,
    projection_equivalence,
    random_hpta,
)
from .dynamics import canonical_trajectory, extract_generator, integrate_master_equation, reduced_channel, trace_distance
from .errors import DimensionError, NotDensityMatrixError, NotHermitianError, NotHPTAError, SingularChannelError
from .haar import (
    HaarSampler,
    fourth_moment_contract,
    fourth_moment_contract_permutation,
    mc_average,
    second_moment,
)
from .io import (
    DEFAULT_TOLERANCES,
    ProblemError,
    build_problem,
    decode_matrix,
    dump_result,
    encode_float,
    encode_matrix,
    load_problem,
    sha256_hex,
)
from .operators import density_matrix
from .perturbation import canonical_h2, closed_form_L2, perturbative_hamiltonian, recursive_generator
from .superop import from_hamiltonian, from_lindblad, require_hpta

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_CERTIFICATION = 0, 2, 3, 4


def _max_abs(a):
    return float(np.max(np.abs(a), initial=0.0))


def _rel(diff, ref):
    return _max_abs(diff) / max(1.0, _max_abs(ref))


def _cert(name, residual, tol, passed=None, **extra):
    residual = float(residual)
    ok = residual <= tol if passed is None else bool(passed)
    return {"name": name, "residual": encode_float(residual), "tol": float(tol), "passed": ok, **extra}


def _generator(doc):
    """The HPTA generator a task acts on, plus its declared presentation if any."""
    kind, obj, presentation = build_problem(doc)
    if kind == "generator":
        return obj, presentation
    task = doc["task"]
    if "t" not in task:
        raise ProblemError(f"task {task['name']} on a bipartite problem needs task.t")
    gen, _ = extract_generator(obj, float(task["t"]), doc["tolerances"]["cond_threshold"])
    return gen, None


def _hpta_block(s, tol):
    report = require_hpta(s, tol)
    return {
        "hermiticity_residual": report.hermiticity_residual,
        "trace_residual": report.trace_residual,
        "tol": tol,
    }


def task_canonicalize(doc, out):
    tols = doc["tolerances"]
    s, _ = _generator(doc)
    outputs = {"hpta": _hpta_block(s, tols["hpta"])}
    dec = canonicalize(s, tols["rank"], jumps=doc["task"].get("jumps", "minimal"), tol=tols["hpta"])
    dis = dec.dissipator()
    outputs["canonical_hamiltonian"] = {"value": encode_matrix(dec.hamiltonian), "tol": tols["hpta"]}
    outputs["rates"] = {"value": [float(g) for g in dec.rates], "tol": tols["rank"]}
    outputs["jumps"] = {"value": [encode_matrix(l) for l in dec.jumps], "tol": tols["rank"]}
    outputs["jump_method"] = dec.method
    outputs["norms"] = {
        "generator_avg": avg_norm(s),
        "hamiltonian_avg": avg_norm(from_hamiltonian(dec.hamiltonian)),
        "dissipator_avg": avg_norm(dis),
        "tol": tols["hpta"],
    }
    outputs["markovian"] = {"value": markovianity_check(s, tols["markov"]), "tol": tols["markov"]}
    certs = [_cert("reassembly", _rel(dec.reassemble().rep - s.rep, s.rep), tols["reassembly"])]
    return outputs, certs


def _grid(task):
    if "times" in task:
        return np.asarray(task["times"], float)
    try:
        return np.linspace(float(task["t_start"]), float(task["t_stop"]), int(task["num"]))
    except KeyError as exc:
        raise ProblemError("task needs 'times' or 't_start', 't_stop', 'num'") from exc


def _state(task, d):
    if "rho_A0" in task:
        return density_matrix(decode_matrix(task["rho_A0"], "task.rho_A0"))
    rho = np.zeros((d, d), complex)
    rho[0, 0] = 1.0
    return rho


def _write_trajectory_csv(path, traj, d):
    header = ["t", "valid", "cond"]
    header += [f"H_{i}{j}_{part}" for i in range(d) for j in range(d) for part in ("re", "im")]
    header += [f"gamma_{j}" for j in range(1, d * d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, ok, cond, gen, dec in zip(traj.times, traj.valid, traj.condition_numbers, traj.generators, traj.decompositions):
            row = [repr(float(t)), int(ok), repr(float(cond))]
            if ok:
                row += [repr(float(x)) for z in dec.hamiltonian.reshape(-1) for x in (z.real, z.imag)]
                row += [repr(float(g)) for g in canonical_rates(gen)]
            else:
                row += ["nan"] * (2 * d * d + d * d - 1)
            w.writerow(row)


def _master_equation_check(system, traj, rho0, tols, step):
    """Integrate along the leading grid segment where ``N_t`` is well conditioned."""
    limit = tols["master_equation_cond"]
    cond = tols["cond_threshold"]
    rho, t_prev, worst, last = rho0, 0.0, 0.0, None
    for t, c in zip(traj.times, traj.condition_numbers):
        if not c <= limit:
            break
        if t > t_prev:
            rho = integrate_master_equation(lambda s: extract_generator(system, s, cond)[0], rho, t, step, t_prev)
        worst = max(worst, trace_distance(rho, reduced_channel(system, t)(rho0)))
        t_prev, last = t, float(t)
    return worst, last


def task_trajectory(doc, out):
    tols = doc["tolerances"]
    kind, system, _ = build_problem(doc)
    if kind != "bipartite":
        raise ProblemError("trajectory task needs a bipartite problem")
    task = doc["task"]
    traj = canonical_trajectory(system, _grid(task), tols["cond_threshold"], tols["rank"])
    d = system.d_A
    csv_name = f"{out['stem']}.trajectory.csv"
    _write_trajectory_csv(out["dir"] / csv_name, traj, d)
    valid = [i for i, ok in enumerate(traj.valid) if ok]
    reassembly = max((_rel(traj.decompositions[i].reassemble().rep - traj.generators[i].rep, traj.generators[i].rep) for i in valid), default=0.0)
    hpta = max((max(traj.diagnostics[i].hermiticity_residual, traj.diagnostics[i].trace_residual) for i in valid), default=0.0)
    outputs = {
        "csv": csv_name,
        "n_points": len(traj),
        "n_valid": len(valid),
        "invalid_times": [float(t) for t, ok in zip(traj.times, traj.valid) if not ok],
        "cond_threshold": tols["cond_threshold"],
    }
    certs = [
        _cert("generator_hpta", hpta, 1e-8),
        _cert("reassembly", reassembly, tols["reassembly"]),
    ]
    if task.get("check_master_equation", True):
        worst, last = _master_equation_check(system, traj, _state(task, d), tols, float(task.get("step", 1e-3)))
        certs.append(_cert("master_equation", worst, tols["trace_distance"], checked_until=last))
    return outputs, certs


def task_perturb(doc, out):
    tols = doc["tolerances"]
    kind, system, _ = build_problem(doc)
    if kind != "bipartite":
        raise ProblemError("perturb task needs a bipartite problem")
    task = doc["task"]
    k_max = int(task.get("k_max", 2))
    if k_max < 2:
        raise ProblemError("perturb task needs k_max >= 2")
    step = float(task.get("step", 1e-3))
    grid = _grid(task)
    gens = recursive_generator(system, k_max, grid, step)
    rows, l2_res, h2_res = [], 0.0, 0.0
    for t in gens.times:
        l2 = closed_form_L2(system, t, step)
        l2_res = max(l2_res, _rel(l2.rep - gens.at(2, t).rep, l2.rep))
        h2 = canonical_h2(system, t, step)
        h2_res = max(h2_res, _rel(h2 - canonical_hamiltonian(l2, tol=1e-8), h2))
        h_pert = perturbative_hamiltonian(system, t, step)
        row = {"t": float(t), "hamiltonian_order2": encode_matrix(h_pert), "h2": encode_matrix(h2)}
        try:
            exact, _ = extract_generator(system, t, tols["cond_threshold"])
        except SingularChannelError:
            row["valid"] = False
        else:
            row["valid"] = True
            row["hamiltonian_exact"] = encode_matrix(canonical_hamiltonian(exact, tol=1e-8))
            row["hamiltonian_difference"] = _max_abs(canonical_hamiltonian(exact, tol=1e-8) - h_pert)
            row["truncation_residual"] = {
                str(k): float(np.linalg.norm(exact.rep - gens.resum(system.lam, t, k).rep)) for k in range(k_max + 1)
            }
        rows.append(row)
    outputs = {"k_max": k_max, "lambda": system.lam, "step": step, "points": rows}
    certs = [
        _cert("closed_form_L2_vs_recursion", l2_res, tols["l2_consistency"]),
        _cert("canonical_h2_vs_projection", h2_res, tols["h2_consistency"]),
    ]
    return outputs, certs


def verify_generator(s, presentation, tols, rng, trials=100):
    """Run the certificate suite on ``s``; returns a list of certificate dicts."""
    require_hpta(s, tols["hpta"])
    certs = []
    mini = minimality_certificate(s, trials, rng, tols["minimality_rtol"], tols["orthogonality"])
    certs.append(
        _cert(
            "minimality",
            max(mini.max_pythagorean_residual, mini.oracle_hamiltonian_residual),
            tols["minimality_rtol"],
            passed=mini.passed,
            orthogonality_residual=mini.max_orthogonality_residual,
            orthogonality_tol=tols["orthogonality"],
        )
    )
    proj = projection_equivalence(s)
    h = proj.hamiltonians["contraction"]
    certs.append(_cert("projection_equivalence", proj.max_discrepancy / max(1.0, _max_abs(h)), tols["projection"]))

    dec = canonicalize(s, tols["rank"], tol=tols["hpta"])
    traces = [abs(np.trace(l)) for l in dec.jumps]
    certs.append(_cert("traceless_jumps", max(traces, default=0.0), tols["traceless"]))
    certs.append(_cert("reassembly", _rel(dec.reassemble().rep - s.rep, s.rep), tols["reassembly"]))

    alphas = rng.normal(size=len(dec.rates)) + 1j * rng.normal(size=len(dec.rates))
    h_shift, terms_shift = gauge_shift(dec.hamiltonian, dec.jump_terms, alphas)
    shifted = from_lindblad(h_shift, terms_shift)
    gauge = max(_rel(shifted.rep - s.rep, s.rep), _rel(canonical_hamiltonian(shifted, tols["hpta"]) - h, h))
    certs.append(_cert("gauge_invariance", gauge, tols["gauge"]))

    if presentation is not None:
        h_decl, _ = presentation
        d = s.d
        h_decl = h_decl - np.trace(h_decl) / d * np.eye(d)
        dis_decl = s - from_hamiltonian(h_decl)
        dis_can = dec.dissipator()
        excess = avg_inner_product(dis_decl, dis_decl) - avg_inner_product(dis_can, dis_can)
        certs.append(
            _cert(
                "declared_presentation_minimal",
                _rel(h_decl - h, h),
                tols["presentation"],
                dissipator_excess_norm2=encode_float(excess),
            )
        )
    return certs


def task_verify(doc, out):
    s, presentation = _generator(doc)
    rng = np.random.default_rng(doc["seed"])
    certs = verify_generator(s, presentation, doc["tolerances"], rng, int(doc["task"].get("trials", 100)))
    return {"hpta": _hpta_block(s, doc["tolerances"]["hpta"])}, certs


def haar_suite(d, samples, seed, tols):
    """Exact fourth-moment forms against each other, and Monte Carlo against both."""
    rng = np.random.default_rng(seed)
    certs = []
    table = rng.normal(size=(d,) * 4) + 1j * rng.normal(size=(d,) * 4)
    sym = fourth_moment_contract(table, d)
    perm = fourth_moment_contract_permutation(table, d)
    certs.append(_cert("fourth_moment_symmetric_vs_permutation", abs(sym - perm) / max(1.0, abs(sym)), tols["fourth_moment"]))

    sigma = tols["mc_sigma"]
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    mean, se = mc_average(HaarSampler(d, seed).spawn(0), samples, lambda us: us @ m @ np.conj(np.swapaxes(us, -1, -2)), vectorized=True)
    exact = second_moment(m)
    z = max(
        _max_abs(np.abs((mean - exact).real) / np.maximum(se.real, 1e-300)),
        _max_abs(np.abs((mean - exact).imag) / np.maximum(se.imag, 1e-300)),
    )
    certs.append(_cert("second_moment_mc", z, sigma, units="stderr"))

    a, _, _ = random_hpta(d, rng)
    b, _, _ = random_hpta(d, rng)
    est, err = avg_inner_product_mc(a, b, HaarSampler(d, seed).spawn(2), samples)
    exact_ip = avg_inner_product(a, b)
    certs.append(_cert("avg_inner_product_mc", abs(est - exact_ip) / err, sigma, units="stderr"))

    first = HaarSampler(d, seed).sample_batch(8)
    again = HaarSampler(d, seed).sample_batch(8)
    certs.append(_cert("seeded_determinism", 0.0 if np.array_equal(first, again) else 1.0, 0.5))
    return certs


def task_haar_check(doc, out):
    task = doc["task"]
    d, samples = int(task.get("d", 2)), int(task.get("samples", 100000))
    if d < 2 or samples < 2:
        raise ProblemError("haar-check needs d >= 2 and samples >= 2")
    return {"d": d, "samples": samples}, haar_suite(d, samples, doc["seed"], doc["tolerances"])


TASK_RUNNERS = {
    "canonicalize": task_canonicalize,
    "trajectory": task_trajectory,
    "perturb": task_perturb,
    "verify": task_verify,
    "haar-check": task_haar_check,
}


def _report(certs, stream):
    for c in certs:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status} {c['name']}: residual {c['residual']} (tol {c['tol']:g})", file=stream)


def _guarded(fn):
    """Map package errors to exit codes with a diagnostic on stderr."""
    try:
        return fn()
    except (ProblemError, NotHermitianError, NotDensityMatrixError, DimensionError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotHPTAError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SingularChannelError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def cmd_run(args):
    def go():
        doc, raw = load_problem(args.file, args.set or (), args.seed)
        path = Path(args.file)
        out_dir = Path(args.out) if args.out else path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        out = {"dir": out_dir, "stem": path.stem}
        outputs, certs = TASK_RUNNERS[doc["task"]["name"]](doc, out)
        result = {
            "schema_version": doc["schema_version"],
            "input_sha256": sha256_hex(raw),
            "overrides": list(args.set or ()),
            "seed": doc["seed"],
            "task": doc["task"]["name"],
            "tolerances": doc["tolerances"],
            "outputs": outputs,
            "certificates": certs,
            "passed": all(c["passed"] for c in certs),
        }
        result_path = out_dir / f"{path.stem}.result.json"
        result_path.write_text(dump_result(result))
        _report(certs, sys.stdout)
        print(f"wrote {result_path}")
        return EXIT_OK if result["passed"] else EXIT_CERTIFICATION

    return _guarded(go)


def cmd_verify(args):
    def go():
        doc, _ = load_problem(args.file)
        s, presentation = _generator(doc)
        rng = np.random.default_rng(doc["seed"])
        certs = verify_generator(s, presentation, doc["tolerances"], rng, int(doc["task"].get("trials", 100)))
        _report(certs, sys.stdout)
        return EXIT_OK if all(c["passed"] for c in certs) else EXIT_CERTIFICATION

    return _guarded(go)


def cmd_haar_check(args):
    def go():
        if args.d < 2 or args.samples < 2:
            raise ProblemError("--d must be >= 2 and --samples >= 2")
        certs = haar_suite(args.d, args.samples, args.seed, DEFAULT_TOLERANCES)
        _report(certs, sys.stdout)
        return EXIT_OK if all(c["passed"] for c in certs) else EXIT_CERTIFICATION

    return _guarded(go)


def build_parser():
    p = argparse.ArgumentParser(prog="canon", description="Canonical Hamiltonian and dissipator of quantum master equations.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the task named in a problem file")
    run.add_argument("file")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a (dotted) key; value parsed as JSON")
    run.add_argument("--out", help="output directory (default: next to the problem file)")
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the certificate suite on a problem's generator")
    ver.add_argument("file")
    ver.set_defaults(func=cmd_verify)

    haar = sub.add_parser("haar-check", help="Haar-moment agreement suite")
    haar.add_argument("--d", type=int, default=2)
    haar.add_argument("--samples", type=int, default=100000)
    haar.add_argument("--seed", type=int, default=0)
    haar.set_defaults(func=cmd_haar_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
