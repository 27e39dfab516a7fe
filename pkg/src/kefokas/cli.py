"""Command-line front end: scatter | evolve | reconstruct | asymptote | validate.

Human-readable progress goes to stdout; failures are reported on stderr as a
single JSON object.  Exit codes: 0 success, 2 input error, 3 partial
numerical failure, 4 invariant violation.
"""

import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import (ConfigurationError, KEError, ZeroAssumptionViolated)
from .data import (HalfLineData, InputNotFound, ValidationError, gaussian_profile,
                   load_profile, save_profile)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

EXIT_OK, EXIT_INPUT, EXIT_PARTIAL, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantViolation(KEError):
    kind = "invariant-violation"


class PartialFailure(KEError):
    kind = "partial-failure"


# --------------------------------------------------------------------------
# configuration and output helpers


def load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise InputNotFound(f"no such config: {path}", path=path)
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        if path.endswith(".toml"):
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ValidationError(f"unreadable config: {exc}") from exc


def parse_tolerances(items):
    out = {}
    for item in items or []:
        name, _, value = item.partition("=")
        try:
            val = float(value)
        except ValueError:
            raise ConfigurationError(f"bad tolerance override {item!r}") from None
        if not val > 0:
            raise ConfigurationError(f"tolerance {name} must be positive")
        out[name] = val
    return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12e")
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def write_csv(path, columns, rows, units="dimensionless", producer="kefokas"):
    """CSV with a leading comment row naming the producer version and units."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {producer} {__version__}; units: {units}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _grid(spec, default):
    spec = spec or default
    if isinstance(spec, dict):
        return np.linspace(spec["min"], spec["max"], int(spec["n"]))
    return np.asarray(spec, float)


def resolve_profile(cfg, base_dir=""):
    prof = cfg.get("profile", "gaussian")
    if isinstance(prof, dict):
        return gaussian_profile(**prof)
    if prof == "gaussian":
        return gaussian_profile()
    return load_profile(os.path.join(base_dir, prof))


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise ConfigurationError(f"output directory not writable: {path}")
    return path


# --------------------------------------------------------------------------
# spectral data on disk


def spectral_to_json(spec):
    def cx(a):
        a = np.asarray(a, complex)
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    doc = {"k_real": spec.k_real.tolist(), "y_imag": spec.y_imag.tolist()}
    for name in ("a_real", "b_real", "A_real", "B_real", "a_iup", "b_iup",
                 "A_iup", "B_iup", "A_idn", "B_idn"):
        doc[name] = cx(getattr(spec, name))
    return doc


def spectral_from_json(doc):
    from .spectral import SpectralSet, derive_reflections

    def cx(d):
        return np.asarray(d["re"], float) + 1j * np.asarray(d["im"], float)
    try:
        spec = SpectralSet(
            k_real=np.asarray(doc["k_real"], float),
            y_imag=np.asarray(doc.get("y_imag", []), float),
            **{n: cx(doc[n]) for n in ("a_real", "b_real", "A_real", "B_real")},
            **{n: cx(doc[n]) for n in ("a_iup", "b_iup", "A_iup", "B_iup", "A_idn", "B_idn")
               if n in doc})
    except KeyError as exc:
        raise ValidationError(f"spectral file missing {exc.args[0]!r}") from exc
    return derive_reflections(spec)


def load_spectral(path):
    if not os.path.exists(path):
        raise InputNotFound(f"no such spectral file: {path}", path=path)
    with open(path) as fh:
        return spectral_from_json(json.load(fh))


# --------------------------------------------------------------------------
# subcommands


def cmd_scatter(cfg, out, tol, workers=1, seed=0):
    from .spectral import compute_spectral_set, derive_reflections, zero_scan
    data = resolve_profile(cfg).validate()
    k_real = _grid(cfg.get("k_real"), {"min": -15.0, "max": 15.0, "n": 3001})
    y_imag = _grid(cfg.get("y_imag"), []) if "y_imag" in cfg else np.zeros(0)
    spec = derive_reflections(compute_spectral_set(data, k_real, y_imag))
    rx, rt = spec.determinant_residual()
    rows = []
    for j, k in enumerate(spec.k_real):
        rows.append([k, 0.0, spec.a_real[j].real, spec.a_real[j].imag,
                     spec.b_real[j].real, spec.b_real[j].imag,
                     spec.A_real[j].real, spec.A_real[j].imag,
                     spec.B_real[j].real, spec.B_real[j].imag,
                     spec.r1_real[j].real, spec.r1_real[j].imag, rx[j], rt[j]])
    write_csv(os.path.join(out, "spectral_real.csv"),
              ["k_re", "k_im", "a_re", "a_im", "b_re", "b_im", "A_re", "A_im",
               "B_re", "B_im", "r1_re", "r1_im", "det_x_residual", "det_t_residual"], rows)
    neg = [[k, 0.0, r.real, r.imag, g.real, g.imag, d.real, d.imag]
           for k, r, g, d in zip(spec.k_neg, spec.r_neg, spec.gamma_neg, spec.d_neg)]
    write_csv(os.path.join(out, "spectral_neg.csv"),
              ["k_re", "k_im", "r_re", "r_im", "gamma_re", "gamma_im", "d_re", "d_im"], neg)
    write_json(os.path.join(out, "spectral.json"), spectral_to_json(spec))
    zeros, amin = zero_scan(data, radius=cfg.get("zero_scan_radius", 20.0))
    report = {
        "det_x_max": float(rx.max()), "det_t_max": float(rt.max()),
        "sup_r_neg": float(np.max(np.abs(spec.r_neg))),
        "zero_count": zeros, "min_abs_a_on_box": amin,
        "a_is_one": bool(np.allclose(spec.a_real, 1.0, atol=0, rtol=0)),
        "b_is_zero": bool(not np.any(spec.b_real)),
    }
    write_json(os.path.join(out, "report.json"), report)
    print(f"scatter: {k_real.size} real k, det residual {report['det_x_max']:.2e}, "
          f"sup|r| {report['sup_r_neg']:.3e}, zeros of a: {zeros}")
    if zeros != 0:
        raise ZeroAssumptionViolated("a has zeros in the upper half plane", count=zeros)
    limit = tol.get("det", 1e-8)
    if report["det_x_max"] > limit or report["det_t_max"] > limit:
        raise InvariantViolation("determinant relation violated",
                                 det_x=report["det_x_max"], det_t=report["det_t_max"])
    return EXIT_OK


def cmd_evolve(cfg, out, tol, workers=1, seed=0):
    from .pde import EvolutionConfig, evolve, extract_traces, traces_to_data
    beta = float(cfg.get("beta", 0.25))
    x_max, nx = float(cfg.get("x_max", 40.0)), int(cfg.get("nx", 2000))
    dirichlet = cfg.get("dirichlet", "zero")
    if dirichlet == "zero":
        g0 = None
    else:
        ts = np.asarray(dirichlet["t"], float)
        gv = np.asarray(dirichlet["re"], float) + 1j * np.asarray(dirichlet["im"], float)

        def g0(t, ts=ts, gv=gv):
            return np.interp(t, ts, gv.real) + 1j * np.interp(t, ts, gv.imag)
    ecfg = EvolutionConfig(beta=beta, x_max=x_max, nx=nx, dt=float(cfg.get("dt", 0.01)),
                           t_max=float(cfg.get("t_max", 2.0)), dirichlet=g0,
                           snapshot_times=tuple(cfg.get("snapshot_times", [])),
                           decay_floor=float(cfg.get("decay_floor", 1e-12)),
                           sponge_width=float(cfg.get("sponge_width", 0.0)),
                           sponge_strength=float(cfg.get("sponge_strength", 1.0)),
                           monitor=bool(cfg.get("monitor", True)),
                           scheme_tolerance=tol.get("scheme", 1e-12))
    x = ecfg.x_grid()
    prof = cfg.get("profile", "gaussian")
    params = prof if isinstance(prof, dict) else {}
    amp = params.get("amplitude", 1.0)
    width = params.get("width", 1.0)
    center = params.get("center", 5.0)
    u0 = amp * np.exp(-(((x - center) / width) ** 2))
    ev = evolve(u0, ecfg)
    t, g0s, g1s = extract_traces(ev)
    write_csv(os.path.join(out, "traces.csv"), ["t", "g0_re", "g0_im", "g1_re", "g1_im"],
              [[ti, a.real, a.imag, b.real, b.imag] for ti, a, b in zip(t, g0s, g1s)])
    rows = []
    for snap in ev.snapshots:
        for xi, ui in zip(snap.x_grid, snap.u):
            rows.append([xi, snap.t, ui.real, ui.imag, abs(ui)])
    write_csv(os.path.join(out, "fields.csv"), ["x", "t", "u_re", "u_im", "abs_u"], rows)
    ray = []
    for xi in cfg.get("ray_xi", []):
        for snap in ev.snapshots:
            if 0 < xi * snap.t <= x_max:
                ui = snap.at(xi * snap.t)
                ray.append([snap.t, xi, ui.real, ui.imag, abs(ui)])
    if ray:
        write_csv(os.path.join(out, "ray.csv"), ["t", "xi", "u_re", "u_im", "abs_u"], ray)
    x0 = gaussian_profile(amplitude=amp, width=width, center=center, beta=beta)
    save_profile(traces_to_data(x0, t, g0s, g1s), os.path.join(out, "profile.json"))
    masses = [s.mass for s in ev.snapshots]
    report = {"steps": int(ecfg.n_steps), "mean_iterations": float(ev.iterations.mean()),
              "mass": masses, "trace_tail": float(max(abs(g0s[-1]), abs(g1s[-1])))}
    write_json(os.path.join(out, "report.json"), report)
    print(f"evolve: {ecfg.n_steps} steps, trace tail {report['trace_tail']:.2e}")
    return EXIT_OK


def cmd_reconstruct(cfg, out, tol, workers=1, seed=0):
    from .inverse import reconstruct
    from .rh import RHOptions
    spec_path = cfg.get("spectral")
    if spec_path is None:
        raise ConfigurationError("reconstruct needs 'spectral' (output of scatter)")
    spec = load_spectral(spec_path)
    x = _grid(cfg.get("x"), {"min": 0.0, "max": 10.0, "n": 201})
    t = float(cfg.get("t", 0.0))
    beta = float(cfg.get("beta", 0.25))
    opts = RHOptions(h_max=float(cfg.get("h_max", 0.5)), order=int(cfg.get("order", 16)),
                     residual_tol=tol.get("residual", 1e-10),
                     condition_limit=tol.get("condition", 1e12))
    rec = reconstruct(spec, x, t, beta, float(cfg.get("boundary_phase", 0.0)), opts,
                      workers=workers, tol=tol.get("jump", 1e-12))
    u = rec.snapshot.u
    write_csv(os.path.join(out, "field.csv"), ["x", "t", "u_re", "u_im", "abs_u", "residual",
                                               "failed"],
              [[xi, t, ui.real, ui.imag, abs(ui), ri, fi]
               for xi, ui, ri, fi in zip(x, u, rec.residual, rec.failed)])
    report = {"points": int(x.size), "failed": int(rec.failed.sum()),
              "errors": rec.errors[:10]}
    if "compare_profile" in cfg and t == 0.0:
        prof = cfg["compare_profile"]
        ref = (gaussian_profile(**prof) if isinstance(prof, dict)
               else gaussian_profile() if prof == "gaussian" else load_profile(prof))
        u0 = np.interp(x, ref.x_samples, ref.u0.real) + 1j * np.interp(x, ref.x_samples,
                                                                        ref.u0.imag)
        ok = ~rec.failed
        report["max_relative_error"] = float(np.max(np.abs(u[ok] - u0[ok]))
                                             / np.max(np.abs(u0)))
    write_json(os.path.join(out, "report.json"), report)
    print(f"reconstruct: {x.size} points, {report['failed']} failed"
          + (f", max rel error {report['max_relative_error']:.2e}"
             if "max_relative_error" in report else ""))
    if report["failed"] > 0.01 * x.size:
        raise PartialFailure("RH solve failed at more than 1% of points",
                             failed=report["failed"], points=int(x.size))
    return EXIT_OK


def _reflection_from_cfg(cfg):
    from .asymptotics import Reflection
    src = cfg.get("reflection", "spectral")
    if src == "zero":
        return Reflection.zero()
    if isinstance(src, dict):
        return Reflection.gaussian_bump(**src)
    return Reflection.from_spectral(load_spectral(cfg["spectral"]))


def cmd_asymptote(cfg, out, tol, workers=1, seed=0):
    from .asymptotics import asymptotic_params, evaluate_asymptotic
    refl = _reflection_from_cfg(cfg)
    beta = float(cfg.get("beta", 0.25))
    xis = np.atleast_1d(np.asarray(cfg.get("xi", [1.0]), float))
    ts = np.atleast_1d(np.asarray(cfg.get("t", [100.0]), float))
    xi_max = float(cfg.get("xi_max", np.inf))
    rows, skipped = [], []
    for xi in xis:
        if not (0 < xi <= xi_max):
            warnings.warn(f"xi = {xi} outside (0, {xi_max}]; row skipped")
            skipped.append(float(xi))
            continue
        par = asymptotic_params(refl, xi)
        for t in ts:
            val = evaluate_asymptotic(par, refl, t, beta)
            rows.append([xi, t, par.nu, val.alpha, val.u_a.real, val.u_a.imag,
                         abs(val.u_a)])
    write_csv(os.path.join(out, "sweep.csv"),
              ["xi", "t", "nu", "alpha", "ua_re", "ua_im", "abs_ua"], rows)
    report = {"rows": len(rows), "skipped_xi": skipped}
    if "compare" in cfg:
        report["comparison"] = compare_oracle(cfg["compare"], refl, beta,
                                              float(cfg.get("compare_t_min", 20.0)))
    write_json(os.path.join(out, "report.json"), report)
    print(f"asymptote: {len(rows)} rows")
    return EXIT_OK


def compare_oracle(path, refl, beta, t_min=20.0, phase_window=(100.0, np.inf)):
    """Compare a (t, xi, u_re, u_im) oracle table with the leading term."""
    from .asymptotics import (asymptotic_params, evaluate_asymptotic,
                              modulus_decay_fit, phase_drift)
    if not os.path.exists(path):
        raise InputNotFound(f"no such oracle table: {path}", path=path)
    tab = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    t, xi, u = tab[:, 0], tab[:, 1], tab[:, 2] + 1j * tab[:, 3]
    out = {}
    for x in np.unique(xi):
        sel = (xi == x) & (t >= t_min)
        par = asymptotic_params(refl, x)
        fit = modulus_decay_fit(t[sel], u[sel], par.nu)
        ph = sel & (t >= phase_window[0]) & (t <= phase_window[1])
        if np.count_nonzero(ph) > 1:
            alpha = [evaluate_asymptotic(par, refl, ti, beta).alpha for ti in t[ph]]
            fit["phase_drift"] = phase_drift(t[ph], u[ph], alpha)
        out[f"{x:g}"] = fit
    return out


def cmd_validate(cfg, out, tol, workers=1, seed=0):
    from .validate import run_suite
    rows = run_suite(cfg, tol, seed)
    write_csv(os.path.join(out, "validate.csv"),
              ["check", "value", "tolerance", "passed"],
              [[r.name, r.value, r.tolerance, r.passed] for r in rows])
    failed = [r.name for r in rows if not r.passed]
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} "
              f"(tolerance {r.tolerance:.1e})")
    if failed:
        raise InvariantViolation("invariant checks failed", checks=",".join(failed))
    return EXIT_OK


COMMANDS = {
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "reconstruct": cmd_reconstruct,
    "asymptote": cmd_asymptote,
    "validate": cmd_validate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="kefokas", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kefokas {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON or TOML configuration file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help="override a tolerance (det, jump, residual, condition, ...)")
    return p


def exit_code(exc):
    if isinstance(exc, (InputNotFound, ValidationError, ConfigurationError)):
        return EXIT_INPUT
    if isinstance(exc, (ZeroAssumptionViolated, InvariantViolation)):
        return EXIT_INVARIANT
    return EXIT_PARTIAL


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.config:
            base = os.path.dirname(os.path.abspath(args.config))
            for key in ("profile", "spectral", "compare"):
                if isinstance(cfg.get(key), str) and cfg[key] != "gaussian" \
                        and not os.path.isabs(cfg[key]):
                    cfg[key] = os.path.join(base, cfg[key])
        tol = parse_tolerances(args.tolerance)
        out = _ensure_dir(args.out)
        return COMMANDS[args.command](cfg, out, tol, args.workers, args.seed)
    except KEError as exc:
        json.dump(exc.as_dict(), sys.stderr)
        sys.stderr.write("\n")
        return exit_code(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
