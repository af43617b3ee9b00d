"""Command line front end.

Every command writes its CSV files plus ``manifest.json`` into ``--out``.
The manifest records the fully resolved configuration, the package version
and a SHA-256 of each output, so a run can be repeated and compared byte for
byte. On failure a single line ``error code=<n> kind=<Name> msg=<text>`` goes
to stderr and the process exits with the code of the error class:
0 ok, 2 configuration, 3 construction, 4 numerical singularity, 5 feasibility.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import platform
import sys
from pathlib import Path
from typing import Dict, List

import numpy as np

from . import __version__
from .bogoliubov import mode_summary, verify_mode, write_mode_summary
from .effham import write_matrix
from .energy import convergence_sweep, energy_report, sweep_trend, write_sweep_csv, SweepRow, bound_rhs
from .errors import BosonizationError, ConfigError
from .lattice import (
    HalfSpaceModes,
    PotentialSpec,
    hartree_fock_energy,
    resolvent_sum,
    semiclassical_params,
    shell_sets,
    write_points_csv,
)
from .patches import DEFAULT_DELTA, corridor_ribbon_sets, counting_law_check, write_index_csv, write_patches_csv

log = logging.getLogger("fermibos")

DEFAULTS = {
    "kf": 10.0,
    "delta": DEFAULT_DELTA,
    "patches": "auto",
    "R_V": None,
    "potential": None,  # list of [kx, ky, kz, value]; None means V̂ = 1 on the six unit vectors
    "threads": 1,
    "strict": False,
    "kf_list": [15.0, 25.0, 40.0],
    "t_grid": [0.0, 0.1, 1.0, 10.0],
    "mode": None,
    "levels": [0, 1],
    "nmax": 12,
    "dump_matrices": False,
}


# -- configuration -----------------------------------------------------------

def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def read_potential_file(path) -> list:
    """``kx,ky,kz,value`` per line; ``#`` starts a comment."""
    rows = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read potential file {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) != 4:
                raise ValueError
            rows.append([int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])])
        except ValueError:
            raise ConfigError(f"{path}:{n}: expected 'kx,ky,kz,value', got {line!r}") from None
    return rows


def build_potential(rows, strict: bool) -> PotentialSpec:
    if rows is None:
        return PotentialSpec.unit_shell(1.0)
    table: Dict[tuple, float] = {}
    for kx, ky, kz, val in rows:
        k = (int(kx), int(ky), int(kz))
        if k in table and table[k] != float(val):
            raise ConfigError(f"potential lists {k} twice with different values")
        table[k] = float(val)
    one_sided = [k for k, v in table.items() if v != 0 and tuple(-c for c in k) not in table]
    if one_sided:
        if strict:
            raise ConfigError(f"potential is not symmetric under k -> -k (missing {tuple(-c for c in one_sided[0])})")
        log.warning("completing one-sided potential entries %s by reflection", one_sided)
        return PotentialSpec.symmetrized(table)
    return PotentialSpec(table)


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {args.config}: {exc}") from None
        unknown = set(loaded) - set(DEFAULTS) - {"potential_file"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "potential_file" in loaded:
            loaded["potential"] = read_potential_file(loaded.pop("potential_file"))
        cfg.update(loaded)
    overrides = {
        "kf": args.kf,
        "delta": args.delta,
        "patches": args.patches,
        "R_V": args.rv,
        "threads": args.threads,
        "kf_list": _floats(args.kf_list) if args.kf_list else None,
        "t_grid": _floats(args.t_grid) if args.t_grid else None,
        "mode": _ints(args.mode) if args.mode else None,
        "levels": _ints(args.levels) if args.levels else None,
        "nmax": args.nmax,
    }
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    if args.strict:
        cfg["strict"] = True
    if args.dump_matrices:
        cfg["dump_matrices"] = True
    if args.potential:
        cfg["potential"] = read_potential_file(args.potential)

    if not (isinstance(cfg["kf"], (int, float)) and cfg["kf"] > 0):
        raise ConfigError(f"kf must be positive, got {cfg['kf']!r}")
    cfg["kf"] = float(cfg["kf"])
    cfg["delta"] = float(cfg["delta"])
    if not 0 < cfg["delta"] < 1 / 6:
        raise ConfigError(f"delta must lie in (0, 1/6), got {cfg['delta']}")
    p = cfg["patches"]
    if isinstance(p, str) and p.lower() == "auto":
        cfg["patches"] = "auto"
    else:
        try:
            cfg["patches"] = int(p)
        except (TypeError, ValueError):
            raise ConfigError(f"--patches must be an even integer or 'auto', got {p!r}") from None
        if cfg["patches"] < 2 or cfg["patches"] % 2:
            raise ConfigError(f"--patches must be an even integer >= 2, got {p!r}")
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads must be >= 1")
    cfg["threads"] = int(cfg["threads"])
    return cfg


# -- commands ----------------------------------------------------------------

def _ktxt(k) -> str:
    return " ".join(str(int(c)) for c in k)


def _kname(k) -> str:
    return "_".join(str(int(c)) for c in k)


def _bosonize(cfg, V, kf=None):
    from .pipeline import bosonize

    return bosonize(cfg["kf"] if kf is None else kf, V, cfg["patches"], cfg["delta"], R_V=cfg["R_V"],
                    threads=cfg["threads"])


def cmd_lattice(cfg, V, out: Path) -> List[Path]:
    sys_ = semiclassical_params(cfg["kf"])
    files = [out / "ball.csv", out / "lattice_summary.csv"]
    write_points_csv(files[0], sys_.ball)
    with open(files[1], "w", encoding="utf-8") as fh:
        fh.write("k,ring_size,overlap,resolvent_sum,resolvent_over_N\n")
        for k in HalfSpaceModes.from_potential(V):
            sets = shell_sets(sys_, k)
            r = resolvent_sum(sys_, k)
            fh.write(f"{_ktxt(k)},{len(sets.ring)},{sets.overlap},{r:.17g},{r / sys_.N:.17g}\n")
            path = out / f"ring_{_kname(k)}.csv"
            write_points_csv(path, sets.ring)
            files.append(path)
    params = out / "params.csv"
    with open(params, "w", encoding="utf-8") as fh:
        fh.write("kF,N,kappa,hbar,E_pw\n")
        fh.write(f"{sys_.k_F:.17g},{sys_.N},{sys_.kappa:.17g},{sys_.hbar:.17g},{hartree_fock_energy(sys_, V):.17g}\n")
    files.append(params)
    return files


def cmd_patches(cfg, V, out: Path) -> List[Path]:
    bz = _bosonize(cfg, V)
    files = [out / "patches.csv", out / "counting.csv", out / "corridors.csv"]
    write_patches_csv(files[0], bz.pd)
    with open(files[1], "w", encoding="utf-8") as fc, open(files[2], "w", encoding="utf-8") as fr:
        fc.write("k,alpha,n_alpha_sq,rel_deviation\n")
        fr.write("k,U,Y,U_minus_Y,Y_over_N_2_3_minus_delta,UmY_over_N_1_3_sqrtM\n")
        for k, mi in bz.idx.items():
            path = out / f"index_{_kname(k)}.csv"
            write_index_csv(path, mi)
            files.append(path)
            if mi.dim:
                dev = counting_law_check(bz.pd, bz.sys, k, mi)
                for a, c, d in zip(mi.alphas, np.concatenate([mi.counts, mi.counts]), dev):
                    fc.write(f"{_ktxt(k)},{a},{int(c)},{d:.17g}\n")
            cs = corridor_ribbon_sets(bz.pd, bz.sys, k, mi=mi)
            N = bz.sys.N
            fr.write(
                f"{_ktxt(k)},{len(cs.U)},{len(cs.Y)},{len(cs.U_minus_Y)},"
                f"{len(cs.Y) / N ** (2 / 3 - bz.delta):.17g},{len(cs.U_minus_Y) / (N ** (1 / 3) * math.sqrt(bz.M)):.17g}\n"
            )
    return files


def cmd_diag(cfg, V, out: Path) -> List[Path]:
    bz = _bosonize(cfg, V)
    rows = []
    checks = out / "diag_checks.csv"
    with open(checks, "w", encoding="utf-8") as fh:
        fh.write("k,exp2K,curlyK_AB,K_AC,spectrum,offdiag\n")
        for k, (mm, bd) in bz.modes.items():
            r = verify_mode(mm, bd)
            fh.write(f"{_ktxt(k)},{r['exp2K']:.3e},{r['curlyK_AB']:.3e},{r['K_AC']:.3e},{r['spectrum']:.3e},{r['offdiag']:.3e}\n")
            rows.append(mode_summary(mm, bd, V(k)))
    summary = out / "modes.csv"
    write_mode_summary(summary, rows)
    files = [summary, checks]
    if cfg["dump_matrices"]:
        for k, (mm, bd) in bz.modes.items():
            for name, mat in (("D", mm.D), ("W", mm.W), ("Wt", mm.Wt), ("E", bd.E), ("K", bd.K), ("curlyK", bd.curlyK)):
                path = out / f"{name}_{_kname(k)}.txt"
                write_matrix(path, mat, k)
                files.append(path)
    return files


def cmd_energy(cfg, V, out: Path) -> List[Path]:
    bz = _bosonize(cfg, V)
    rep = energy_report(bz)
    sys_ = bz.sys
    row = SweepRow(sys_.k_F, sys_.N, bz.M, bz.delta, rep.E_trace, rep.E_integral, rep.diff, rep.diff / sys_.hbar,
                   bound_rhs(sys_.hbar, sys_.N, bz.M, bz.delta))
    files = [out / "energy.csv", out / "energy_per_k.csv"]
    write_sweep_csv(files[0], [row])
    with open(files[1], "w", encoding="utf-8") as fh:
        fh.write("k,E_trace_k,E_integral_k\n")
        for k in sorted(set(rep.per_k_trace) | set(rep.per_k_integral)):
            fh.write(f"{_ktxt(k)},{rep.per_k_trace.get(k, 0.0):.17g},{rep.per_k_integral.get(k, 0.0):.17g}\n")
    return files


def cmd_sweep(cfg, V, out: Path) -> List[Path]:
    rows = convergence_sweep(cfg["kf_list"], V, cfg["patches"], cfg["delta"], R_V=cfg["R_V"], threads=cfg["threads"])
    path = out / "sweep.csv"
    write_sweep_csv(path, rows)
    trend = sweep_trend(rows)
    log.info("sweep: %d inversion(s), improvement factor %.4g", trend["inversions"], trend["improvement"])
    return [path]


def cmd_dynamics(cfg, V, out: Path) -> List[Path]:
    from .dynamics import (ExcitationFamily, energy_expectation, evolve, gram_and_Z, stationary_state,
                           write_state)

    bz = _bosonize(cfg, V)
    bds = bz.bogoliubov()
    if not bds:
        raise ConfigError("no bosonic modes available for dynamics")
    k = tuple(cfg["mode"]) if cfg["mode"] else next(iter(bds))
    if k not in bds:
        raise ConfigError(f"mode {k} not among {sorted(bds)}")
    states = [stationary_state(bds, k, lev, bz.sys) for lev in cfg["levels"]]
    files = []
    alphas = {k: bz.idx[k].alphas}
    for lev, st in zip(cfg["levels"], states):
        path = out / f"state_{_kname(k)}_level{lev}.csv"
        write_state(path, st.phi, alphas)
        files.append(path)
    dyn = out / "dynamics.csv"
    with open(dyn, "w", encoding="utf-8") as fh:
        fh.write("t,level,energy,degenerate,norm,overlap_abs,energy_expectation,Z_B_squared\n")
        for t in cfg["t_grid"]:
            evolved = [evolve(st.phi, t, bds) for st in states]
            z = gram_and_Z(ExcitationFamily(tuple(evolved))).Z_B_squared
            for lev, st, ph in zip(cfg["levels"], states, evolved):
                fh.write(
                    f"{t:.17g},{lev},{st.energy:.17g},{int(st.degenerate)},{ph.norm():.17g},"
                    f"{abs(st.phi.inner(ph)):.17g},{energy_expectation(ph, bds, bz.sys):.17g},{z:.17g}\n"
                )
    files.append(dyn)
    return files


def cmd_oracle(cfg, V, out: Path) -> List[Path]:
    from .errors import FeasibilityError
    from .fockoracle.boson import boson_ed_spectrum
    from .fockoracle.fermion import (
        PairContext,
        ccr_defect_probe,
        fermionic_Zm,
        norm2,
        plane_wave_energy_oracle,
        vacuum,
        write_oracle_csv,
    )

    rows = []
    bz = _bosonize(cfg, V)
    for k, (mm, bd) in bz.modes.items():
        inst = f"kF={bz.sys.k_F:g} M={bz.M} k={_ktxt(k)}"
        try:
            sp = boson_ed_spectrum(mm.A, mm.B, cfg["nmax"])
        except FeasibilityError as exc:
            log.warning("%s: boson ED skipped (%s)", inst, exc)
            continue
        rows.append((inst, "ground_energy", sp.ground_energy, bd.ground_constant))
        eigE = np.linalg.eigvalsh(bd.E)
        for i, (g, e) in enumerate(zip(sp.one_boson_gaps, eigE)):
            rows.append((inst, f"gap_{i}", g, e))
    if bz.sys.N <= 60:
        rows.append((f"kF={bz.sys.k_F:g}", "E_pw", plane_wave_energy_oracle(bz.sys, V), hartree_fock_energy(bz.sys, V)))
    ctx = PairContext.from_bosonized(bz)
    for k, mi in bz.idx.items():
        for a in mi.alphas:
            if len(ctx.pairs(a, k)) > 400:
                continue
            inst = f"kF={bz.sys.k_F:g} M={bz.M} k={_ktxt(k)} alpha={a}"
            rows.append((inst, "Z2_m1", fermionic_Zm([{k: [1.0 if b == a else 0.0 for b in mi.alphas]}], ctx), 1.0))
            defect = ccr_defect_probe(a, a, k, k, ctx, vacuum())
            rows.append((inst, "ccr_defect_on_vacuum", math.sqrt(float(norm2(defect).real if defect else 0.0)), 0.0))
    path = out / "oracle.csv"
    write_oracle_csv(path, rows)
    return [path]


COMMANDS = {
    "lattice": cmd_lattice,
    "patches": cmd_patches,
    "diag": cmd_diag,
    "energy": cmd_energy,
    "sweep": cmd_sweep,
    "dynamics": cmd_dynamics,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of the keys accepted as flags")
    common.add_argument("--kf", type=float, help="Fermi momentum k_F (default 10)")
    common.add_argument("--delta", type=float, help="cutoff exponent, 0 < delta < 1/6 (default 2/45)")
    common.add_argument("--patches", help="even patch count M or 'auto' for N^(4 delta) (default auto)")
    common.add_argument("--potential", help="file of 'kx,ky,kz,value' lines (default: 1 on the unit vectors)")
    common.add_argument("--rv", type=float, help="override the patch thickness R_V (default: support diameter)")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--threads", type=int, help="worker threads for per-mode work (default 1)")
    common.add_argument("--strict", action="store_true", help="reject one-sided potentials instead of completing them")
    common.add_argument("--kf-list", help="comma-separated k_F values for 'sweep'")
    common.add_argument("--t-grid", help="comma-separated times for 'dynamics'")
    common.add_argument("--mode", help="momentum 'kx,ky,kz' for 'dynamics'")
    common.add_argument("--levels", help="comma-separated eigenvector indices for 'dynamics'")
    common.add_argument("--nmax", type=int, help="boson number cutoff for 'oracle' (default 12)")
    common.add_argument("--dump-matrices", action="store_true", help="'diag': also write D, W, Wt, E, K, curlyK")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fermibos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "lattice": "Fermi ball, rings and resolvent sums",
        "patches": "patch decomposition, counting law and corridor sets",
        "diag": "per-mode Bogoliubov diagonalisation with cross-checks",
        "energy": "RPA energy by the trace and the integral formula",
        "sweep": "trace-vs-integral convergence table over k_F",
        "dynamics": "stationary excitations under the quadratic dynamics",
        "oracle": "boson ED and fermionic engine checks",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, V: PotentialSpec, files: List[Path]) -> Path:
    manifest = {
        "tool": "fermibos",
        "version": __version__,
        "command": command,
        "config": {**cfg, "potential": [[*k, v] for k, v in V.values.items()]},
        "environment": {"python": platform.python_version(), "numpy": np.__version__},
        "outputs": {p.name: _sha256(p) for p in sorted(files)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def run(command: str, cfg: dict, out: Path) -> List[Path]:
    V = build_potential(cfg["potential"], cfg["strict"])
    out.mkdir(parents=True, exist_ok=True)
    files = COMMANDS[command](cfg, V, out)
    files.append(write_manifest(out, command, cfg, V, files))
    return files


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        files = run(args.command, cfg, Path(args.out))
    except BosonizationError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error code={exc.exit_code} kind={type(exc).__name__} msg={msg}", file=sys.stderr)
        return exc.exit_code
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
