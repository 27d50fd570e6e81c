"""
Command-line front end

    python -m app.cli system build --kind finite --N 5 --out sys.json
    python -m app.cli kernel --dim 5 --random --seed 7 --out kernel.json
    python -m app.cli quantize --system sys.json --kernel kernel.json --function one --out gamma.json
    python -m app.cli povm build --system sys.json --kernel kernel.json --partition singletons --out povm.json
    python -m app.cli povm build --system sys.json --kernel kernel.json --out povm.json --table table.json
    python -m app.cli sample --povm povm.json --state kernel.json --shots 100000 --seed 42 --out counts.csv
    python -m app.cli recover --system sys.json --input povm.json --out recovered.json --max-dev 1e-8
    python -m app.cli symbol --system sys.json --kernel kernel.json --operator rho.json --out symbol.csv
    python -m app.cli density --system sys.json --kernel kernel.json --psi 0 --phi 1 --out density.csv
    python -m app.cli verify --suite finite-exact --random-kernels 20 --out report.json

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 computation
error, 4 recovery deviation above --max-dev.
"""

import argparse
import json
import sys
from typing import List, Optional

import numpy as np
from loguru import logger

from app.config import Tolerances, get_settings
from app.core.exceptions import InvalidGrid, InvalidPartition, QuantizationError
from app.core.groups import WeylSystem, build_finite_weyl, build_planar_weyl
from app.core.operators import DensityOperator, Operator, random_density
from app.core.povm import (
    Povm,
    build_povm,
    complex_measure_density,
    map_table_from_povm,
    partition_from_spec,
    sample,
)
from app.core.quantization import QuantizationKernel, dual_symbol, quantize, recover_kernel
from app.core.serialization import (
    load_kernel,
    load_operator,
    load_system,
    load_table_or_povm,
    map_table_to_json,
    povm_from_json,
    povm_to_json,
    read_json,
    resolve_function,
    save_counts_csv,
    save_grid_csv,
    save_operator,
    save_system,
    write_atomic,
    write_json,
)
from app.core.verification import run_verification
from app.utils.log_setup import configure_logging

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Flag combination rejected before any computation"""
    pass


# ============================================
# Parser
# ============================================

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output file")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default from settings)")
    parser.add_argument("--tol-overrides", dest="tol_overrides", help="JSON/YAML file of tolerance overrides")
    parser.add_argument("--log-level", dest="log_level", default=None, help="loguru level")
    parser.add_argument("--csv", help="also write plot-ready CSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covq", description="Covariant quantization toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    system = commands.add_parser("system", help="Weyl system descriptors")
    system_commands = system.add_subparsers(dest="action", required=True)
    system_build = system_commands.add_parser("build", help="validate and write a system descriptor")
    system_build.add_argument("--kind", choices=["finite", "planar"], required=True)
    system_build.add_argument("--N", type=int)
    system_build.add_argument("--M", type=int)
    system_build.add_argument("--L", type=float)
    system_build.add_argument("--h", type=float)
    _common(system_build)

    kernel = commands.add_parser("kernel", help="write a kernel (vacuum or seeded random density)")
    kernel.add_argument("--dim", type=int, required=True)
    kernel.add_argument("--random", action="store_true")
    kernel.add_argument("--rank", type=int)
    _common(kernel)

    quant = commands.add_parser("quantize", help="Gamma_T(f) as Operator JSON")
    quant.add_argument("--system", required=True)
    quant.add_argument("--kernel", required=True)
    quant.add_argument("--function", required=True,
                       help='builtin "one", inline FunctionSpec JSON, or a function/observable file')
    _common(quant)

    povm = commands.add_parser("povm", help="covariant POVMs")
    povm_commands = povm.add_subparsers(dest="action", required=True)
    povm_build = povm_commands.add_parser("build", help="E(B) for every cell of a partition")
    povm_build.add_argument("--system", required=True)
    povm_build.add_argument("--kernel", required=True)
    povm_build.add_argument("--partition", default="singletons",
                            help="singletons | whole | quadrants | blocks:K")
    povm_build.add_argument("--table", help="also write the singleton map table here (recover --input)")
    _common(povm_build)

    samp = commands.add_parser("sample", help="seeded outcome counts per cell (CSV label,count)")
    samp.add_argument("--povm", required=True)
    samp.add_argument("--state", required=True, help="density operator JSON")
    samp.add_argument("--shots", type=int, required=True)
    _common(samp)

    rec = commands.add_parser("recover", help="kernel from a POVM or map table")
    rec.add_argument("--system", required=True)
    rec.add_argument("--input", required=True)
    rec.add_argument("--max-dev", dest="max_dev", type=float, default=1e-8,
                     help="largest accepted candidate spread (exit 4 above it)")
    _common(rec)

    sym = commands.add_parser("symbol", help="dual symbol d^-1 Tr[S beta_g(T)] as CSV")
    sym.add_argument("--system", required=True)
    sym.add_argument("--kernel", required=True)
    sym.add_argument("--operator", required=True)
    _common(sym)

    dens = commands.add_parser("density", help="complex measure density d^-1 <psi|beta_g(T) phi> as CSV")
    dens.add_argument("--system", required=True)
    dens.add_argument("--kernel", required=True)
    dens.add_argument("--psi", type=int, default=0, help="basis level of psi")
    dens.add_argument("--phi", type=int, default=0, help="basis level of phi")
    _common(dens)

    ver = commands.add_parser("verify", help="run verification suites")
    ver.add_argument("--system")
    ver.add_argument("--kernel")
    ver.add_argument("--random-kernels", dest="random_kernels", type=int, default=20)
    ver.add_argument("--suite", choices=["finite-exact", "planar-quadrature", "all"], default="all")
    _common(ver)
    return parser


# ============================================
# Commands
# ============================================

def _tolerances(args) -> Tolerances:
    base = get_settings().tolerances()
    return base.with_overrides(args.tol_overrides) if args.tol_overrides else base


def _seed(args) -> int:
    return get_settings().default_seed if args.seed is None else args.seed


def _require_out(args) -> str:
    if not args.out:
        raise UsageError("--out is required")
    return args.out


def cmd_system_build(args) -> int:
    tol = _tolerances(args)
    out = _require_out(args)
    settings = get_settings()
    try:
        if args.kind == "finite":
            if args.N is None:
                raise UsageError("--kind finite needs --N")
            system: WeylSystem = build_finite_weyl(args.N, tol)
        else:
            system = build_planar_weyl(
                args.M if args.M is not None else settings.planar_fock_dim,
                args.L if args.L is not None else settings.planar_half_extent,
                args.h if args.h is not None else settings.planar_step,
                tol,
            )
    except InvalidGrid as e:
        raise UsageError(str(e)) from e
    save_system(out, system)
    print(json.dumps(system.descriptor()))
    return EXIT_OK


def cmd_kernel(args) -> int:
    out = _require_out(args)
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    if args.random:
        kernel = QuantizationKernel(random_density(args.dim, np.random.default_rng(_seed(args)), args.rank))
    else:
        kernel = QuantizationKernel.vacuum(args.dim)
    save_operator(out, kernel.T)
    return EXIT_OK


def cmd_quantize(args) -> int:
    tol = _tolerances(args)
    out = _require_out(args)
    system = load_system(args.system, tol)
    kernel = load_kernel(args.kernel, tol)
    f = resolve_function(args.function, system.carrier)
    gamma_f = quantize(system, kernel, f)
    save_operator(out, gamma_f)
    if args.csv:
        save_grid_csv(args.csv, f)
    tr = complex(np.trace(gamma_f.entries))
    print(f"trace: {tr.real:.15g}{tr.imag:+.3g}j")
    print(f"hermiticity_residual: {gamma_f.hermiticity_residual():.3e}")
    return EXIT_OK


def cmd_povm_build(args) -> int:
    tol = _tolerances(args)
    out = _require_out(args)
    system = load_system(args.system, tol)
    kernel = load_kernel(args.kernel, tol)
    try:
        partition = partition_from_spec(args.partition, system.carrier)
    except InvalidPartition as e:
        raise UsageError(str(e)) from e
    if args.table and not partition.is_singletons:
        raise UsageError("--table needs --partition singletons")
    povm = build_povm(system, kernel, partition)
    write_json(out, povm_to_json(povm))
    if args.table:
        write_json(args.table, map_table_to_json(map_table_from_povm(povm)))
    print(f"cells: {len(povm.partition)}")
    return EXIT_OK


def cmd_sample(args) -> int:
    tol = _tolerances(args)
    out = _require_out(args)
    povm = povm_from_json(read_json(args.povm), tol)
    rho = DensityOperator(load_operator(args.state), tol)
    counts = sample(povm, rho, args.shots, _seed(args))
    save_counts_csv(out, counts)
    return EXIT_OK


def cmd_recover(args) -> int:
    tol = _tolerances(args)
    out = _require_out(args)
    system = load_system(args.system, tol)
    source = load_table_or_povm(args.input, tol)
    table = map_table_from_povm(source) if isinstance(source, Povm) else source
    result = recover_kernel(system, table, max_dev=args.max_dev)
    save_operator(out, result.kernel.T)
    print(f"max_deviation: {result.max_deviation:.6e}")
    return EXIT_OK


def cmd_symbol(args) -> int:
    tol = _tolerances(args)
    out = args.csv or _require_out(args)
    system = load_system(args.system, tol)
    kernel = load_kernel(args.kernel, tol)
    symbol = dual_symbol(system, kernel, load_operator(args.operator))
    save_grid_csv(out, symbol)
    return EXIT_OK


def cmd_density(args) -> int:
    tol = _tolerances(args)
    out = args.csv or _require_out(args)
    system = load_system(args.system, tol)
    kernel = load_kernel(args.kernel, tol)
    levels = np.eye(system.fock_dim, dtype=np.complex128)
    for name in ("psi", "phi"):
        level = getattr(args, name)
        if not 0 <= level < system.fock_dim:
            raise UsageError(f"--{name} must be a level in [0, {system.fock_dim}), got {level}")
    table = complex_measure_density(system, kernel, levels[args.psi], levels[args.phi])
    save_grid_csv(out, table)
    total = table.integrate()
    print(f"total: {total.real:.15g}{total.imag:+.3g}j")
    return EXIT_OK


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    system = load_system(args.system, tol) if args.system else None
    kernel_op: Optional[Operator] = load_operator(args.kernel) if args.kernel else None
    if args.random_kernels < 0:
        raise UsageError("--random-kernels must be nonnegative")
    report = run_verification(args.suite, system, kernel_op, args.random_kernels, _seed(args), tol)
    text = report.model_dump_json(indent=2)
    if args.out:
        write_atomic(args.out, text + "\n")
    else:
        print(text)
    for record in report.failed:
        print(f"FAILED {record.check_id}: {record.detail or record.residual}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


DISPATCH = {
    ("system", "build"): cmd_system_build,
    ("kernel", None): cmd_kernel,
    ("quantize", None): cmd_quantize,
    ("povm", "build"): cmd_povm_build,
    ("sample", None): cmd_sample,
    ("recover", None): cmd_recover,
    ("symbol", None): cmd_symbol,
    ("density", None): cmd_density,
    ("verify", None): cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    settings = get_settings()
    configure_logging(args.log_level or settings.log_level, settings.log_file)
    handler = DISPATCH[(args.command, getattr(args, "action", None))]
    try:
        return handler(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except QuantizationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        # unreadable files, malformed JSON/YAML, bad override values
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
