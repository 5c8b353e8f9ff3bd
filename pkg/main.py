"""
Sym-Cube Twist Lab - Command Line

Sub-commands:
    coeffs      Compute or fetch Hecke eigenvalues and write the coefficient cache
    lvalue      Root number and central value of one twist sym^3 f x chi_d
    moments     Dyadic sweep of the mixed-moment and period-proxy statistics
    grh-check   Prime-sum diagnostics, one CSV row per check

Usage:
    python main.py coeffs --form 1.12.a.a --terms 100000
    python main.py lvalue --form 1.12.a.a --d -7 --check
    python main.py moments --dmin 16 --dmax 128 --ell 0.5
    python main.py grh-check --format xlsx

Exit codes: 0 success, 1 assertion failure, 2 configuration error,
3 resource or network error.
"""

import sys
import argparse
import io
import logging
from pathlib import Path

# Fix Windows console encoding for Unicode characters
if sys.platform == 'win32':
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8')

from src import config_loader
from src import generate_reports
from src import grh
from src import load_data
from src import moments
from src.errors import ConfigurationError, ResourceError, SymCubeError
from src.hecke import EigenformSpec, sym_cube_dirichlet
from src.lvalue import evaluate, make_series, robustness_checks
from src.quadchar import DiscriminantFilter, dirichlet_L1, enumerate_discriminants, is_fundamental_discriminant

logger = logging.getLogger("symcube")


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('--config', default=config_loader.DEFAULT_CONFIG_PATH,
                        help=f'Path to config file (default: {config_loader.DEFAULT_CONFIG_PATH})')
    parent.add_argument('--form', help='Newform label, e.g. 1.12.a.a (replaces the configured forms)')
    parent.add_argument('--weight', type=int, help='Weight of --form when it is not in the config')
    parent.add_argument('--dmin', type=int, help='First dyadic block D')
    parent.add_argument('--dmax', type=int, help='Upper end 2D of the last block (blocks [D, 2D] with 2D <= dmax)')
    parent.add_argument('--residue', type=int, help='Residue class a of -d')
    parent.add_argument('--modulus', type=int, help='Modulus M0 of the residue class')
    parent.add_argument('--ell', help='Comma-separated weights l_1,l_2,...')
    parent.add_argument('--terms', type=int, help='Coefficient count N_max (term budget)')
    parent.add_argument('--threads', type=int, help='Worker threads')
    parent.add_argument('--cache-dir', help=f'Coefficient cache directory (env {config_loader.CACHE_ENV_VAR})')
    parent.add_argument('--offline', action='store_true', help='Never touch the network')
    parent.add_argument('--out', help='Output file or directory (default: paths.output_dir)')
    parent.add_argument('--format', choices=['csv', 'svg', 'xlsx'], default='csv',
                        help='Extra output format (CSV is always written)')
    return parent


def parse_arguments(argv=None):
    """Parse command-line arguments."""
    parent = _common_options()
    parser = argparse.ArgumentParser(
        description='Sym-Cube Twist Lab - central values of sym^3 twists by quadratic characters',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py coeffs --form 1.16.a.a --terms 200000
  python main.py lvalue --d -7
  python main.py lvalue --form 1.16.a.a --d -15 --check
  python main.py moments --dmin 16 --dmax 128 --threads 8 --format svg
  python main.py grh-check --offline
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('coeffs', parents=[parent], help='Write the coefficient cache')
    lvalue = sub.add_parser('lvalue', parents=[parent], help='One central value')
    lvalue.add_argument('--d', type=int, required=True, help='Negative fundamental discriminant')
    lvalue.add_argument('--check', action='store_true',
                        help='Also run the truncation and kernel robustness oracles')
    sub.add_parser('moments', parents=[parent], help='Dyadic moment sweep')
    sub.add_parser('grh-check', parents=[parent], help='Prime-sum diagnostic suite')
    return parser.parse_args(argv)


def _settings(config):
    return (config_loader.get_cache_dir(config),
            config_loader.get_database_settings(config),
            Path(config['paths'].get('fixtures_dir', 'tests/fixtures')),
            int(config['runtime'].get('max_terms', 10 ** 8)))


def _load_table(config, spec: EigenformSpec, N_max: int):
    cache_dir, db, fixtures, max_terms = _settings(config)
    return load_data.load_coefficients(spec, N_max, cache_dir, db, fixtures, max_terms)


def _sym_table(config, spec: EigenformSpec, N: int):
    return sym_cube_dirichlet(_load_table(config, spec, N), N, _settings(config)[3])


def _output_path(config, args, default_name: str) -> Path:
    if args.out:
        out = Path(args.out)
        if out.suffix:
            return out
        return out / default_name
    return config_loader.get_output_dir(config) / default_name


def _budget(config) -> int:
    """Coefficient budget: --terms, else experiment.terms."""
    return int(config['experiment'].get('terms', config['runtime'].get('max_terms')))


def cmd_coeffs(config, args) -> int:
    """Write (or extend) the coefficient cache of every configured form."""
    N_max = _budget(config)
    print(f"\n[2/3] Resolving {N_max} coefficients per form...")
    for spec in moments.ExperimentConfig.from_config(config).forms:
        table = _load_table(config, spec, N_max)
        print(f"✓ {spec.label}: a(2) = {table[2]}, N_max = {table.N_max}")
        if args.out:
            load_data.write_cache_file(_output_path(config, args, f"{spec.label}.coeffs"), table)
    print("\n[3/3] Cache up to date")
    return 0


def cmd_lvalue(config, args) -> int:
    """Print `d,epsilon,L_half,L1_chi,N_cut` for each configured form."""
    d = args.d
    if d >= 0 or not is_fundamental_discriminant(d):
        raise ConfigurationError(f"--d must be a negative fundamental discriminant, got {d}")
    cfg = moments.ExperimentConfig.from_config(config)
    L1 = dirichlet_L1(d)
    failed = False
    records = []
    print("d,epsilon,L_half,L1_chi,N_cut")
    for spec in cfg.forms:
        # truncation doubling needs twice the terms
        N = moments.required_terms(cfg, spec, abs(d)) * (2 if args.check else 1)
        if N > _budget(config):
            raise ResourceError(f"d={d} needs {N} coefficients, budget is {_budget(config)}")
        sym = _sym_table(config, spec, N)
        series = make_series(sym, d)
        cv = evaluate(series, cfg.afe, L1)
        records.append(cv)
        print(generate_reports.format_central_value(cv))
        if args.check:
            for name, check in robustness_checks(series, cfg.afe).items():
                status = "✓" if check['passed'] else "✗"
                print(f"  {status} {spec.label} {name}: {check['lhs']!r} vs {check['rhs']!r}")
                failed = failed or not check['passed']
    if args.out:
        generate_reports.write_central_values(_output_path(config, args, f"lvalue_{-d}.csv"), records)
    return 1 if failed else 0


def cmd_moments(config, args) -> int:
    """Run the dyadic sweep and write the report CSV (and SVG)."""
    cfg = moments.ExperimentConfig.from_config(config)
    N = moments.sweep_terms(cfg, _budget(config))
    print(f"\n[2/4] Building sym^3 coefficient tables ({N} terms)...")
    forms = {}
    for spec in cfg.forms:
        forms[spec.label] = _sym_table(config, spec, N)
        print(f"✓ {spec.label}")

    print(f"\n[3/4] Evaluating central values over blocks {list(cfg.blocks)}...")
    store = _output_path(config, args, "moments_report.csv").with_name("central_values.csv")
    reports, values = moments.run_experiment(
        cfg, forms, store, symplectic=bool(config['experiment'].get('symplectic_diagnostic', False)))
    failed = False
    for report in reports:
        print(f"\n  run '{report.run}' (l = {list(report.ells)})")
        for block in report.blocks:
            print(f"    D={block.D:>6}  #family={block.family_size:>5}  S={block.S:.6g}  "
                  f"T={block.T:.6g}  vanishing={block.vanishing}")
        print(f"    slope of log S: {report.slope_S:.4g} (predicted {report.predicted_S:g})")
        print(f"    slope of log T: {report.slope_T:.4g} (predicted {report.predicted_T:g})")
    if len(cfg.forms) >= 2:
        for D in cfg.blocks:
            T2, product = moments.cauchy_schwarz_check(cfg, D, values)
            ok = T2 <= product * (1 + 1e-12)
            failed = failed or not ok
            print(f"  {'✓' if ok else '✗'} Cauchy-Schwarz at D={D}: T^2 = {T2:.6g} <= {product:.6g}")

    print("\n[4/4] Writing reports...")
    csv_path = generate_reports.write_moment_report(_output_path(config, args, "moments_report.csv"),
                                                    reports)
    print(f"✓ {csv_path}")
    if args.format == 'svg':
        svg_path = generate_reports.plot_moment_report(
            _output_path(config, args, "moments_report.csv").with_suffix('.svg'), reports)
        print(f"✓ {svg_path}")
    return 1 if failed else 0


def cmd_grh_check(config, args) -> int:
    """Run the diagnostic suite; exit 1 if a hard check fails."""
    cfg = moments.ExperimentConfig.from_config(config)
    grh_cfg = config['grh']
    N = int(grh_cfg['variance_x'])
    print(f"\n[2/4] Loading coefficient tables ({N} terms)...")
    tables = [_load_table(config, spec, N) for spec in cfg.forms]

    print("\n[3/4] Central values for the Chandee diagnostic...")
    dmax = int(grh_cfg.get('chandee_dmax', 0))
    values = []
    if dmax >= 3:
        filt = DiscriminantFilter(3, cfg.residue, cfg.modulus, upper=dmax)
        needed = max(moments.required_terms(cfg, spec, dmax) for spec in cfg.forms)
        if needed > _budget(config):
            logger.warning(f"chandee_dmax={dmax} needs {needed} coefficients; diagnostic skipped")
        else:
            forms = {spec.label: _sym_table(config, spec, needed)
                     for spec in cfg.forms}
            pairs = [(d, label) for d in enumerate_discriminants(filt) for label in sorted(forms)]
            values = moments.evaluate_pairs(pairs, forms, cfg.afe, cfg.workers)
            print(f"✓ {len(values)} central values for |d| <= {dmax}")

    print("\n[4/4] Running diagnostics...")
    rows = grh.run_diagnostics(config, tables, values)
    for row in rows:
        mark = "✓" if row.passed else ("✗" if row.hard else "·")
        print(f"  {mark} {row.check:<26} lhs={row.lhs:.6g} rhs={row.rhs:.6g}")
    csv_path = generate_reports.write_diagnostics(_output_path(config, args, "grh_diagnostics.csv"), rows)
    print(f"✓ {csv_path}")
    if args.format == 'xlsx':
        xlsx_path = generate_reports.generate_diagnostics_workbook(
            rows, _output_path(config, args, "grh_diagnostics.csv").with_suffix('.xlsx'))
        print(f"✓ {xlsx_path}")
    failures = [row for row in rows if row.hard and not row.passed]
    if failures:
        print(f"\n✗ {len(failures)} hard check(s) failed")
        return 1
    return 0


STEPS = {'coeffs': 3, 'lvalue': 1, 'moments': 4, 'grh-check': 4}

COMMANDS = {
    'coeffs': cmd_coeffs,
    'lvalue': cmd_lvalue,
    'moments': cmd_moments,
    'grh-check': cmd_grh_check,
}


def main(argv=None) -> int:
    """Execute one sub-command and return its exit code."""
    args = parse_arguments(argv)
    quiet = args.command == 'lvalue'

    try:
        if not quiet:
            print("=" * 70)
            print(f"SYM-CUBE TWIST LAB - {args.command.upper()}")
            print("=" * 70)
            print(f"[1/{STEPS[args.command]}] Loading configuration...")
        config = config_loader.load_config(args.config)
        config = config_loader.apply_overrides(config, args)
        logging.basicConfig(level=config['runtime'].get('log_level', 'INFO'),
                            format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
        if not quiet:
            print(f"✓ Configuration loaded: {[f['label'] for f in config['forms']]}")
        code = COMMANDS[args.command](config, args)
        if not quiet and code == 0:
            print("\n✓ Completed successfully")
        return code

    except SymCubeError as e:
        print(f"\n✗ ERROR ({type(e).__name__}): {e}", file=sys.stderr)
        return e.exit_code

    except FileNotFoundError as e:
        print(f"\n✗ ERROR: {e}", file=sys.stderr)
        print("\nUse --help to see available options:", file=sys.stderr)
        print("  python main.py --help", file=sys.stderr)
        return 2

    except Exception as e:
        print(f"\n✗ ERROR: {e}", file=sys.stderr)
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
