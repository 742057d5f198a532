"""Command-line interface.

Subcommands map one-to-one onto the solver modules: ``dynamics`` (closed
form populations and intensities), ``steady`` (stationary distribution,
order parameter, susceptibility, optional r sweep), ``scaling`` (peak
scaling-law comparison table), ``mc`` (stochastic batches), ``meanfield``
(large-N asymptotics sweep), ``cavity-check`` (full model vs effective
cascade), ``verify`` (cross-validation matrix).  Every file written
embeds the resolved configuration; identical invocations produce
byte-identical artifacts.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 resource
cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import NumericalError, ResourceCapError, ValidationError
from .expsum import as_rate
from .fileio import write_csv, write_json
from .system import SystemSpec, lattice_size

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_RESOURCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION)


def _parse_rates(text: str) -> tuple[Fraction, ...]:
    try:
        return tuple(as_rate(part.strip()) for part in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse rates {text!r}: {exc}") from exc


def _parse_grid(args, spec: SystemSpec) -> np.ndarray:
    gamma_min = min(float(g) for g in spec.channels)
    t_max = args.t_max if args.t_max is not None else 5.0 / (spec.n_emitters * gamma_min)
    if args.t_scale == "log":
        t_min = args.t_min if args.t_min is not None else t_max * 1e-4
        if t_min <= 0:
            raise ValidationError("log grids need --t-min > 0")
        return np.geomspace(t_min, t_max, args.t_count)
    t_min = args.t_min if args.t_min is not None else 0.0
    if t_min < 0 or t_max <= t_min:
        raise ValidationError("need 0 <= t-min < t-max")
    return np.linspace(t_min, t_max, args.t_count)


def _parse_r_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValidationError("--r-grid expects start:stop:count[:log]")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1 or start <= 0 or stop <= start:
        raise ValidationError("--r-grid bounds must satisfy 0 < start < stop, count >= 1")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ValidationError("--r-grid scale must be 'log' when given")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _spec_config(spec: SystemSpec, **extra) -> dict:
    cfg = {
        "n_emitters": spec.n_emitters,
        "rates": ",".join(str(g) for g in spec.channels),
    }
    cfg.update(extra)
    return cfg


def _write(args, schema, config, columns, rows):
    if args.format == "json":
        write_json(args.out, schema, config, {"columns": columns, "rows": list(rows)})
    else:
        write_csv(args.out, schema, config, columns, rows)


# -- subcommands -------------------------------------------------------


def cmd_dynamics(args) -> int:
    from .trajectory import solve_balanced, solve_multichannel, solve_single_channel

    spec = SystemSpec(args.n, _parse_rates(args.rates))
    ts = _parse_grid(args, spec)
    bits = args.precision_bits
    if args.engine == "ode":
        if args.symbolic:
            raise ValidationError("--symbolic needs the closed-form engine")
        return _dynamics_via_oracle(args, spec, ts)
    if args.symbolic and args.format != "json":
        raise ValidationError("--symbolic requires --format json")
    if spec.d == 1:
        table = solve_single_channel(spec, precision_bits=bits)
        level_mode = False
    elif spec.is_balanced and not args.per_state:
        # balanced lattices collapse onto N+1 level populations; the full
        # per-state table is only worth materializing on explicit request
        table = solve_balanced(spec, precision_bits=bits)
        level_mode = True
    else:
        if lattice_size(spec.n_emitters, spec.d) > 5000:
            raise ResourceCapError(
                f"{lattice_size(spec.n_emitters, spec.d)} per-state columns requested; "
                "use balanced rates (level output) or a smaller system"
            )
        table = solve_multichannel(spec, precision_bits=bits, lattice_cap=args.lattice_cap)
        level_mode = False

    if args.symbolic:
        if level_mode:
            pops_doc = {
                f"m{m}": table.level_population(m).to_json_dict()
                for m in range(spec.n_emitters + 1)
            }
        else:
            pops_doc = {
                "_".join(str(x) for x in s): table.population(s).to_json_dict()
                for s in table.states
            }
        payload = {
            "representation": "levels" if level_mode else "states",
            "populations": pops_doc,
            "intensities": {
                **{f"channel_{a + 1}": table.intensity(a).to_json_dict() for a in range(spec.d)},
                "total": table.intensity(None).to_json_dict(),
            },
        }
        config = _spec_config(
            spec, command="dynamics", engine="closed", symbolic=True,
            precision_bits=bits or "auto",
        )
        write_json(args.out, "multidicke/dynamics-symbolic", config, payload)
        return EXIT_OK

    if level_mode:
        labels = [f"p_m{m}" for m in range(spec.n_emitters + 1)]
        pops = np.column_stack(
            [table.level_population(m).evaluate_grid(ts) for m in range(spec.n_emitters + 1)]
        )
    else:
        states = table.states
        labels = ["p_" + "_".join(str(x) for x in s) for s in states]
        pops = table.evaluate_grid(ts)
    intensities = [table.intensity(a).evaluate_grid(ts) for a in range(spec.d)]
    itot = table.intensity(None).evaluate_grid(ts)
    columns = ["t"] + labels + [f"intensity_{a + 1}" for a in range(spec.d)] + ["intensity_total"]
    rows = (
        [ts[i]] + list(pops[i]) + [ii[i] for ii in intensities] + [itot[i]]
        for i in range(len(ts))
    )
    config = _spec_config(
        spec,
        command="dynamics",
        engine="closed",
        precision_bits=bits or "auto",
        representation="levels" if level_mode else "states",
    )
    _write(args, "multidicke/dynamics", config, columns, rows)
    return EXIT_OK


def _dynamics_via_oracle(args, spec, ts) -> int:
    """Same output schema as the closed-form engine, columns diffable."""
    from .rate_ode import integrate as ode_integrate

    if lattice_size(spec.n_emitters, spec.d) > 5000:
        raise ResourceCapError("too many state columns for the ODE engine output")
    pops, states = ode_integrate(spec, ts)
    labels = ["p_" + "_".join(str(x) for x in s) for s in states]
    gammas = spec.channels_float()
    n = spec.n_emitters
    per_channel = []
    for alpha in range(spec.d):
        weights = np.array([(n - sum(s)) * (s[alpha] + 1) * gammas[alpha] for s in states])
        per_channel.append(pops @ weights)
    itot = np.sum(per_channel, axis=0)
    columns = ["t"] + labels + [f"intensity_{a + 1}" for a in range(spec.d)] + ["intensity_total"]
    rows = (
        [ts[i]] + list(pops[i]) + [ic[i] for ic in per_channel] + [itot[i]]
        for i in range(len(ts))
    )
    config = _spec_config(spec, command="dynamics", engine="ode", representation="states")
    _write(args, "multidicke/dynamics", config, columns, rows)
    return EXIT_OK


def cmd_steady(args) -> int:
    from .steady import order_parameter, steady_state_general, steady_state_two_channel

    if args.sweep is not None:
        grid = _parse_r_grid(args.sweep)
        rows = []
        for r in grid:
            pt = order_parameter(args.n, as_rate(float(r)))
            rows.append([pt.r, pt.n_bar_2, pt.susceptibility])
        config = {"n_emitters": args.n, "command": "steady-sweep", "r_grid": args.sweep}
        _write(args, "multidicke/steady-sweep", config, ["r", "n_bar_2", "susceptibility"], rows)
        return EXIT_OK
    if args.ratio is not None:
        r = as_rate(args.ratio)
        dist = steady_state_two_channel(args.n, r, precision_bits=args.precision_bits or 192)
        pt = order_parameter(args.n, r, precision_bits=args.precision_bits or 192)
        probs = dist.by_x()
        config = {
            "n_emitters": args.n,
            "command": "steady",
            "ratio": str(r),
            "n_bar_2": repr(pt.n_bar_2),
            "susceptibility": repr(pt.susceptibility),
        }
        rows = ([x, probs[x]] for x in range(args.n + 1))
        _write(args, "multidicke/steady", config, ["x", "probability"], rows)
        return EXIT_OK
    if args.rates is None:
        raise ValidationError("steady needs --ratio (two channels) or --rates")
    spec = SystemSpec(args.n, _parse_rates(args.rates))
    dist = steady_state_general(spec, precision_bits=args.precision_bits)
    columns = [f"n_{a + 1}" for a in range(spec.d)] + ["probability"]
    rows = (list(s) + [float(p)] for s, p in zip(dist.states, dist.probabilities))
    _write(args, "multidicke/steady", _spec_config(spec, command="steady"), columns, rows)
    return EXIT_OK


def cmd_scaling(args) -> int:
    from .trajectory import find_peak, solve_balanced

    n = args.n
    d_list = [int(x) for x in args.d_list.split(",")]
    rows = []
    for d in d_list:
        if d < 1:
            raise ValidationError("channel counts must be positive")
        spec = SystemSpec(n, (Fraction(1, d),) * d)
        cascade = solve_balanced(spec, precision_bits=args.precision_bits)
        t_peak, i_peak = find_peak(cascade.intensity())
        i_pred = (n + d - 1) ** 2 / (4 * d + 1)
        t_pred = float(np.log(n / d) * d / (n + d - 1))
        rows.append([d, i_peak, i_pred, i_peak / i_pred, t_peak, t_pred, t_peak / t_pred])
    config = {"n_emitters": n, "command": "scaling", "d_list": args.d_list}
    _write(
        args,
        "multidicke/scaling",
        config,
        ["d", "i_peak", "i_predicted", "i_ratio", "t_peak", "t_predicted", "t_ratio"],
        rows,
    )
    return EXIT_OK


def cmd_mc(args) -> int:
    from .stochastic import estimate_intensity, simulate_batch

    spec = SystemSpec(args.n, _parse_rates(args.rates))

    def progress(done, total):
        print(f"\rtrajectories {done}/{total}", end="", file=sys.stderr, flush=True)
        if done == total:
            print(file=sys.stderr)

    batch = simulate_batch(
        spec,
        args.trajectories,
        args.seed,
        n_bins=args.bins,
        backend=args.backend,
        record=args.record,
        progress=progress,
    )
    est = estimate_intensity(batch)
    columns = (
        ["bin_lo", "bin_hi", "bin_center"]
        + [f"rate_{a + 1}" for a in range(spec.d)]
        + ["rate_total"]
        + [f"std_error_{a + 1}" for a in range(spec.d)]
    )
    nb = len(est.centers)
    rows = (
        [est.bin_edges[i], est.bin_edges[i + 1], est.centers[i]]
        + list(est.rates[i])
        + [est.total_rate[i]]
        + list(est.std_errors[i])
        for i in range(nb)
    )
    nbars = [batch.n_bar(a) for a in range(spec.d)]
    config = _spec_config(
        spec,
        command="mc",
        trajectories=args.trajectories,
        seed=args.seed,
        scheme=batch.scheme,
        backend=batch.backend,
        **{f"n_bar_{a + 1}": repr(nbars[a][0]) for a in range(spec.d)},
    )
    _write(args, "multidicke/mc", config, columns, rows)
    if args.final_out:
        states = sorted(batch.final_states)
        write_csv(
            args.final_out,
            "multidicke/mc-final",
            config,
            [f"n_{a + 1}" for a in range(spec.d)] + ["count"],
            (list(s) + [batch.final_states[s]] for s in states),
        )
    return EXIT_OK


def cmd_meanfield(args) -> int:
    from .meanfield import order_parameter_asymptotic, susceptibility_asymptotic
    from .steady import order_parameter

    n_list = [int(x) for x in args.n_list.split(",")]
    grid = _parse_r_grid(args.r_grid)
    points = [(n, float(r)) for n in n_list for r in grid]

    def point_row(point):
        n, r = point
        asym_n = order_parameter_asymptotic(n, r)
        asym_chi = susceptibility_asymptotic(n, r)
        if args.skip_exact:
            exact_n = exact_chi = float("nan")
        else:
            pt = order_parameter(n, as_rate(r))
            exact_n, exact_chi = pt.n_bar_2, pt.susceptibility
        return [n, r, exact_n, asym_n, exact_chi, asym_chi]

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(point_row, points))
    else:
        rows = [point_row(p) for p in points]
    config = {
        "command": "meanfield",
        "n_list": args.n_list,
        "r_grid": args.r_grid,
        "skip_exact": args.skip_exact,
    }
    _write(
        args,
        "multidicke/meanfield",
        config,
        ["n_emitters", "r", "n_bar_2_exact", "n_bar_2_asym", "chi_exact", "chi_asym"],
        rows,
    )
    return EXIT_OK


def cmd_cavity_check(args) -> int:
    from .cavity import CavityModel, convergence_sweep, dicke_reference, effective_rates, simulate_full

    ratios = tuple(float(x) for x in args.ratios.split(","))

    def one_ratio(ratio):
        return convergence_sweep(
            n_emitters=args.n,
            fock_cutoff=args.cutoff,
            kappa_over_g=(ratio,),
            coupling=args.coupling,
            points=args.t_count,
        )[0]

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows_iter = list(pool.map(one_ratio, ratios))
    else:
        rows_iter = [one_ratio(r) for r in ratios]
    config = {
        "command": "cavity-check",
        "n_emitters": args.n,
        "fock_cutoff": args.cutoff,
        "coupling": args.coupling,
        "ratios": args.ratios,
    }
    _write(
        args,
        "multidicke/cavity-check",
        config,
        ["kappa_over_g", "max_deviation", "rel_deviation", "trace_error", "max_tail_population"],
        ([r["kappa_over_g"], r["max_deviation"], r["rel_deviation"], r["trace_error"], r["max_tail_population"]] for r in rows_iter),
    )
    if args.curves_prefix:
        for ratio in ratios:
            model = CavityModel(args.n, args.coupling, ratio * args.coupling, fock_cutoff=args.cutoff)
            gamma = effective_rates(model).gamma_eff
            ts = np.linspace(0.0, 5.0 / gamma, args.t_count)
            full = simulate_full(model, ts)
            ref = dicke_reference(model, ts)
            write_csv(
                f"{args.curves_prefix}_kg{ratio:g}.csv",
                "multidicke/cavity-curve",
                {**config, "kappa_over_g": ratio},
                ["t", "sdag_s_full", "sdag_s_dicke", "photon_number"],
                (
                    [ts[i], full.sdag_s[i], ref[i], full.photon_number[i]]
                    for i in range(len(ts))
                ),
            )
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_verification

    results = run_verification(quick=not args.full, seed=args.seed)
    config = {"command": "verify", "quick": not args.full, "seed": args.seed}
    write_csv(
        args.out,
        "multidicke/verify",
        config,
        ["check", "status", "metric", "threshold", "detail"],
        (r.row() for r in results),
    )
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}  {r.metric:.3e}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multidicke", description=__doc__)
    parser.add_argument("--version", action="version", version=f"multidicke {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, grid=False):
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--precision-bits", type=int, default=None)
        p.add_argument("--threads", type=int, default=1, help="worker cap for sweeps")
        if grid:
            p.add_argument("--t-scale", choices=("lin", "log"), default="lin")
            p.add_argument("--t-min", type=float, default=None)
            p.add_argument("--t-max", type=float, default=None)
            p.add_argument("--t-count", type=int, default=200)

    p = sub.add_parser("dynamics", help="closed-form populations and intensities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", required=True, help="comma-separated channel rates")
    p.add_argument(
        "--per-state",
        action="store_true",
        help="per-state columns for balanced systems (default: level populations)",
    )
    p.add_argument(
        "--engine",
        choices=("closed", "ode"),
        default="closed",
        help="closed-form solver or the rate-equation integrator (same schema)",
    )
    p.add_argument(
        "--symbolic",
        action="store_true",
        help="emit exact term lists (JSON) instead of a sampled time grid",
    )
    p.add_argument("--lattice-cap", type=int, default=2_000_000)
    add_common(p, grid=True)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("steady", help="stationary distribution and order parameter")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ratio", default=None, help="two-channel rate ratio r")
    p.add_argument("--rates", default=None, help="general channel rates")
    p.add_argument("--sweep", default=None, help="r sweep start:stop:count[:log]")
    add_common(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("scaling", help="peak intensity/time vs channel count")
    p.add_argument("--n", type=int, default=150)
    p.add_argument("--d-list", default="1,2,4,8")
    add_common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("mc", help="stochastic trajectory batches")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", required=True)
    p.add_argument("--trajectories", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--backend", choices=("compiled", "python"), default=None)
    p.add_argument("--record", action="store_true")
    p.add_argument("--final-out", default=None, help="also write final-state histogram")
    add_common(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("meanfield", help="large-N asymptotics sweep")
    p.add_argument("--n-list", required=True)
    p.add_argument("--r-grid", required=True, help="start:stop:count[:log]")
    p.add_argument("--skip-exact", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("cavity-check", help="full cavity model vs effective cascade")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--cutoff", type=int, default=10)
    p.add_argument("--ratios", default="1,3,10,30,100")
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--t-count", type=int, default=400)
    p.add_argument("--curves-prefix", default=None)
    add_common(p)
    p.set_defaults(func=cmd_cavity_check)

    p = sub.add_parser("verify", help="run the cross-validation matrix")
    p.add_argument("--full", action="store_true", help="include the slow checks")
    p.add_argument("--quick", action="store_true", help="quick set (default)")
    p.add_argument("--seed", type=int, default=1)
    add_common(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
