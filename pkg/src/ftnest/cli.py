"""``ftnest`` command line: simulate, build datasets, train, evaluate, estimate.

Every numeric result goes to stdout as tab-separated text with full float64
precision. Progress and the chosen seed go to stderr.

Settings come from, in increasing priority: built-in defaults, an optional
``--config`` file of ``key = value`` lines, and command-line flags.
"""

from __future__ import annotations

import argparse
import os
import secrets
import sys
from pathlib import Path

from . import mlp
from .dataset import gen_dataset, read_dataset, write_dataset
from .dsp import FtnLink, grid_interval, read_stream, receive, srrc_taps, write_stream
from .errors import FormatError, FtnError, ParameterError
from .estimator import Hypothesis, estimate, train_hypothesis
from .metrics import ConfusionTable, confusion, m99_pool, m_99, p_acc, snr_sweep

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_FORMAT = 0, 1, 2, 3

DEFAULT_POOL = (1.0, 0.8, 0.6)


def model_path(models_dir, alpha_k: float) -> Path:
    return Path(models_dir) / f"model_{alpha_k:g}.ftnw"


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).replace(",", " ").split()]


def _flatten(values):
    if values is None:
        return None
    out = []
    for v in values:
        out.extend(v if isinstance(v, list) else [v])
    return out


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys may use dashes or underscores."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _workers() -> int:
    env = os.environ.get("FTN_THREADS")
    if not env:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ParameterError(f"FTN_THREADS must be an integer, got {env!r}") from None
    return max(1, min(n, os.cpu_count() or 1))


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed\t{args.seed}", file=sys.stderr)
    return args.seed


def _pulse(args):
    return srrc_taps(args.roll_off, args.span, args.grid)


def _pool(args) -> list[float]:
    pool = _flatten(args.pool) or list(DEFAULT_POOL)
    for a in pool:
        grid_interval(a, args.grid)
    return pool


def _load_models(args, pool) -> dict[float, Hypothesis]:
    hyps = {}
    for a in pool:
        path = model_path(args.models_dir, a)
        if path.exists():
            hyps[a] = Hypothesis(a, mlp.load_model(path), args.grid, normalize=not args.raw)
    if not hyps:
        raise ParameterError(f"no model_<alpha>.ftnw files for pool {pool} in {args.models_dir}")
    return hyps


# subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    link = FtnLink(args.alpha, args.ebn0, seed=_seed(args), n_symbols=args.symbols)
    _, rx = receive(link, _pulse(args), guard=args.guard)
    write_stream(rx, args.out)
    print(f"samples\t{rx.data.size}\ngroup_delay\t{rx.group_delay}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    ds = gen_dataset(args.alpha_k, _pool(args), args.ebn0, args.groups, _seed(args), _pulse(args))
    write_dataset(ds, args.out)
    print(f"records\t{len(ds)}\npositives\t{int(ds.labels.sum())}")
    return EXIT_OK


def cmd_train(args) -> int:
    ds = read_dataset(args.data)
    cfg = mlp.TrainConfig(args.epochs, args.lr, args.batch, _seed(args))
    dims = tuple(_flatten(args.dims))
    print("epoch\tloss\tseconds", flush=True)
    hyp, _ = train_hypothesis(ds, dims, cfg, normalize=not args.raw, log=sys.stdout)
    mlp.save_model(hyp.model, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    pool = _pool(args)
    table = confusion(_load_models(args, pool), pool, args.ebn0, args.groups, _seed(args),
                      _pulse(args), _workers())
    sys.stdout.write(table.to_tsv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    pool = _pool(args)
    tables = snr_sweep(_load_models(args, pool), pool, _flatten(args.ebn0_list), args.groups,
                       _seed(args), _pulse(args), _workers())
    print("ebn0_db\talpha\talpha_k\tp_true")
    for t in tables:
        for i, a in enumerate(t.alphas):
            for j, ak in enumerate(t.alpha_ks):
                print(f"{float(t.ebn0_db)!r}\t{float(a)!r}\t{float(ak)!r}\t{float(t.p_true[i, j])!r}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    stream = read_stream(args.input)
    if stream.I != args.grid:
        args.grid = stream.I
    hyps = _load_models(args, _pool(args))
    res = estimate(stream, list(hyps.values()), args.M, args.threshold, _workers())
    print(f"chosen_alpha\t{float(res.chosen_alpha)!r}")
    print(f"tie\t{int(res.tie)}")
    print("alpha_k\tmax_count\tbest_branch")
    for r in res.reports:
        print(f"{float(r.alpha_k)!r}\t{r.max_count}\t{r.best_branch}")
    return EXIT_OK


def cmd_pacc(args) -> int:
    print(f"{float(p_acc(args.p1, args.p2, args.M))!r}")
    return EXIT_OK


def cmd_m99(args) -> int:
    print(m_99(args.p1, args.p2, args.target))
    return EXIT_OK


def cmd_m99_pool(args) -> int:
    table = ConfusionTable.from_tsv(Path(args.table).read_text())
    per_alpha = m99_pool(table, _flatten(args.pool) or table.alpha_ks, args.target)
    print("alpha\tm99")
    for a, m in per_alpha.items():
        print(f"{float(a)!r}\t{m}")
    print(f"pool_max\t{max(per_alpha.values())}")
    return EXIT_OK


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--seed", type=int, help="omit for a random seed (printed to stderr)")
    common.add_argument("--roll-off", type=float, default=0.3)
    common.add_argument("--span", type=int, default=96, help="pulse span in Nyquist periods")
    common.add_argument("--grid", type=int, default=20, help="samples per Nyquist period (I)")

    pool = argparse.ArgumentParser(add_help=False)
    pool.add_argument("--pool", type=_floats, nargs="+", help="candidate ratios, e.g. 1,0.8,0.6")

    models = argparse.ArgumentParser(add_help=False)
    models.add_argument("--models-dir", default=".", help="directory of model_<alpha_k>.ftnw files")
    models.add_argument("--raw", action="store_true", help="feed groups without per-group RMS scaling")

    p = argparse.ArgumentParser(prog="ftnest", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="write a matched-filter sample stream")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--ebn0", type=float, default=4.0, help="dB; inf for noiseless")
    s.add_argument("--symbols", type=int, default=1000)
    s.add_argument("--guard", type=int, default=0, help="extra symbols trimmed from each end")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen-data", parents=[common, pool], help="write a labelled group dataset")
    s.add_argument("--alpha-k", type=float, required=True)
    s.add_argument("--ebn0", type=float, default=4.0)
    s.add_argument("--groups", type=int, default=200_000)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", parents=[common, models], help="train one hypothesis network")
    s.add_argument("--data", required=True)
    s.add_argument("--dims", type=_ints, nargs="+", default=list(mlp.DESK_DIMS))
    s.add_argument("--epochs", type=int, default=50)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--batch", type=int, default=64)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common, pool, models], help="confusion table as TSV")
    s.add_argument("--ebn0", type=float, default=4.0)
    s.add_argument("--groups", type=int, default=3000)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", parents=[common, pool, models], help="confusion tables over Eb/N0")
    s.add_argument("--ebn0-list", type=_floats, nargs="+", default=[0.0, 2.0, 4.0, 6.0, 8.0])
    s.add_argument("--groups", type=int, default=3000)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("estimate", parents=[common, pool, models], help="blind estimate from a stream file")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--M", type=int, default=60)
    s.add_argument("--threshold", type=float, default=0.5)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("pacc", parents=[common], help="probability the count-argmax rule is right")
    s.add_argument("--p1", type=float, required=True)
    s.add_argument("--p2", type=float, required=True)
    s.add_argument("--M", type=int, required=True)
    s.set_defaults(func=cmd_pacc)

    s = sub.add_parser("m99", parents=[common], help="fewest decisions reaching the target accuracy")
    s.add_argument("--p1", type=float, required=True)
    s.add_argument("--p2", type=float, required=True)
    s.add_argument("--target", type=float, default=0.99)
    s.set_defaults(func=cmd_m99)

    s = sub.add_parser("m99-pool", parents=[common, pool], help="m99 per ratio from a confusion TSV")
    s.add_argument("--table", required=True)
    s.add_argument("--target", type=float, default=0.99)
    s.set_defaults(func=cmd_m99_pool)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    subs = parser._subparsers._group_actions[0].choices
    command = next((a for a in rest if a in subs), None)
    if known.config and command:
        sub = subs[command]
        actions = {a.dest: a for a in sub._actions if a.option_strings}
        defaults = {}
        for key, value in read_config(known.config).items():
            action = actions.get(key)
            if action is None:
                raise ParameterError(f"unknown config key {key!r} for {command}")
            if action.const is True:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                conv = action.type or str
                defaults[key] = [conv(value)] if action.nargs == "+" else conv(value)
            action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except FormatError as e:
        print(f"ftnest: format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (ParameterError, OSError) as e:
        print(f"ftnest: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FtnError as e:
        print(f"ftnest: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
