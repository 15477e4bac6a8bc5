"""``winprob`` command line: ingest, fit-priors, build-grid, fit-weights, evaluate, predict, simulate.

Exit codes: 0 success, 1 bad input, 2 internal error. Diagnostics go to
stderr; data goes to files (or stdout where noted).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from typing import Sequence

from . import __version__
from .adjust import DEFAULT_MODELS, DEFAULT_SIGMA, FITTED_B3, spread_to_prob
from .domain import GridKind, InputError, WeightFamily
from .evaluate import (
    DEFAULT_CHECKPOINTS,
    adjusted_source,
    compare_models,
    export_trajectory,
    external_source,
    grid_source,
)
from .fit import FitConfig, fit_weights
from .grid import build_bayes_grid, build_mle_grid
from .ingest import group_survey, parse_external_trajectory, parse_survey
from .priors import DEFAULT_PRIORS, PriorTable, build_prior_table, rounded
from .simgen import DEFAULT_POINTS, SimConfig, simulate_games
from . import store

log = logging.getLogger("winprob")

MODEL_CHOICES = ("dyn", "adj", "external", "mle")


def default_threads() -> int:
    env = os.environ.get("WINPROB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputError(f"WINPROB_THREADS={env!r} is not an integer") from None
        if value < 1:
            raise InputError("WINPROB_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise InputError("--threads must be at least 1")
        return args.threads
    return default_threads()


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_priors(spec: str) -> PriorTable:
    return DEFAULT_PRIORS if spec == "default" else store.read_priors(spec)


def _load_games(path: str, pregame: str | None = None):
    games = store.read_games(path, pregame)
    if not games:
        raise InputError(f"{path}: no games")
    return games


# --- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> None:
    games = _load_games(args.plays, args.pregame)
    store.write_games(games, args.out)
    if args.pregame_out:
        store.write_pregame({g.game_id: g.pregame_home_prob for g in games if g.pregame_home_prob is not None}, args.pregame_out)
    log.info("ingested %d games -> %s", len(games), args.out)


def cmd_fit_priors(args) -> None:
    fallback = _load_priors(args.fallback)
    table = build_prior_table(group_survey(parse_survey(args.survey)), fallback)
    if args.round:
        table = rounded(table)
    store.write_priors(table, args.out)


def cmd_build_grid(args) -> None:
    games = _load_games(args.games)
    threads = _threads(args)
    if args.kind == "mle":
        grid = build_mle_grid(games, threads=threads)
    else:
        grid = build_bayes_grid(games, priors=_load_priors(args.priors), threads=threads)
    store.write_grid(grid, args.out)
    log.info("built %s grid from %d games -> %s", grid.kind.value, len(games), args.out)


def cmd_fit_weights(args) -> None:
    threads = _threads(args)
    family = WeightFamily.parse(args.family)
    games = _load_games(args.train, args.pregame)
    if args.grid:
        bayes = store.read_grid(args.grid, GridKind.BAYES)
    else:
        bayes = build_bayes_grid(games, priors=_load_priors(args.priors), threads=threads)
    config = FitConfig(
        family,
        tuple(args.initial) if args.initial else DEFAULT_MODELS[family].coefficients,
        max_iterations=args.max_iter,
        simplex_tolerance=args.tol,
        restarts=args.restarts,
        seed=args.seed,
    )
    result = fit_weights(config, games, bayes, threads=threads)
    store.write_weights(result.model, args.out)
    if args.report:
        store.write_fit_report(result, args.report)
    if not result.converged:
        log.warning("fit did not converge within %d iterations", args.max_iter)
    log.info("fitted %s: brier=%r coefficients=%s", family.value, result.brier, result.model.as_dict())


def cmd_evaluate(args) -> None:
    threads = _threads(args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = set(models) - set(MODEL_CHOICES)
    if unknown:
        raise InputError(f"unknown model(s) {sorted(unknown)}; choose from {', '.join(MODEL_CHOICES)}")
    games = _load_games(args.games, args.pregame)
    entries = []
    for m in models:
        if m == "dyn":
            if not args.grid:
                raise InputError("model 'dyn' needs --grid")
            entries.append(("dyn", grid_source(store.read_grid(args.grid, GridKind.BAYES))))
        elif m == "adj":
            if not args.grid:
                raise InputError("model 'adj' needs --grid")
            missing = [g.game_id for g in games if g.pregame_home_prob is None]
            if missing:
                raise InputError(f"game {missing[0]} has no pregame probability (pass --pregame)")
            weights = store.read_weights(args.weights) if args.weights else FITTED_B3
            entries.append(("adj", adjusted_source(store.read_grid(args.grid, GridKind.BAYES), weights)))
        elif m == "external":
            if not args.external:
                raise InputError("model 'external' needs --external")
            entries.append(("external", external_source(parse_external_trajectory(args.external))))
        else:
            if not args.mle_grid:
                raise InputError("model 'mle' needs --mle-grid")
            entries.append(("mle", grid_source(store.read_grid(args.mle_grid, GridKind.MLE))))
    report = compare_models(entries, games, args.checkpoints, threads=threads)
    store.write_report(report, args.out)
    for row in report.rows:
        if row.note:
            log.warning("%s: %s", row.model, row.note)


def cmd_predict(args) -> None:
    games = {g.game_id: g for g in _load_games(args.games)}
    if args.game not in games:
        raise InputError(f"game {args.game} not found in {args.games}")
    if (args.pregame_prob is None) == (args.spread is None):
        raise InputError("pass exactly one of --pregame-prob and --spread")
    p = args.pregame_prob if args.pregame_prob is not None else spread_to_prob(args.spread, args.sigma)
    if not 0.0 < p < 1.0:
        raise InputError(f"pregame probability {p} outside (0, 1)")
    game = games[args.game].with_pregame(p)
    bayes = store.read_grid(args.grid, GridKind.BAYES)
    weights = store.read_weights(args.weights) if args.weights else FITTED_B3
    traj = export_trajectory([("dyn", grid_source(bayes)), ("adj", adjusted_source(bayes, weights))], game)
    store.write_trajectory(traj, args.out)


def cmd_simulate(args) -> None:
    config = SimConfig(
        n_games=args.n_games,
        seed=args.seed,
        home_strength=args.home_strength,
        possession_rate=args.possession_rate,
        point_distribution=args.points,
        strength_levels=args.strength_levels or (),
        pregame_mc=args.pregame_mc,
    )
    result = simulate_games(config, threads=_threads(args))
    store.write_games(result.games, args.out_plays)
    if args.out_pregame:
        store.write_pregame({g.game_id: g.pregame_home_prob for g in result.games}, args.out_pregame)
    log.info("simulated %d games (%d regulation ties)", len(result.games), len(result.tiebreak_game_ids))


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winprob", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, fn, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        p.set_defaults(func=fn)
        return p

    def threads(p):
        p.add_argument(
            "--threads", type=int, default=None,
            help="worker threads (default: $WINPROB_THREADS or the number of cores)",
        )

    p = add("ingest", cmd_ingest, "Validate a plays CSV and rewrite it in canonical form.")
    p.add_argument("--plays", required=True, help="plays CSV: game_id,elapsed_seconds,home_score,away_score")
    p.add_argument("--pregame", help="pregame CSV: game_id,home_win_prob")
    p.add_argument("--out", required=True, help="canonical plays CSV to write")
    p.add_argument("--pregame-out", help="pregame CSV restricted to the ingested games")

    p = add("fit-priors", cmd_fit_priors, "Fit the beta prior table from an expert survey.")
    p.add_argument("--survey", required=True, help="survey CSV: time_bucket,lead_bucket,respondent_id,win_prob")
    p.add_argument("--fallback", default="default", help="'default' (bundled table) or a priors CSV")
    p.add_argument("--round", action="store_true", help="round parameters to integers (nearest, at least 1)")
    p.add_argument("--out", required=True, help="priors CSV: t_lo,t_hi,lead_lo,lead_hi,alpha,beta")

    p = add("build-grid", cmd_build_grid, "Build a win-probability grid from games.")
    p.add_argument("--games", required=True, help="plays CSV")
    p.add_argument("--priors", default="default", help="'default' (bundled table) or a priors CSV")
    p.add_argument("--kind", choices=("bayes", "mle"), default="bayes", help="estimator (default: bayes)")
    p.add_argument("--out", required=True, help="grid CSV: t,lead,estimate,N,n")
    threads(p)

    p = add("fit-weights", cmd_fit_weights, "Fit pregame blend-weight coefficients by minimising Brier score.")
    p.add_argument("--family", required=True, choices=("b1", "b2", "b3", "B1", "B2", "B3"), help="weight family")
    p.add_argument("--train", required=True, help="plays CSV of training games")
    p.add_argument("--pregame", required=True, help="pregame CSV for the training games")
    p.add_argument("--grid", help="Bayes grid CSV (default: build from --train with --priors)")
    p.add_argument("--priors", default="default", help="priors used when --grid is absent")
    p.add_argument("--initial", type=_float_list, help="comma-separated starting coefficients")
    p.add_argument("--max-iter", type=int, default=2000, help="Nelder-Mead iteration cap per start")
    p.add_argument("--tol", type=float, default=1e-8, help="simplex tolerance")
    p.add_argument("--restarts", type=int, default=0, help="extra perturbed starts")
    p.add_argument("--seed", type=int, default=0, help="seed for restart perturbations")
    p.add_argument("--out", required=True, help="weights CSV: family,name,value")
    p.add_argument("--report", help="fit report CSV: family,brier,converged,iterations")
    threads(p)

    p = add("evaluate", cmd_evaluate, "Overall and checkpoint Brier scores for several models.")
    p.add_argument("--games", required=True, help="plays CSV of evaluation games")
    p.add_argument("--pregame", help="pregame CSV (needed by 'adj')")
    p.add_argument("--models", default="dyn,adj", help=f"comma list from {', '.join(MODEL_CHOICES)}")
    p.add_argument("--grid", help="Bayes grid CSV (for dyn and adj)")
    p.add_argument("--mle-grid", help="MLE grid CSV (for mle)")
    p.add_argument("--weights", help="weights CSV for adj (default: bundled B3 fit)")
    p.add_argument("--external", help="trajectory CSV: game_id,elapsed_seconds,home_win_prob")
    p.add_argument(
        "--checkpoints", type=_int_list, default=list(DEFAULT_CHECKPOINTS),
        help="minutes remaining, comma-separated (default: 24,12,6,3,1)",
    )
    p.add_argument("--out", required=True, help="report CSV: model,overall_brier,Q,ckpt...,note")
    threads(p)

    p = add("predict", cmd_predict, "Per-second win probabilities for one game.")
    p.add_argument("--games", required=True, help="plays CSV containing the game")
    p.add_argument("--game", required=True, help="game_id to export")
    p.add_argument("--pregame-prob", type=float, help="pregame home win probability")
    p.add_argument("--spread", type=float, help="expected home margin, converted with a normal CDF")
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA, help="margin standard deviation for --spread")
    p.add_argument("--grid", required=True, help="Bayes grid CSV")
    p.add_argument("--weights", help="weights CSV (default: bundled B3 fit)")
    p.add_argument("--out", required=True, help="trajectory CSV: t,lead,dyn,adj")

    p = add("simulate", cmd_simulate, "Generate synthetic games with known dynamics.")
    p.add_argument("--n-games", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--home-strength", type=float, default=0.0, help="relative scoring edge of the home team")
    p.add_argument("--strength-levels", type=_float_list, help="per-game strengths drawn uniformly (overrides --home-strength)")
    p.add_argument("--possession-rate", type=float, default=0.07, help="chance a possession ends in any second")
    p.add_argument(
        "--points", type=_float_list, default=DEFAULT_POINTS,
        help="probabilities of 0,1,2,3,4 points per possession",
    )
    p.add_argument("--pregame-mc", type=int, default=20000, help="Monte Carlo replicates for pregame probabilities")
    p.add_argument("--out-plays", required=True, help="plays CSV to write")
    p.add_argument("--out-pregame", help="pregame CSV to write")
    threads(p)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            logging.captureWarnings(True)
            args.func(args)
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2
    finally:
        logging.captureWarnings(False)
    return 0


def main() -> None:
    sys.exit(run())
