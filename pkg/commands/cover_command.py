from itertools import product

from handlers.run_config import RunConfig
from lib.cover import cover_secure_probability, exact_cover_probability, mc_cover_probability, step_one_quota
from utils.logger_config import configure_logger
from utils.report import render_report, render_table
from utils.utils import derive_seed, seed_from_int

logger = configure_logger(__name__)

SWEEP_MAX_E = 8
SWEEP_MAX_O = 4
SIGMAS = 3.0
HEADERS = ("n_E", "n_O", "t_E", "t_O", "l", "formula", "fallback", "Monte Carlo", "agrees")


def sweep_grid(max_e: int = SWEEP_MAX_E, max_o: int = SWEEP_MAX_O) -> list[tuple[int, int, int, int, int]]:
    grid = []
    for n_e, n_o in product(range(2, max_e + 1), range(1, max_o + 1)):
        if n_o > n_e:
            continue
        for t_e, t_o, l in product(sorted({0, n_e // 2, n_e - 1}), sorted({0, n_o - 1}), sorted({step_one_quota(n_e, n_o), n_e})):
            grid.append((n_e, n_o, t_e, t_o, l))
    return grid


def cover_point(n_e: int, n_o: int, t_e: int, t_o: int, l: int, trials: int, seed: bytes) -> dict:
    formula, fallback = cover_secure_probability(n_e, n_o, t_e, t_o, l)
    estimate = mc_cover_probability(n_e, n_o, t_e, t_o, l, trials=trials, seed=seed)
    return {
        "parameters": {"n_E": n_e, "n_O": n_o, "t_E": t_e, "t_O": t_o, "l": l},
        "formula": formula,
        "fallback": fallback,
        "exact": float(exact_cover_probability(n_e, n_o, t_e, t_o, l)),
        "monte_carlo": {"estimate": estimate.estimate, "low": estimate.low, "high": estimate.high, "trials": estimate.trials},
        "agrees": estimate.within(formula, SIGMAS),
    }


def cmd_cover(config: RunConfig) -> tuple[str, dict]:
    seed = seed_from_int(config.seed)
    if not config.sweep:
        point = cover_point(config.n_e, config.n_o, config.t_e, config.t_o, config.l, config.trials, seed)
        return render_report("Secure cover probability", point), point

    points = []
    for n_e, n_o, t_e, t_o, l in sweep_grid():
        points.append(cover_point(n_e, n_o, t_e, t_o, l, config.trials, derive_seed(seed, f"{n_e}/{n_o}/{t_e}/{t_o}/{l}")))
    disagreements = [p["parameters"] for p in points if not p["agrees"]]
    if disagreements:
        logger.warning(f"{len(disagreements)} sweep points fall outside {SIGMAS} sigma: {disagreements}")
    rows = [(*p["parameters"].values(), p["formula"], p["fallback"], p["monte_carlo"]["estimate"], p["agrees"]) for p in points]
    report = {"seed": config.seed, "trials": config.trials, "points": points, "all_agree": not disagreements}
    return render_table(HEADERS, rows), report
