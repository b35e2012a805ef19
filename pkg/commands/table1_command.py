from handlers.run_config import RunConfig
from lib.contracts import CONTRACTS
from lib.garble import encode, eval_garbled, garble
from utils.logger_config import configure_logger
from utils.report import render_table
from utils.utils import derive_seed, phase_timer, seed_from_int

logger = configure_logger(__name__)

HEADERS = ("contract", "AND gates", "reference AND", "ratio", "garble s", "evaluate s")


def cmd_table1(config: RunConfig) -> tuple[str, dict]:
    """Gate counts of every registered contract next to the reference counts, with local garbling times."""
    seed = seed_from_int(config.seed)
    rows, report = [], {"seed": config.seed, "contracts": {}}
    for name, spec in CONTRACTS.items():
        timings: dict[str, float] = {}
        with phase_timer(timings, "build"):
            counts = spec.gate_counts
        with phase_timer(timings, "garble"):
            gc, encoding, _ = garble(spec.circuit, derive_seed(seed, name))
        with phase_timer(timings, "evaluate"):
            eval_garbled(gc, encode(encoding, [0] * spec.circuit.input_count))
        ratio = counts.and_count / spec.reference_and_count
        rows.append((spec.label, counts.and_count, spec.reference_and_count, ratio, timings["garble"], timings["evaluate"]))
        report["contracts"][name] = {
            "and_count": counts.and_count,
            "xor_count": counts.xor_count,
            "inv_count": counts.inv_count,
            "reference_and_count": spec.reference_and_count,
            "ratio": ratio,
            "fixed_point": spec.is_fixed_point,
            "timings": timings,
        }
        logger.info(f"{name}: {counts.and_count} AND gates, ratio {ratio:.3f}")
    return render_table(HEADERS, rows), report
