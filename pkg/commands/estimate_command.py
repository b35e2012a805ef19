from handlers.run_config import RunConfig
from lib.verify import estimate_pcc_times
from utils.constants import CERTIFICATE_OVERHEAD
from utils.report import render_report


def cmd_estimate(config: RunConfig) -> tuple[str, dict]:
    estimate = estimate_pcc_times(config.bytecode_size)
    report = {
        "bytecode_size": config.bytecode_size,
        "generation_seconds": estimate.gen_seconds,
        "verification_seconds": estimate.verify_seconds,
        "certified_size_bytes": estimate.certified_size_bytes,
        "certificate_overhead": CERTIFICATE_OVERHEAD,
    }
    return render_report("Proof-carrying code estimate", report), report
