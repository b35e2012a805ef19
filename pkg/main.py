import argparse
import sys

from dotenv import load_dotenv

load_dotenv()

from handlers.error_handlers import EXIT_USAGE  # noqa: E402
from handlers.handler import handle  # noqa: E402
from handlers.run_config import Command, RunConfig  # noqa: E402
from utils.exceptions import UsageError  # noqa: E402


class UsageParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="veil", description="Private and verifiable smart-contract lab")
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", help="JSON file with defaults; flags override it")
    parser.add_argument("--seed", type=int, help="seed for every random choice of the run")
    parser.add_argument("--out", help="path of the machine-readable report")

    # run
    parser.add_argument("--contract", help="registered contract name")
    parser.add_argument("--inputs", nargs="+", help="one record per party; comma-separated fields within a record")
    parser.add_argument("--engine", help="engine, or comma-separated per-party selections ('none' for no selection)")
    parser.add_argument("--nodes", type=int, help="executing nodes, in garbler/evaluator pairs")
    parser.add_argument("--quorum", type=int, help="nodes that must agree before the result is committed")
    parser.add_argument("--policy", help="JSON security policy checked before execution")
    parser.add_argument("--level", type=int, choices=range(1, 5), help="verification level of the published package")
    parser.add_argument("--outsourced", action="store_true", default=None, help="upload inputs and run seccomp instead")

    # cover
    parser.add_argument("--n-e", dest="n_e", type=int)
    parser.add_argument("--n-o", dest="n_o", type=int)
    parser.add_argument("--t-e", dest="t_e", type=int)
    parser.add_argument("--t-o", dest="t_o", type=int)
    parser.add_argument("-l", dest="l", type=int, help="E-parties per O-party")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials")
    parser.add_argument("--sweep", action="store_true", default=None, help="compare formula and Monte Carlo over a grid")

    # estimate
    parser.add_argument("--bytecode-size", dest="bytecode_size", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.from_sources(vars(args), args.config)
    except (UsageError, ValueError, TypeError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE
    return handle(config)


if __name__ == "__main__":
    sys.exit(main())
