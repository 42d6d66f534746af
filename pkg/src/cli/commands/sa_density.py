from src.cli.commands.common import read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sa-density", help="strongly attaining perturbations inside disjoint balls"
    )
    parser.add_argument("functional", nargs="?", help="functional JSON (default: built-in line fixture)")
    parser.add_argument("--balls", help="JSON list of balls {center, radius, eps, witness}")
    parser.add_argument("--count", type=int, default=4, help="balls in the built-in fixture")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    if args.functional is None:
        return run_single("sa-density", {"count": args.count})
    inputs = {"functional": read_json(args.functional), "balls": read_json(args.balls)}
    return run_single("sa-density", inputs)
