from src.cli.commands.common import read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("norm", help="Lipschitz norm and strongly attaining pairs")
    parser.add_argument("functional", help="functional JSON (values and inline space)")
    parser.add_argument("--tol", type=float, default=None, help="attainment tolerance")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    return run_single("norm", {"functional": read_json(args.functional), "tol": args.tol})
