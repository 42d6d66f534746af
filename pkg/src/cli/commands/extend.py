from src.cli.commands.common import read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("extend", help="McShane extension to a larger space")
    parser.add_argument("functional", help="functional JSON on the subspace")
    parser.add_argument("target", help="space JSON of the target")
    parser.add_argument("--variant", choices=["inf", "sup", "midpoint"], default="midpoint")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {
        "functional": read_json(args.functional),
        "target": read_json(args.target),
        "variant": args.variant,
    }
    return run_single("extend", inputs)
