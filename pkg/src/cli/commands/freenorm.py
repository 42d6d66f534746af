from src.cli.commands.common import parse_vector, read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("freenorm", help="free-space norm by both LPs")
    parser.add_argument("space", help="space JSON")
    parser.add_argument("--weights", required=True, help="comma-separated weight per point")
    parser.add_argument("--decompose", action="store_true", help="also decompose into molecules")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {
        "space": read_json(args.space),
        "weights": parse_vector(args.weights),
        "decompose": args.decompose,
    }
    return run_single("freenorm", inputs)
