from src.cli.commands.common import parse_vector, read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("bpb", help="correct an almost-attaining pair (f, w)")
    parser.add_argument("functional", help="functional JSON with ‖f‖ = 1")
    parser.add_argument("--weights", required=True, help="w as comma-separated point weights")
    parser.add_argument("--delta", type=float, required=True)
    parser.add_argument("--oracle", action="store_true", help="cross-check by brute force")
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {
        "functional": read_json(args.functional),
        "weights": parse_vector(args.weights),
        "delta": args.delta,
        "oracle": args.oracle,
    }
    return run_single("bpb", inputs)
