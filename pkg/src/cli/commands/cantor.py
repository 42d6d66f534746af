from src.cli.commands.common import add_seed, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("cantor", help="fat Cantor set and its distance obstruction")
    parser.add_argument("--depth", type=int, required=True)
    parser.add_argument("--candidates", type=int, default=0, help="size of the candidate family")
    parser.add_argument(
        "--segment", type=int, default=0, metavar="N", help="also audit N candidates on a segment grid"
    )
    add_seed(parser)
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {"depth": args.depth, "candidates": args.candidates}
    if args.segment:
        inputs["segment"] = {"candidates": args.segment}
    return run_single("cantor", inputs, args.seed)
