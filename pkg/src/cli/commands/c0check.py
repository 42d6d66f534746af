from src.cli.commands.common import add_seed, parse_vector, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("c0check", help="‖Σ a_j f_j‖ against max|a_k| for separated tents")
    parser.add_argument("--grid", type=int, default=201, help="points of the [0, 1] grid")
    parser.add_argument("--radius", type=float, default=0.1)
    parser.add_argument("--count", type=int, default=3)
    parser.add_argument("--coefficients", help="comma-separated a_j (default: random)")
    parser.add_argument("--locality-eps", type=float, default=0.05)
    add_seed(parser)
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {
        "grid": args.grid,
        "radius": args.radius,
        "count": args.count,
        "locality_eps": args.locality_eps,
    }
    if args.coefficients:
        inputs["coefficients"] = [float(v) for v in parse_vector(args.coefficients)]
    return run_single("c0check", inputs, args.seed)
