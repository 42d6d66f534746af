from src.cli.commands.common import add_seed, parse_vector, read_json, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("seminorm", help="seminorm experiments")
    modes = parser.add_subparsers(dest="mode", required=True)

    gap = modes.add_parser("gap", help="uniform versus Lipschitz distance of p_n and p_0")
    gap.add_argument("--n", type=int, required=True)

    jn = modes.add_parser("jn", help="truncated non-attaining seminorm")
    jn.add_argument("--n", type=int, required=True)
    jn.add_argument("--dim", type=int)

    bpb = modes.add_parser("bpb", help="correct an almost-attaining (p0, x0) over ℓ_∞")
    bpb.add_argument("p0", nargs="?", help='JSON {"functionals": [[...], ...]} (default: random)')
    bpb.add_argument("x0", nargs="?", help="comma-separated unit vector (default: generated)")
    bpb.add_argument("--delta", type=float, required=True)
    bpb.add_argument("--eps", type=float, required=True)
    bpb.add_argument("--dim", type=int, default=3)
    bpb.add_argument("--count", type=int, default=5)
    add_seed(bpb)

    parser.set_defaults(func=handle)


def handle(args) -> int:
    if args.mode == "gap":
        return run_single("seminorm", {"mode": "gap", "n": args.n})
    if args.mode == "jn":
        return run_single("seminorm", {"mode": "jn", "n": args.n, "dim": args.dim or args.n})
    inputs = {
        "mode": "bpb",
        "delta": args.delta,
        "eps": args.eps,
        "dim": args.dim,
        "count": args.count,
    }
    if args.p0:
        inputs["functionals"] = read_json(args.p0)["functionals"]
    if args.x0:
        inputs["x0"] = [float(v) for v in parse_vector(args.x0)]
    return run_single("seminorm", inputs, args.seed)
