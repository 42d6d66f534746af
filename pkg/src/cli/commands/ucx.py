from src.cli.commands.common import add_seed, parse_vector, run_single


def register(subparsers) -> None:
    parser = subparsers.add_parser("ucx", help="modulus of convexity, slices and the ℓ_p pipeline")
    parser.add_argument("--mode", choices=["modulus", "slice", "pipeline"], default="modulus")
    parser.add_argument("--p", type=float, default=2.0)
    parser.add_argument("--dim", type=int, default=2)
    parser.add_argument("--eps", type=float, required=True)
    parser.add_argument("--delta", type=float, help="slice depth (slice mode)")
    parser.add_argument("--functional", help="slice functional, comma-separated")
    parser.add_argument("--samples", type=int, help="slice sample count")
    parser.add_argument("--direction", help="fixture direction, comma-separated (pipeline mode)")
    parser.add_argument("--perturbation", type=float, help="bump height (pipeline mode)")
    parser.add_argument("--radius", type=float, default=0.1)
    parser.add_argument("--resolution", type=int, default=64)
    parser.add_argument("--timings", action="store_true", help="include wall times")
    add_seed(parser)
    parser.set_defaults(func=handle)


def handle(args) -> int:
    inputs = {
        "mode": args.mode,
        "model": {"kind": "lp", "dim": args.dim, "p": args.p},
        "eps": args.eps,
    }
    if args.mode == "slice":
        inputs["delta"] = args.delta
        inputs["functional"] = [float(v) for v in parse_vector(args.functional)]
        inputs["samples"] = args.samples
    if args.mode == "pipeline":
        inputs["direction"] = [float(v) for v in parse_vector(args.direction)]
        inputs["perturbation"] = args.perturbation
        inputs["radius"] = args.radius
        inputs["resolution"] = args.resolution
    return run_single("ucx", inputs, args.seed, args.timings)
