from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library settings loaded from environment variables (prefix ``LIPKIT_``)."""

    # Application Settings
    app_name: str = "lipkit"
    app_debug: bool = False

    # Metric Tolerances
    metric_tolerance: float = 1e-12
    dedup_tolerance: float = 1e-12
    betweenness_tolerance: float = 1e-9
    norm_tolerance: float = 1e-9
    duality_tolerance: float = 1e-7

    # Linear Programming Settings
    lp_backend: Literal["auto", "simplex", "highs"] = "auto"
    simplex_max_cells: int = 400_000
    simplex_pivot_tolerance: float = 1e-11
    simplex_max_iterations: int = 50_000
    lp_feasibility_tolerance: float = 1e-10

    # Corrector Settings
    bpb_max_rounds: int = 50
    bpb_progress_threshold: float = 1e-10
    bpb_candidate_limit: int = 8
    bpb_oracle_max_points: int = 5

    # Uniform Convexity Settings
    modulus_restarts: int = 20
    modulus_fallback_pairs: int = 1_000_000
    slice_samples: int = 10_000

    # Pipeline Settings
    recursion_limit: int = 25
    preliminary_steps: int = 20
    refinement_max_iters: int = 12

    # Runner Settings
    seed: int | None = None
    jobs: int = 1

    model_config = SettingsConfigDict(
        env_prefix="LIPKIT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        env_ignore_empty=True
    )


settings = Settings()
