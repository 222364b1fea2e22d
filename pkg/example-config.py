from typing import Any

SETTINGS: dict[str, Any] = {
    # Maximum number of symbolic states explored per game
    # Exceeding it aborts the analysis with exit code 3
    # The ROBUSTA_LIMIT_STATES environment variable overrides it
    "LIMIT_STATES": 200000,
    # Defaults of `param` when --delta-max / --epsilon are not given
    # Integers, fractions ("1/10") or decimals ("0.1")
    "DELTA_MAX": "8",
    "EPSILON": "1/10",
    # cr, bs or both
    "METHOD": "both",
    # text or structured
    "REPORT_FORMAT": "text",
    # Benchmark cells solved concurrently
    "BENCH_WORKERS": 2,
    # Turn implementation warnings (output urgency, independent progress) into errors
    "STRICT_IMPLEMENTATION": False,
    # Where `complete` directives without a target send missing inputs: self or universal
    "COMPLETION_TARGET": "self",
    # How often the parametric replay may revisit one symbolic state
    "REPLAY_MAX_VISITS": 50,
    # Largest ring of the Milner benchmark suite
    "MILNER_MAX_NODES": 4,
    # Seed for randomized sampling
    "SEED": 0,
}
