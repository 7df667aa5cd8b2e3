"""Monte Carlo check of the default operator profile mix.

Runs the full generation pipeline over several master seeds and prints the
corpus statistics next to their targets (570 kept, mean length 12.8, ratio
15.3%). Used to tune DEFAULT_PROFILE_MIX; rerun after any change to the
profiles or the fault catalog.

Run from the repo root:  python3 scripts/calibrate_profiles.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tocbench.operators import generate_dataset  # noqa: E402
from tocbench.robot import load_default_config  # noqa: E402

SEEDS = (7, 1, 2, 3, 11, 23)


def main() -> None:
    config = load_default_config()
    print(f"{'seed':>6} {'kept':>5} {'outliers':>8} {'unresolved':>10} {'mean_len':>8} {'ratio':>7}")
    for seed in SEEDS:
        res = generate_dataset(config, sessions_per_fault=30, seed=seed)
        stats = res.dataset.stats
        fr = res.filter_result
        print(
            f"{seed:>6} {stats.count:>5} {fr.removed_outliers:>8} {fr.removed_unresolved:>10} "
            f"{stats.mean_length:>8.2f} {stats.action_to_read_ratio:>7.4f}"
        )
    print(f"{'target':>6} {570:>5} {'~24':>8} {'~6':>10} {12.8:>8.2f} {0.153:>7.4f}")


if __name__ == "__main__":
    main()
