"""Print the maintenance policy of each shipped configuration as a region x interval grid."""
import sys
from pathlib import Path

from dtwin.config import load_config
from dtwin.pipeline import solve_policy

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def show(path):
    cfg = load_config(path)
    _, V, policy = solve_policy(cfg)
    sp, names = cfg.space, cfg.action_names
    print(f"{cfg.name}: gamma={cfg.gamma}, actions={names}")
    edges = [f"{lo:.2f}-{hi:.2f}" for lo, hi in sp.interval_bounds]
    print("        " + " ".join(f"{e:>9}" for e in edges))
    for j in range(1, sp.n_regions + 1):
        row = [names[policy[sp.index(j, k)]] for k in range(1, sp.n_intervals + 1)]
        print(f"  y={j:<3} " + " ".join(f"{a:>9}" for a in row))
    print(f"  undamaged: {names[policy[0]]}, value {V[0]:.2f}\n")


if __name__ == "__main__":
    for p in sys.argv[1:] or sorted(CONFIGS.glob("*.yaml")):
        show(p)
