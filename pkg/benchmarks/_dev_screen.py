"""Dev scratch: screen solver configs across (sequence, init) pairs."""
import os
import sys

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
from concurrent.futures import ProcessPoolExecutor

from mctsqaoa import models, reward, npg, rng as rngmod
from mctsqaoa.baselines import sample_sequence
from mctsqaoa.reward import GateSequence

KIND = sys.argv[1] if len(sys.argv) > 1 else "ising1d"
JT = float(sys.argv[2]) if len(sys.argv) > 2 else 50.0
NSEQ = int(sys.argv[3]) if len(sys.argv) > 3 else 30
NINIT = int(sys.argv[4]) if len(sys.argv) > 4 else 4

CFG = npg.NpgConfig(
    batch_size=16,
    iters_per_stage=1200,
    restarts=3,
    learning_rate=(0.3, 0.1, 0.04),
    initial_inv_temp=0.05,
    temp_decay=0.5,
    eval_repeats=16,
    num_inits=1,
    init_mu_range=1.5,
    init_sigma=0.8,
    mu_clip=8.0,
    log_sigma_max=float(np.log(1.2)),
)


def make_model():
    if KIND == "ising1d":
        spec = models.ModelSpec(kind="ising1d", num_spins=8, total_duration=JT)
    elif KIND == "ising2d":
        spec = models.ModelSpec(kind="ising2d", num_spins=(3, 3), total_duration=JT)
    else:
        spec = models.ModelSpec(kind="lmg", num_spins=100, total_duration=JT)
    return models.build(spec)


_MODEL = None


def task(args):
    global _MODEL
    if _MODEL is None:
        _MODEL = make_model()
    si, seq_text, init = args
    seq = GateSequence.from_text(seq_text)
    ev = reward.RewardEvaluator(_MODEL)
    res = npg.inner_solve(ev, seq, CFG, rngmod.root(777).child("screen", si, init))
    durs = npg.durations_from_draws(res.params.mu, _MODEL.total_duration)
    ratio = ev.exact_ratio(seq, durs)
    return si, seq_text, init, ratio, ev.count


def main():
    rs = np.random.default_rng(42)
    seqs = [sample_sequence(5, 8, rs).as_text() for _ in range(NSEQ)]
    tasks = [(si, s, i) for si, s in enumerate(seqs) for i in range(NINIT)]
    best = {}
    with ProcessPoolExecutor(max_workers=2) as ex:
        for si, s, i, ratio, cnt in ex.map(task, tasks):
            best.setdefault(s, []).append(ratio)
            print(f"seq{si} {s} init{i}: {ratio:+.4f} ({cnt} evals)", flush=True)
    print("\nper-seq best:")
    arr = []
    for s, vals in best.items():
        arr.append(max(vals))
        print(f"  {s}: best {max(vals):+.4f}  all {[round(v, 3) for v in sorted(vals, reverse=True)]}")
    a = np.array(arr)
    print(f"\nmax {a.max():.4f}  p90 {np.quantile(a, .9):.4f}  med {np.median(a):.4f}")
    print(f"frac best>0.9: {np.mean(a > 0.9):.2f}  frac>0.94: {np.mean(a > 0.94):.2f}")
    print("evals/solve:", CFG.evals_per_solve)


if __name__ == "__main__":
    main()
