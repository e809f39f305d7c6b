"""Dev scratch: exact-gradient multi-start reference optima per sequence.

Not part of the package; used to calibrate solver quality targets.
"""
import sys
import numpy as np
from scipy.optimize import minimize

from mctsqaoa import models, reward
from mctsqaoa.reward import GateSequence
from mctsqaoa.baselines import sample_sequence, enumerate_sequences
from mctsqaoa.npg import sigmoid


class ExactGrad:
    def __init__(self, model, seq, total_duration):
        self.seq = seq.indices
        self.T = total_duration
        self.V = [model.pool[k].eigenvectors for k in self.seq]
        self.lam = [model.pool[k].eigenvalues for k in self.seq]
        self.H = model.target.matrix
        self.psi0 = model.init_state.amplitudes
        self.egs = model.ground_energy

    def energy_grad_alpha(self, alphas):
        f = []
        c = self.V[0].conj().T @ self.psi0
        for j in range(len(self.seq)):
            if j > 0:
                c = self.V[j].conj().T @ (self.V[j - 1] @ c)
            c = np.exp(-1j * alphas[j] * self.lam[j]) * c
            f.append(c)
        psi = self.V[-1] @ f[-1]
        hpsi = self.H @ psi
        E = float(np.vdot(psi, hpsi).real)
        grads = np.empty(len(self.seq))
        b = self.V[-1].conj().T @ hpsi
        for j in range(len(self.seq) - 1, -1, -1):
            grads[j] = 2.0 * np.imag(np.vdot(b, self.lam[j] * f[j]))
            if j > 0:
                b = np.exp(1j * alphas[j] * self.lam[j]) * b
                b = self.V[j - 1].conj().T @ (self.V[j] @ b)
        return E, grads

    def neg_ratio_and_grad(self, deltas):
        g = sigmoid(deltas)
        G = g.sum()
        alphas = self.T * g / G
        E, gal = self.energy_grad_alpha(alphas)
        gp = g * (1 - g)
        gd = gp * (self.T * gal - (gal @ alphas)) / G
        return -E / self.egs, -gd / self.egs


def best_ratio(model, seq, total_duration, starts=12, maxiter=300, width=4.0):
    eg = ExactGrad(model, seq, total_duration)
    best = -np.inf
    for a in range(starts):
        x0 = np.random.default_rng(90000 + 131 * a).uniform(-width, width, len(seq.indices))
        res = minimize(eg.neg_ratio_and_grad, x0, jac=True, method="L-BFGS-B", options={"maxiter": maxiter})
        best = max(best, -res.fun)
    return best


def main():
    kind = sys.argv[1] if len(sys.argv) > 1 else "ising1d"
    jt = float(sys.argv[2]) if len(sys.argv) > 2 else 50.0
    nseq = int(sys.argv[3]) if len(sys.argv) > 3 else 120
    if kind == "ising1d":
        spec = models.ModelSpec(kind="ising1d", num_spins=8, total_duration=jt)
    elif kind == "ising2d":
        spec = models.ModelSpec(kind="ising2d", num_spins=(3, 3), total_duration=jt)
    else:
        spec = models.ModelSpec(kind="lmg", num_spins=100, total_duration=jt)
    m = models.build(spec)
    rs = np.random.default_rng(123)
    out = []
    for i in range(nseq):
        seq = sample_sequence(5, 8, rs)
        r = best_ratio(m, seq, jt)
        out.append((r, seq.as_text()))
        print(f"{i:4d} {seq.as_text()} {r:+.4f}", flush=True)
    out.sort(reverse=True)
    rs_arr = np.array([r for r, _ in out])
    print("top10:", out[:10])
    print(f"quantiles: max {rs_arr.max():.4f} p90 {np.quantile(rs_arr, 0.9):.4f} "
          f"median {np.quantile(rs_arr, 0.5):.4f} p10 {np.quantile(rs_arr, 0.1):.4f}")
    print("frac>0.9:", float(np.mean(rs_arr > 0.9)), "frac>0.94:", float(np.mean(rs_arr > 0.94)))


if __name__ == "__main__":
    main()
