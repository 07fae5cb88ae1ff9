"""Gold-standard posterior means for LOH surrogate candidates.

Four-dimensional grid quadrature over the constrained parameters
(eta, pi1, pi2 in (0,1); gamma real).  The sampler works in logit space
with a flat box prior, so the constrained-space density picks up a
product of logistic Jacobians.  Used only during dataset selection; the
shipped dataset records its generator seed.

    python3 scripts/loh_quadrature_screen.py 164011 158199 23168
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from scipy.special import logit

from chainpool.targets import LohModel
from generate_loh_surrogate import simulate


def posterior_means_quadrature(x, totals,
                               eta_rng=(0.45, 0.985), n_eta=48,
                               pi1_rng=(0.20, 0.42), n_pi1=44,
                               pi2_rng=(0.25, 0.985), n_pi2=56,
                               gam_rng=(-8.0, 30.0), n_gam=96):
    model = LohModel(x, totals)
    etas = np.linspace(*eta_rng, n_eta)
    pi1s = np.linspace(*pi1_rng, n_pi1)
    pi2s = np.linspace(*pi2_rng, n_pi2)
    gams = np.linspace(*gam_rng, n_gam)

    P1, P2, G = np.meshgrid(pi1s, pi2s, gams, indexing="ij")
    slab = np.empty((n_pi1 * n_pi2 * n_gam, 4))
    slab[:, 1] = logit(P1.ravel())
    slab[:, 2] = logit(P2.ravel())
    slab[:, 3] = G.ravel()
    # logistic Jacobian for the pi1/pi2 axes (eta's is added per slice)
    jac = -(np.log(P1.ravel()) + np.log1p(-P1.ravel())
            + np.log(P2.ravel()) + np.log1p(-P2.ravel()))

    lp_all = np.empty((n_eta, n_pi1, n_pi2 * n_gam))
    for i, eta in enumerate(etas):
        slab[:, 0] = logit(eta)
        lp = model.log_posterior_batch(slab) + jac - (np.log(eta) + np.log1p(-eta))
        lp_all[i] = lp.reshape(n_pi1, n_pi2 * n_gam)

    w = np.exp(lp_all - lp_all.max())
    total = w.sum()
    mean = np.zeros(4)
    mean[0] = (w.sum(axis=(1, 2)) * etas).sum() / total
    mean[1] = (w.sum(axis=(0, 2)) * pi1s).sum() / total
    w_slab = w.sum(axis=(0, 1)).reshape(n_pi2, n_gam)
    mean[2] = (w_slab.sum(axis=1) * pi2s).sum() / total
    mean[3] = (w_slab.sum(axis=0) * gams).sum() / total

    # boundary mass check: outer two grid shells should be negligible
    edge = (w.sum(axis=(1, 2))[[0, 1, -2, -1]].sum()
            + w.sum(axis=(0, 2))[[0, 1, -2, -1]].sum()
            + w_slab.sum(axis=1)[[0, 1, -2, -1]].sum()
            + w_slab.sum(axis=0)[[0, 1, -2, -1]].sum())
    return mean, edge / total


COARSE = dict(n_eta=36, pi1_rng=(0.24, 0.36), n_pi1=24, n_pi2=40, n_gam=64)


def main():
    args = [a for a in sys.argv[1:] if a != "--coarse"]
    kwargs = COARSE if "--coarse" in sys.argv[1:] else {}
    for seed in (int(s) for s in args):
        x, totals = simulate(seed)
        mean, edge = posterior_means_quadrature(x, totals, **kwargs)
        print(f"seed {seed:6d}: eta {mean[0]:.4f} pi1 {mean[1]:.4f} "
              f"pi2 {mean[2]:.4f} gamma {mean[3]:6.2f}  edge {edge:.2e}",
              flush=True)


if __name__ == "__main__":
    main()
