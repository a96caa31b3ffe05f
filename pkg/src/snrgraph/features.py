"""Gaussian node features with class signal, global shift and node noise.

Each row is ``X_j = mu[y_j] + gamma + eps_j`` with ``mu_c ~ N(0, Sigma)``
drawn per class, ``gamma ~ N(0, Phi)`` shared by all nodes and
``eps_j ~ N(0, Psi)`` drawn per node.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .validation import as_rng, check_labels, check_nonneg, check_psd

IID = "iid"
FULL = "full"


@dataclass(frozen=True)
class FeatureParams:
    """Covariance parameters of the feature model.

    Build with :meth:`iid` (scalar variances per dimension) or :meth:`full`
    (explicit d_in x d_in covariance matrices).
    """

    d_in: int
    mode: str
    sigma2: Optional[float] = None
    phi2: Optional[float] = None
    psi2: Optional[float] = None
    Sigma: Optional[np.ndarray] = None
    Phi: Optional[np.ndarray] = None
    Psi: Optional[np.ndarray] = None

    @classmethod
    def iid(cls, d_in, sigma2, phi2, psi2):
        if int(d_in) < 1:
            raise ValueError("d_in must be at least 1")
        return cls(
            int(d_in),
            IID,
            sigma2=check_nonneg(sigma2, "sigma2"),
            phi2=check_nonneg(phi2, "phi2"),
            psi2=check_nonneg(psi2, "psi2"),
        )

    @classmethod
    def full(cls, Sigma, Phi, Psi):
        mats = [check_psd(m, name) for m, name in ((Sigma, "Sigma"), (Phi, "Phi"), (Psi, "Psi"))]
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise ValueError("Sigma, Phi and Psi must share one shape")
        return cls(d, FULL, Sigma=mats[0], Phi=mats[1], Psi=mats[2])

    @classmethod
    def paper_default(cls):
        """Five dimensions with Sigma = 1e-5 I and Phi = Psi = 1e-4 I."""
        return cls.iid(5, 1e-5, 1e-4, 1e-4)

    def covariances(self):
        """Return (Sigma, Phi, Psi) as dense matrices in either mode."""
        if self.mode == FULL:
            return self.Sigma, self.Phi, self.Psi
        eye = np.eye(self.d_in)
        return self.sigma2 * eye, self.phi2 * eye, self.psi2 * eye

    @property
    def fnn_snr(self):
        """SNR of a graph-agnostic model, sigma^2 / (phi^2 + psi^2)."""
        if self.mode != IID:
            raise ValueError("fnn_snr is defined for IID parameters")
        den = self.phi2 + self.psi2
        if den == 0:
            return np.inf if self.sigma2 > 0 else 0.0
        return self.sigma2 / den

    def to_dict(self):
        if self.mode == IID:
            return {"mode": IID, "d_in": self.d_in, "sigma2": self.sigma2, "phi2": self.phi2, "psi2": self.psi2}
        return {
            "mode": FULL,
            "d_in": self.d_in,
            "Sigma": self.Sigma.tolist(),
            "Phi": self.Phi.tolist(),
            "Psi": self.Psi.tolist(),
        }


def local_noise_proportion(p):
    """rho = psi^2 / (phi^2 + psi^2)."""
    if p.mode != IID:
        raise ValueError("rho is defined for IID parameters")
    den = p.phi2 + p.psi2
    if den == 0:
        raise ValueError("rho is undefined when phi2 and psi2 are both zero")
    return p.psi2 / den


@dataclass(frozen=True)
class FeatureSample:
    X: np.ndarray
    mu: np.ndarray
    gamma: np.ndarray
    eps: np.ndarray


def _factor(cov):
    # matrix square root that tolerates singular PSD input
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


def _draw(rng, p, size, which):
    if p.mode == IID:
        scale = np.sqrt({"sigma": p.sigma2, "phi": p.phi2, "psi": p.psi2}[which])
        return rng.standard_normal((size, p.d_in)) * scale
    cov = {"sigma": p.Sigma, "phi": p.Phi, "psi": p.Psi}[which]
    return rng.standard_normal((size, p.d_in)) @ _factor(cov).T


def sample_features(labels, p, seed=None, k=None):
    """Draw one feature matrix. ``labels`` may be a label vector or a Graph."""
    y = getattr(labels, "labels", labels)
    k = getattr(labels, "k", k)
    y, k = check_labels(y, k=k)
    rng = as_rng(seed)
    mu = _draw(rng, p, k, "sigma")
    gamma = _draw(rng, p, 1, "phi")[0]
    eps = _draw(rng, p, y.size, "psi")
    X = mu[y] + gamma + eps
    return FeatureSample(X, mu, gamma, eps)


def sample_feature_blocks(labels, p, n_mu, n_ge, seed=None, k=None):
    """Draw the two independent factors used by the Monte-Carlo SNR estimator.

    Returns ``signal`` of shape (n_mu, n, d_in) holding ``mu[y]`` for each
    class-mean draw and ``nuisance`` of shape (n_ge, n, d_in) holding
    ``gamma + eps`` for each global/noise draw; sample (m, s) is
    ``signal[m] + nuisance[s]``.
    """
    y, k = check_labels(getattr(labels, "labels", labels), k=getattr(labels, "k", k))
    rng = as_rng(seed)
    signal = np.stack([_draw(rng, p, k, "sigma")[y] for _ in range(n_mu)])
    nuisance = np.stack([_draw(rng, p, 1, "phi") + _draw(rng, p, y.size, "psi") for _ in range(n_ge)])
    return signal, nuisance
