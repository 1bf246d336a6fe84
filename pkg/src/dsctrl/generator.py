"""Synthetic SOF instances that are unstable open loop but provably stabilizable."""

import numpy as np

from .errors import ArgumentError, GenerationError
from .lti import StateSpaceModel, spectral_abscissa

__all__ = ["random_sof_instance", "instance_seed"]

MAX_TRIES = 100
MARGIN = 0.1


def instance_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(index)])


def random_sof_instance(seed, n: int, m: int, p: int, m1: int | None = None,
                        p1: int | None = None, name: str | None = None):
    """Return ``(model, k0)`` with ``A + B k0 C`` Hurwitz and ``A`` not Hurwitz.

    A stable closed-loop matrix is drawn first (random Gaussian matrix shifted
    so its abscissa lies in ``[-1.1, -0.1]``), together with a certificate gain
    ``k0`` uniform in ``[-1, 1]``; the open-loop ``A`` is then recovered as
    ``A_cl - B k0 C``.  The performance channel uses ``B1 = I``-like columns
    and ``C1 = [I; 0]``-like rows with a small ``D12`` so that H2 / Hinf
    problems are well posed.
    """
    if min(n, m, p) < 1:
        raise ArgumentError("n, m and p must all be >= 1")
    m1 = n if m1 is None else m1
    p1 = n + m if p1 is None else p1
    rng = np.random.default_rng(seed)
    for _ in range(MAX_TRIES):
        k0 = rng.uniform(-1.0, 1.0, size=(m, p))
        a_cl = rng.standard_normal((n, n))
        shift = spectral_abscissa(a_cl) + MARGIN + rng.uniform(0.0, 1.0)
        a_cl = a_cl - shift * np.eye(n)
        b = rng.standard_normal((n, m))
        c = rng.standard_normal((p, n))
        a = a_cl - b @ k0 @ c
        if spectral_abscissa(a) < 0:
            continue
        if spectral_abscissa(a + b @ k0 @ c) > -MARGIN + 1e-9:
            continue
        b1 = np.eye(n, m1)
        c1 = np.vstack([np.eye(n), np.zeros((m, n))])[:p1]
        d12 = np.vstack([np.zeros((n, m)), np.eye(m)])[:p1]
        model = StateSpaceModel(
            a=a, b1=b1, b=b, c1=c1, c=c,
            d11=np.zeros((p1, m1)), d12=d12, d21=np.zeros((p, m1)),
            name=name or "synthetic",
        )
        return model, k0
    raise GenerationError(f"no unstable open-loop instance after {MAX_TRIES} draws")
