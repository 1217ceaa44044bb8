"""Random search for DIO channels that increase the l1-norm of coherence."""

import numpy as np

from .channels import apply, random_dio
from .errors import SamplingFailed
from .io import channel_from_json, channel_to_json, matrix_from_json, matrix_to_json
from .monotones import l1_coherence
from .rand import haar_state
from .states import pure

WITNESS_TOL = 1e-12


def l1_increase(ch, rho):
    return l1_coherence(apply(ch, rho)) - l1_coherence(rho)


def search_l1(d, samples, seed, max_iter=200):
    """Sample ``samples`` (DIO channel, pure state) pairs and track l1 gains.

    Every sample draws its own child seed from ``numpy.random.SeedSequence``,
    so results do not depend on evaluation order. A pair is a witness when
    the increase exceeds ``WITNESS_TOL``; the largest one is stored in JSON
    form for replay.
    """
    children = np.random.SeedSequence(seed).spawn(samples)
    best, best_pair, found, failures = 0.0, None, 0, 0
    for child in children:
        s_ch, s_state = (int(x) for x in child.generate_state(2, dtype=np.uint32))
        try:
            ch = random_dio(d, d, s_ch, max_iter=max_iter)
        except SamplingFailed:
            failures += 1
            continue
        rho = pure(haar_state(d, np.random.default_rng(s_state)))
        gain = l1_increase(ch, rho)
        if gain > WITNESS_TOL:
            found += 1
        if gain > best:
            best, best_pair = gain, (ch, rho)
    report = {
        "dim": d,
        "samples": samples,
        "seed": seed,
        "sampler_failures": failures,
        "failure_rate": failures / samples if samples else 0.0,
        "witnesses": found,
        "witness_frequency": found / max(samples - failures, 1),
        "max_increase": best,
        "witness": None,
    }
    if best_pair is not None and best > WITNESS_TOL:
        ch, rho = best_pair
        report["witness"] = {"channel": channel_to_json(ch), "state": matrix_to_json(rho),
                             "increase": best}
    return report


def replay_witness(witness):
    """Recompute the l1 gain of a stored (channel, state) pair."""
    ch = channel_from_json(witness["channel"])
    rho = matrix_from_json(witness["state"])
    return l1_increase(ch, rho)
