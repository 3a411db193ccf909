"""Numba inner loops for the spin samplers.

The exchange kernel maintains the bond + boundary energy in exact integer
arithmetic and the field energy in a compensated float accumulator, so
incremental bookkeeping stays within rounding of a full recomputation
over millions of updates.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def exchange_proposals(
    spins, nbrs, ncnt, field, eff_int, beta, a_idx, b_idx, u, bond_energy, field_energy, field_comp
):
    """Metropolis spin-exchange proposals on pairs (a_idx[k], b_idx[k]).

    Returns updated (bond_energy, field_energy, field_comp, attempts,
    accepted), where attempts counts proposals that paired opposite spins.
    ``bond_energy`` counts bond + boundary terms (integers), ``field_*``
    is a Kahan pair for the magnetic-field term.
    """
    attempts = 0
    accepted = 0
    for k in range(a_idx.size):
        i = a_idx[k]
        j = b_idx[k]
        if i == j:
            continue
        si = spins[i]
        sj = spins[j]
        if si == sj:
            continue
        attempts += 1
        ni = 0
        adj = 0
        for t in range(ncnt[i]):
            nb = nbrs[i, t]
            ni += spins[nb]
            if nb == j:
                adj = 1
        nj = 0
        for t in range(ncnt[j]):
            nj += spins[nbrs[j, t]]
        d_int = 2 * si * (ni + eff_int[i]) + 2 * sj * (nj + eff_int[j]) + 4 * adj
        d_field = 2.0 * si * field[i] + 2.0 * sj * field[j]
        d_h = d_int + d_field
        if d_h <= 0.0 or u[k] < np.exp(-beta * d_h):
            spins[i] = sj
            spins[j] = si
            bond_energy += d_int
            # Kahan update of the field energy
            y = d_field - field_comp
            t2 = field_energy + y
            field_comp = (t2 - field_energy) - y
            field_energy = t2
            accepted += 1
    return bond_energy, field_energy, field_comp, attempts, accepted


@njit(cache=True)
def exchange_proposals_tally(
    spins, nbrs, ncnt, field, eff_int, beta, a_idx, b_idx, u, bond_energy, field_energy, field_comp,
    counts, code,
):
    """Exchange proposals that also tally the visited state after each step.

    ``code`` is the bitmask of plus spins (site v sets bit v); only
    sensible for small systems. Returns the kernel state plus the code.
    """
    attempts = 0
    accepted = 0
    for k in range(a_idx.size):
        i = a_idx[k]
        j = b_idx[k]
        ok = i != j and spins[i] != spins[j]
        if ok:
            attempts += 1
            si = spins[i]
            sj = spins[j]
            ni = 0
            adj = 0
            for t in range(ncnt[i]):
                nb = nbrs[i, t]
                ni += spins[nb]
                if nb == j:
                    adj = 1
            nj = 0
            for t in range(ncnt[j]):
                nj += spins[nbrs[j, t]]
            d_int = 2 * si * (ni + eff_int[i]) + 2 * sj * (nj + eff_int[j]) + 4 * adj
            d_field = 2.0 * si * field[i] + 2.0 * sj * field[j]
            d_h = d_int + d_field
            if d_h <= 0.0 or u[k] < np.exp(-beta * d_h):
                spins[i] = sj
                spins[j] = si
                bond_energy += d_int
                y = d_field - field_comp
                t2 = field_energy + y
                field_comp = (t2 - field_energy) - y
                field_energy = t2
                accepted += 1
                code ^= (1 << i) | (1 << j)
        counts[code] += 1
    return bond_energy, field_energy, field_comp, attempts, accepted, code


@njit(cache=True)
def flip_proposals(spins, nbrs, ncnt, field, eff_int, beta, sites, u):
    """Grand-canonical single-spin-flip Metropolis proposals.

    Returns the magnetization change (spins are mutated in place).
    """
    dm = 0
    for k in range(sites.size):
        i = sites[k]
        si = spins[i]
        ns = 0
        for t in range(ncnt[i]):
            ns += spins[nbrs[i, t]]
        d_h = 2.0 * si * (ns + eff_int[i] + field[i])
        if d_h <= 0.0 or u[k] < np.exp(-beta * d_h):
            spins[i] = -si
            dm -= 2 * si
    return dm
