"""NumPy implementation of the batched swarm step.

Arrays are indexed [rollout, agent, ...]. Agents are addressed by 0-based
slot (node id - 1); ``nbr`` holds neighbour slots padded with -1.
"""

import numpy as np

BACKEND = "python"

_TWO_PI = 2.0 * np.pi


def _wrap(a):
    w = np.fmod(a + np.pi, _TWO_PI)
    w = np.where(w <= 0.0, w + _TWO_PI, w)
    return w - np.pi


def step_batch(state, alive, offsets, nbr, zeta, target, tcmd, w1, w2, ts, active,
               limits, kdiag, delta_s, agg, err_out, cmd_out, j_out, st_out):
    """Advance every active rollout by one control step, in place.

    ``limits`` = (tau, v_min, v_max, a_vmax, a_lmax). ``agg`` selects the
    early-termination rule: -1 off, 0 min over all entries, 1 max.
    Fills the rotated errors, commands, step fitness and termination flags;
    rollouts that trip the termination rule are not integrated.
    """
    tau, v_min, v_max, a_vmax, a_lmax = limits
    m, n = state.shape[0], state.shape[1]
    x = state[:, :, 0]
    y = state[:, :, 1]
    a = state[:, :, 2]
    v = state[:, :, 3]
    live = (alive[None, :] != 0) & (active[:, None] != 0)

    valid = nbr >= 0
    idx = np.where(valid, nbr, 0)
    rows = np.arange(m)[:, None, None]
    vf = valid.astype(float)
    xj, yj, aj, vj = x[rows, idx], y[rows, idx], a[rows, idx], v[rows, idx]
    ox, oy = offsets[:, :, 0], offsets[:, :, 1]
    oxj, oyj = ox[rows, idx], oy[rows, idx]
    z = zeta.astype(float)

    ex = (vf * ((ox[..., None] - oxj) - (x[..., None] - xj))).sum(-1) + z * (target[0] + ox - x)
    ey = (vf * ((oy[..., None] - oyj) - (y[..., None] - yj))).sum(-1) + z * (target[1] + oy - y)
    et = (vf * _wrap(aj - a[..., None])).sum(-1) + z * _wrap(target[2] - a)

    c, s = np.cos(a), np.sin(a)
    erx = c * ex + s * ey
    ery = -s * ex + c * ey
    ert = _wrap(et)

    n_in = w1.shape[3]
    obs = np.stack([a, v, erx, ery, ert] + ([np.broadcast_to(ts[:, None], (m, n))] if n_in == 6 else []), axis=-1)
    with np.errstate(over="ignore"):
        h = 1.0 / (1.0 + np.exp(-np.einsum("bnhi,bni->bnh", w1, obs)))
    raw = np.tanh(np.einsum("bnoh,bnh->bno", w2, h))
    av = a_vmax * raw[..., 0]
    al = a_lmax * raw[..., 1]

    lf = live.astype(float)
    err_out[..., 0] = erx * lf
    err_out[..., 1] = ery * lf
    err_out[..., 2] = ert * lf
    cmd_out[..., 0] = av * lf
    cmd_out[..., 1] = al * lf
    j_out[...] = np.exp(-(kdiag[0] * erx * erx + kdiag[1] * ery * ery + kdiag[2] * ert * ert)) * lf

    st_out[...] = 0
    if agg >= 0:
        avj, alj = av[rows, idx], al[rows, idx]
        lx = vf.sum(-1) + z
        th = aj - a[..., None]
        cth, sth = np.cos(th), np.sin(th)
        tth = target[2] - a
        r0 = (-tau * lx * av + ery / v * al - lx * v
              + (vf * (tau * cth * avj + cth * vj)).sum(-1) + z * np.cos(tth) * tcmd[0])
        r1 = -erx / v * al + (vf * (tau * sth * avj + sth * vj)).sum(-1) + z * np.sin(tth) * tcmd[0]
        r2 = -lx / v * al + (vf * alj / vj).sum(-1) + z * tcmd[1]
        d = np.stack([np.abs(erx + r0 * tau) - np.abs(erx),
                      np.abs(ery + r1 * tau) - np.abs(ery),
                      np.abs(ert + r2 * tau) - np.abs(ert)], axis=-1)
        alive_mask = (alive != 0)[None, :, None]
        if agg == 0:
            red = np.where(alive_mask, d, np.inf).min(axis=(1, 2))
        else:
            red = np.where(alive_mask, d, -np.inf).max(axis=(1, 2))
        st_out[...] = ((red > delta_s) & (active != 0)).astype(st_out.dtype)

    move = live & (st_out[:, None] == 0)
    nx = x + v * c * tau
    ny = y + v * s * tau
    na = _wrap(a + al / v * tau)
    nv = np.clip(v + av * tau, v_min, v_max)
    state[:, :, 0] = np.where(move, nx, x)
    state[:, :, 1] = np.where(move, ny, y)
    state[:, :, 2] = np.where(move, na, a)
    state[:, :, 3] = np.where(move, nv, v)
