"""Plain-loop reference for the localisation descent on tiny hierarchies.

Nothing here calls into the numpy response code: responses, pools and
fan-ins are recomputed from the hierarchy's shapes and weights with nested
loops after every prune decision.
"""

from __future__ import annotations


def _responses(h, stim, gains):
    """List of layers, each a nested list [f][y][x]."""
    beta, r = h.beta, h.config.pool_radius
    c, H, W = h.shapes[0]
    prev = [[[float(stim[k][y][x]) * gains[0][k][y][x] for x in range(W)] for y in range(H)] for k in range(c)]
    out = [prev]
    for lam in range(1, h.L + 1):
        f, hh, ww = h.shapes[lam]
        w = h.weights[lam]
        rf, s = h.rf(lam), h.stride(lam)
        pf = h.shapes[lam - 1][0]
        act = [[[0.0] * ww for _ in range(hh)] for _ in range(f)]
        for k in range(f):
            for y in range(hh):
                for x in range(ww):
                    d = 0.0
                    for g in range(pf):
                        for dy in range(rf):
                            for dx in range(rf):
                                d += float(w[k, g, dy, dx]) * prev[g][y * s + dy][x * s + dx]
                    act[k][y][x] = gains[lam][k][y][x] * max(d, 0.0)
        rho = [[[0.0] * ww for _ in range(hh)] for _ in range(f)]
        for k in range(f):
            for y in range(hh):
                for x in range(ww):
                    pool = 0.0
                    for kk in range(f):
                        for yy in range(max(0, y - r), min(hh, y + r + 1)):
                            for xx in range(max(0, x - r), min(ww, x + r + 1)):
                                pool += act[kk][yy][xx]
                    rho[k][y][x] = act[k][y][x] / (1.0 + beta * pool)
        out.append(rho)
        prev = rho
    return out


def _inputs(h, u):
    lam, k, y, x = u
    w = h.weights[lam]
    rf, s = h.rf(lam), h.stride(lam)
    res = []
    for g in range(w.shape[1]):
        for dy in range(rf):
            for dx in range(rf):
                if w[k, g, dy, dx] > 0:
                    res.append((lam - 1, g, y * s + dy, x * s + dx))
    return res


def _surround(h, u):
    lam, _, y, x = u
    f, hh, ww = h.shapes[lam]
    r = h.config.pool_radius
    res = []
    for k in range(f):
        for yy in range(max(0, y - r), min(hh, y + r + 1)):
            for xx in range(max(0, x - r), min(ww, x + r + 1)):
                if (yy, xx) != (y, x):
                    res.append((lam, k, yy, xx))
    return res


def _val(resp, u):
    return resp[u[0]][u[1]][u[2]][u[3]]


def _attempt(h, stim, cfoa, theta, eps):
    """One descent; returns (pass_zone, violated)."""
    L = h.L
    gains = [[[[1.0] * s[2] for _ in range(s[1])] for _ in range(s[0])] for s in h.shapes]
    resp = _responses(h, stim, gains)
    zone = {L: {cfoa}}
    hist = {L: [_val(resp, cfoa)]}
    pre = resp
    for lam in range(L, 0, -1):
        below = lam - 1
        parents = sorted(zone[lam])
        cands = set()
        for p in parents:
            cands.update(_inputs(h, p))
        here = {(u[0], u[2], u[3]) for u in cands}
        ctx = set()
        for u in cands:
            ctx.update(_surround(h, u))
        if lam == L:
            ctx.update(_surround(h, cfoa))
        for u in ctx:
            if (u[0], u[2], u[3]) not in here:
                gains[u[0]][u[1]][u[2]][u[3]] = 0.0
        resp = _responses(h, stim, gains)
        winners = set()
        for p in parents:
            fan = _inputs(h, p)
            m = max([_val(resp, u) for u in fan], default=0.0)
            if m > 0:
                for u in fan:
                    v = _val(resp, u)
                    if v > 0 and v >= theta * m:
                        winners.add(u)
        if below >= 1:
            hist.setdefault(below, []).append(sum(_val(pre, u) for u in winners))
        for u in cands:
            if u not in winners:
                gains[u[0]][u[1]][u[2]][u[3]] = 0.0
        resp = _responses(h, stim, gains)
        zone[below] = winners
        for layer in zone:
            if layer >= 1:
                hist.setdefault(layer, []).append(sum(_val(resp, u) for u in zone[layer]))
        pre = resp
        for seq in hist.values():
            for i in range(1, len(seq)):
                if seq[i] < seq[i - 1] - eps:
                    return zone, True
    return zone, False


def _best(h, top, blocked):
    best, bv = None, 0.0
    f, hh, ww = h.shapes[h.L]
    for k in range(f):
        for y in range(hh):
            for x in range(ww):
                u = (h.L, k, y, x)
                if top[k][y][x] > bv and u not in blocked:
                    best, bv = u, top[k][y][x]
    return best


def reference_localize(h, stim, theta=0.95, eps=1e-9, max_restarts=3):
    """(cfoa, pass_zone without layer 0) or None when localisation fails."""
    ones = [[[[1.0] * s[2] for _ in range(s[1])] for _ in range(s[0])] for s in h.shapes]
    top = _responses(h, stim, ones)[h.L]
    blocked = set()
    cfoa = _best(h, top, blocked)
    if cfoa is None:
        return None
    failures = 0
    while True:
        zone, bad = _attempt(h, stim, cfoa, theta, eps)
        if not bad:
            return cfoa, {lam: frozenset(units) for lam, units in zone.items() if lam >= 1}
        failures += 1
        blocked.add(cfoa)
        if failures > max_restarts:
            return None
        cfoa = _best(h, top, blocked)
        if cfoa is None:
            return None
