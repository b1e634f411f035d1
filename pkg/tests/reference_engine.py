"""Straight-line reference interpreter for the forwarding rules.

This is a deliberately plain second implementation used only by the test
suite. It shares no code with the package: directions are strings, nodes are
(row, col) tuples, hop distances come from the closed form instead of a
search, and the per-packet loop below follows the published rule set step by
step. Keep it dumb; its value is that it was written separately and stays
that way.
"""

N, E, S, W = "N", "E", "S", "W"
PORT_ORDER = (N, E, S, W)

_OPP = {N: S, S: N, E: W, W: E}
_CW = {N: E, E: S, S: W, W: N}
_CCW = {N: W, W: S, S: E, E: N}


def move(rows, cols, node, d):
    r, c = node
    if d == N:
        return ((r - 1) % rows, c)
    if d == S:
        return ((r + 1) % rows, c)
    if d == E:
        return (r, (c + 1) % cols)
    if d == W:
        return (r, (c - 1) % cols)
    raise ValueError(d)


def hop_distance(rows, cols, a, b):
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    return min(dr, rows - dr) + min(dc, cols - dc)


class Net:
    """Torus with a frozen set of dead links and dead nodes."""

    def __init__(self, rows, cols, dead_links=(), dead_nodes=()):
        self.rows = rows
        self.cols = cols
        self.dead_nodes = set(dead_nodes)
        dead = set()
        for a, b in dead_links:
            dead.add(frozenset((a, b)))
        for v in self.dead_nodes:
            for d in PORT_ORDER:
                dead.add(frozenset((v, move(rows, cols, v, d))))
        self.dead_links = dead

    def link_up(self, a, d):
        b = move(self.rows, self.cols, a, d)
        if a in self.dead_nodes or b in self.dead_nodes:
            return False
        return frozenset((a, b)) not in self.dead_links

    def live_ports(self, a):
        return [d for d in PORT_ORDER if self.link_up(a, d)]


def table_egress(net, node, dest):
    """Routing-table egress: first port in N,E,S,W order that gets one hop
    closer to dest on the intact torus."""
    here = hop_distance(net.rows, net.cols, node, dest)
    for d in PORT_ORDER:
        nxt = move(net.rows, net.cols, node, d)
        if hop_distance(net.rows, net.cols, nxt, dest) == here - 1:
            return d
    raise AssertionError("no descending port; node == dest?")


def _pick_first_up(net, node, candidates):
    for d in candidates:
        if net.link_up(node, d):
            return d
    return None


def _generation_port(net, node, dead_primary, policy):
    """Alternative egress when the table's port is dead. None means drop."""
    k = len(net.live_ports(node))
    if k <= 1:
        return None
    if k == 2:
        d = _OPP[dead_primary]
        return d if net.link_up(node, d) else None
    if policy == "OPPOSITE_FIRST":
        order = [_OPP[dead_primary], _CW[dead_primary], _CCW[dead_primary]]
    else:
        order = [_CW[dead_primary], _CCW[dead_primary], _OPP[dead_primary]]
    return _pick_first_up(net, node, order)


def _relay_port(net, node, ingress, policy):
    """Egress for a packet recognized as reverse flow. Always returns a
    port; the ingress link is up by construction so bouncing is legal."""
    k = len(net.live_ports(node))
    if k == 2:
        d = _OPP[ingress]
        return d if net.link_up(node, d) else ingress
    if k >= 3:
        if policy == "OPPOSITE_FIRST":
            order = [_OPP[ingress], _CW[ingress], _CCW[ingress]]
        else:
            order = [_CW[ingress], _CCW[ingress], _OPP[ingress]]
        d = _pick_first_up(net, node, order)
        return d if d is not None else ingress
    return ingress


def run(net, strategy, src, dst, sst, ttl):
    """Route one packet. strategy is NF, LFA, RF_CF or RF_LF.

    Returns a dict with verdict, hops, reverse_hops, trace (list of
    (from, to, dir, kind) with kind forward/reverse) and annihilations.
    """
    rows, cols = net.rows, net.cols
    if src == dst:
        raise ValueError("src == dst")

    policy = "OPPOSITE_FIRST" if strategy == "RF_CF" else "SIDE_FIRST"
    at = src
    ingress = None
    reverse_mode = False
    h_since_event = 0
    trace = []
    annihilations = []

    def take(d):
        nonlocal at, ingress
        nxt = move(rows, cols, at, d)
        kind = (
            "forward"
            if hop_distance(rows, cols, nxt, dst) < hop_distance(rows, cols, at, dst)
            else "reverse"
        )
        trace.append((at, nxt, d, kind))
        ingress = _OPP[d]
        at = nxt

    def finish(verdict):
        rev = sum(1 for t in trace if t[3] == "reverse")
        return {
            "verdict": verdict,
            "hops": len(trace),
            "reverse_hops": rev,
            "trace": list(trace),
            "annihilations": list(annihilations),
        }

    while True:
        if at == dst:
            return finish("delivered")
        if len(trace) >= ttl:
            return finish("dropped_ttl")
        primary = table_egress(net, at, dst)

        if strategy == "NF":
            if not net.link_up(at, primary):
                return finish("dropped_no_egress")
            take(primary)
            continue

        if strategy == "LFA":
            here = hop_distance(rows, cols, at, dst)
            chosen = None
            for d in PORT_ORDER:
                nxt = move(rows, cols, at, d)
                if net.link_up(at, d) and hop_distance(rows, cols, nxt, dst) < here:
                    chosen = d
                    break
            if chosen is None:
                return finish("dropped_no_egress")
            take(chosen)
            continue

        # reverse-flow strategies
        if reverse_mode:
            if primary == ingress:
                # still flowing against the table; check for oscillation
                if h_since_event > sst:
                    policy = (
                        "SIDE_FIRST"
                        if policy == "OPPOSITE_FIRST"
                        else "OPPOSITE_FIRST"
                    )
                    h_since_event = 0
                take(_relay_port(net, at, ingress, policy))
                h_since_event += 1
                continue
            # table egress points elsewhere: the reverse flow ends here
            annihilations.append(at)
            reverse_mode = False
            h_since_event = 0

        if net.link_up(at, primary):
            take(primary)
        else:
            alt = _generation_port(net, at, primary, policy)
            if alt is None:
                return finish("dropped_no_egress")
            take(alt)
            reverse_mode = True
            h_since_event = 1
