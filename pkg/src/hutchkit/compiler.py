"""Gate-level compilation of exp(-iG) for two-body diagonal G.

Every pair term becomes CX-RZ-CX on the parity of its two qubits. Pairs that
form a triangle {a, b, c} share parities, so the three blocks collapse into
one five-CNOT block:

    CX(a,c) CX(a,b) RZ(c) RZ(b) CX(b,c) CX(a,b) RZ(c) CX(b,c)

Triangles come from Steiner triple systems (edge-disjoint covers of K_v),
so almost every pair lands in a triangle.

Gate qubits are 0-based in the API and 1-based in the text format. The
rotation convention is RZ(phi) = diag(exp(-i phi/2), exp(i phi/2)).
"""

import itertools
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .hamiltonians import mod_two_pi, to_ising
from .limits import ResourceCapError

MAX_SIM_QUBITS = 14
GATE_KINDS = {"h": 1, "rz": 1, "rzz": 2, "cx": 2, "swap": 2}
TRIANGLE_WINDOW = 8


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_KINDS[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_KINDS[self.kind]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} operands must be distinct: {self.qubits}")


def layer_gates(gates):
    """Earliest-layer placement: each gate goes one past the last layer touching its qubits."""
    last = {}
    layers = []
    for g_idx, g in enumerate(gates):
        k = max((last.get(q, -1) for q in g.qubits), default=-1) + 1
        if k == len(layers):
            layers.append([])
        layers[k].append(g_idx)
        for q in g.qubits:
            last[q] = k
    return layers


@dataclass
class Circuit:
    Q: int
    gates: list = field(default_factory=list)
    layers: list = None

    def __post_init__(self):
        for g in self.gates:
            if any(q < 0 or q >= self.Q for q in g.qubits):
                raise ValueError(f"gate {g} acts outside 0..{self.Q - 1}")
        if self.layers is None:
            self.layers = layer_gates(self.gates)
        self._check_layers()

    def _check_layers(self):
        seen = sorted(i for layer in self.layers for i in layer)
        if seen != list(range(len(self.gates))):
            raise ValueError("layers must partition the gate list")
        for layer in self.layers:
            used = [q for i in layer for q in self.gates[i].qubits]
            if len(used) != len(set(used)):
                raise ValueError("a layer contains two gates sharing a qubit")

    @property
    def depth(self):
        return len(self.layers)

    def count(self, kind):
        return sum(g.kind == kind for g in self.gates)

    def ordered_gates(self):
        return [self.gates[i] for layer in self.layers for i in layer]


@dataclass
class TrianglePacking:
    Q: int
    triangles: list
    leftovers: list

    def check(self):
        covered = []
        for t in self.triangles:
            covered += [tuple(sorted(e)) for e in itertools.combinations(t, 2)]
        covered += [tuple(sorted(e)) for e in self.leftovers]
        if sorted(covered) != list(itertools.combinations(range(self.Q), 2)):
            raise AssertionError("packing does not cover every pair exactly once")


def bose_sts(v):
    """Steiner triple system on v = 6n+3 points (Bose)."""
    if v % 6 != 3:
        raise ValueError("Bose construction needs v = 3 (mod 6)")
    m = v // 3  # 2n+1, odd
    half = (m + 1) // 2  # inverse of 2 mod m

    def pt(x, i):
        return x + m * (i % 3)

    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(m)]
    for x, y in itertools.combinations(range(m), 2):
        z = (x + y) * half % m
        for i in range(3):
            triples.append((pt(x, i), pt(y, i), pt(z, i + 1)))
    return [tuple(sorted(t)) for t in triples]


def skolem_sts(v):
    """Steiner triple system on v = 6n+1 points (Skolem)."""
    if v % 6 != 1:
        raise ValueError("Skolem construction needs v = 1 (mod 6)")
    n = v // 6
    m = 2 * n
    inf = v - 1

    def pt(x, i):
        return x + m * (i % 3)

    def op(x, y):
        # half-idempotent commutative quasigroup from relabelled Z_2n addition
        s = (x + y) % m
        return s // 2 if s % 2 == 0 else n + s // 2

    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(n)]
    for x in range(n):
        for i in range(3):
            triples.append((inf, pt(x + n, i), pt(x, i + 1)))
    for x, y in itertools.combinations(range(m), 2):
        for i in range(3):
            triples.append((pt(x, i), pt(y, i), pt(op(x, y), i + 1)))
    return [tuple(sorted(t)) for t in triples]


def steiner_triple_system(v):
    if v in (0, 1):
        return []
    if v % 6 == 3:
        return bose_sts(v)
    if v % 6 == 1:
        return skolem_sts(v)
    raise ValueError(f"no Steiner triple system on {v} points")


def min_triangles(Q):
    """Triangle count needed for CNOT count <= floor((5Q^2 - 3Q - 2)/6)."""
    return ceil((Q - 1) * (Q - 2) / 6)


def pack_triangles(Q):
    """Edge-disjoint triangles in K_Q plus the uncovered edges.

    Candidates are Steiner systems on nearby orders v = 1, 3 (mod 6): for
    v <= Q the system sits on the first v vertices; for v > Q the extra
    vertices are deleted with their triangles. The candidate with most
    triangles wins (ties go to the smallest v).
    """
    if Q < 2:
        raise ValueError("need Q >= 2")
    best = None
    for v in range(max(Q - 5, 0), Q + 3):
        if v % 6 not in (1, 3):
            continue
        tris = [t for t in steiner_triple_system(v) if t[-1] < Q]
        if best is None or len(tris) > len(best):
            best = tris
    used = {e for t in best for e in itertools.combinations(t, 2)}
    leftovers = [e for e in itertools.combinations(range(Q), 2) if e not in used]
    return TrianglePacking(Q, best, leftovers)


def _disjoint_rounds(items):
    """Greedily group items (qubit tuples) into rounds with no shared qubit."""
    rounds = []
    for it in items:
        for rnd in rounds:
            if not any(set(it) & set(other) for other in rnd):
                rnd.append(it)
                break
        else:
            rounds.append([it])
    return rounds


# qubit roles (0=a, 1=b, 2=c) touched by each gate of triangle_block, in order
TRIANGLE_ROLES = ((0, 2), (0, 1), (2,), (1,), (1, 2), (0, 1), (2,), (1, 2))


def _block_finish(start):
    """Last occupied layer of roles (a, b, c) after a triangle block, given their current ones."""
    busy = list(start)
    for roles in TRIANGLE_ROLES:
        k = max(busy[i] for i in roles) + 1
        for i in roles:
            busy[i] = k
    return busy


def _order_triangles(Q, triangles, ready=0, window=TRIANGLE_WINDOW):
    """Order and orient triangle blocks for a shallow earliest-layer schedule.

    Starting from vertex-disjoint rounds, each step looks at the next
    ``window`` triangles and every role assignment of their vertices, and
    commits the block that finishes earliest. Returns oriented (a, b, c)
    triples in emission order.
    """
    queue = [t for rnd in _disjoint_rounds(triangles) for t in rnd]
    busy = {q: ready - 1 for q in range(Q)}
    out = []
    while queue:
        best = None
        for pos, t in enumerate(queue[:window]):
            for p in itertools.permutations(t):
                after = _block_finish([busy[q] for q in p])
                key = (max(after), sum(after), pos)
                if best is None or key < best[0]:
                    best = (key, pos, p, after)
        _, pos, p, after = best
        busy.update(zip(p, after))
        out.append(p)
        del queue[pos]
    return out


def _pair_block(a, b, theta):
    return [Gate("cx", (a, b)), Gate("rz", (b,), theta), Gate("cx", (a, b))]


def triangle_block(a, b, c, t_ab, t_ac, t_bc):
    """Five-CNOT block equal to the three pair blocks on (a,b), (a,c), (b,c)."""
    return [
        Gate("cx", (a, c)),           # c <- a^c
        Gate("cx", (a, b)),           # b <- a^b
        Gate("rz", (c,), t_ac),
        Gate("rz", (b,), t_ab),
        Gate("cx", (b, c)),           # c <- b^c
        Gate("cx", (a, b)),           # b <- b
        Gate("rz", (c,), t_bc),
        Gate("cx", (b, c)),           # c <- c
    ]


def compile(G, rewrite=True):
    """Circuit preparing exp(-iG)|+>^Q from |0...0>, up to global phase.

    Pair coefficient h_ij of the Ising form becomes a parity rotation of
    angle 2 h_ij and field h_i becomes RZ(2 h_i), all reduced mod 2 pi.
    With ``rewrite=False`` every pair gets its own CX-RZ-CX block.
    """
    if G.r != 2:
        raise ValueError(f"compile needs a two-body Hamiltonian, got r={G.r}")
    Q = G.Q
    ising = to_ising(G)

    def angle(h):
        return mod_two_pi(2 * h)

    pair_angle = {e: angle(ising.couplings.get(e, 0)) for e in itertools.combinations(range(Q), 2)}
    gates = [Gate("h", (q,)) for q in range(Q)]
    gates += [Gate("rz", (q,), angle(ising.fields[q])) for q in range(Q)]
    if rewrite and Q >= 3:
        packing = pack_triangles(Q)
        triangles, leftovers = packing.triangles, packing.leftovers
    else:
        triangles, leftovers = [], list(itertools.combinations(range(Q), 2))
    for a, b, c in _order_triangles(Q, triangles, ready=2):
        gates += triangle_block(a, b, c, pair_angle[tuple(sorted((a, b)))],
                                pair_angle[tuple(sorted((a, c)))], pair_angle[tuple(sorted((b, c)))])
    for rnd in _disjoint_rounds(leftovers):
        for a, b in rnd:
            gates += _pair_block(a, b, pair_angle[(a, b)])
    return Circuit(Q, gates)


def _apply(state, g, Q):
    idx = np.arange(state.size)
    if g.kind == "h":
        q = g.qubits[0]
        v = state.reshape(-1, 2, 2**q)
        a, b = v[:, 0, :].copy(), v[:, 1, :].copy()
        v[:, 0, :] = (a + b) / np.sqrt(2)
        v[:, 1, :] = (a - b) / np.sqrt(2)
        return state
    if g.kind == "rz":
        bit = (idx >> g.qubits[0]) & 1
        return state * np.exp(1j * g.angle * (bit - 0.5))
    if g.kind == "rzz":
        par = ((idx >> g.qubits[0]) ^ (idx >> g.qubits[1])) & 1
        return state * np.exp(1j * g.angle * (par - 0.5))
    if g.kind == "cx":
        c, t = g.qubits
        src = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
        return state[src]
    if g.kind == "swap":
        a, b = g.qubits
        diff = ((idx >> a) ^ (idx >> b)) & 1
        src = np.where(diff, idx ^ ((1 << a) | (1 << b)), idx)
        return state[src]
    raise ValueError(g.kind)


def simulate_circuit(c, initial=None):
    """Statevector after applying the circuit in layer order to |0...0> (or ``initial``)."""
    if c.Q > MAX_SIM_QUBITS:
        raise ResourceCapError(f"circuit simulation is capped at Q={MAX_SIM_QUBITS}, got {c.Q}")
    N = 2**c.Q
    if initial is None:
        state = np.zeros(N, dtype=complex)
        state[0] = 1.0
    else:
        state = np.array(initial, dtype=complex)
    for g in c.ordered_gates():
        state = _apply(state, g, c.Q)
    return state


def circuit_unitary(c):
    N = 2**c.Q
    return np.column_stack([simulate_circuit(c, np.eye(N)[:, j]) for j in range(N)])


def cnot_bound(Q):
    """(general, special) CNOT bounds; special is None unless Q = 1, 3 (mod 6)."""
    general = (5 * Q * Q - 3 * Q - 2) // 6
    special = (5 * Q * Q - 5 * Q) // 6 if Q % 6 in (1, 3) else None
    return general, special


def depth_bound(Q):
    general = 9 * Q - 2
    special = 6 * Q + 1 if Q % 6 in (1, 3) else None
    return general, special


def resource_report(c):
    """Exact counts; depth is reported with and without the Hadamard preparation."""
    no_h = [g for g in c.gates if g.kind != "h"]
    n_cnot = c.count("cx")
    depth = c.depth
    depth_no_h = len(layer_gates(no_h))
    cb, cb_special = cnot_bound(c.Q)
    db, db_special = depth_bound(c.Q)
    bound_cnot = cb if cb_special is None else min(cb, cb_special)
    bound_depth = db if db_special is None else min(db, db_special)
    return {
        "Q": c.Q,
        "n_h": c.count("h"),
        "n_rz": c.count("rz"),
        "n_cnot": n_cnot,
        "depth": depth,
        "depth_no_h": depth_no_h,
        "bound_cnot": bound_cnot,
        "bound_depth": bound_depth,
        "ok": n_cnot <= bound_cnot and depth <= bound_depth,
    }


def write_circuit(c, path):
    with open(path, "w") as fh:
        fh.write(f"qubits {c.Q}\n")
        for k, layer in enumerate(c.layers):
            if k:
                fh.write("\n")
            for i in layer:
                g = c.gates[i]
                qs = " ".join(str(q + 1) for q in g.qubits)
                if g.kind in ("rz", "rzz"):
                    fh.write(f"{g.kind} {g.angle:.17g} {qs}\n")
                else:
                    fh.write(f"{g.kind} {qs}\n")


def read_circuit(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2 or head[0] != "qubits":
            raise ValueError(f"bad circuit header {' '.join(head)!r}")
        Q = int(head[1])
        gates, layers, current = [], [], []
        for line in fh:
            parts = line.split()
            if not parts:
                if current:
                    layers.append(current)
                current = []
                continue
            kind = parts[0]
            if kind in ("rz", "rzz"):
                g = Gate(kind, tuple(int(p) - 1 for p in parts[2:]), float(parts[1]))
            else:
                g = Gate(kind, tuple(int(p) - 1 for p in parts[1:]))
            current.append(len(gates))
            gates.append(g)
        if current:
            layers.append(current)
    return Circuit(Q, gates, layers)


def rewrite_identity_check(seed=0):
    """Max entry difference between the triangle block and its three pair blocks."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 2 * np.pi, 3)
    naive = _pair_block(0, 1, t[0]) + _pair_block(0, 2, t[1]) + _pair_block(1, 2, t[2])
    U1 = circuit_unitary(Circuit(3, naive))
    U2 = circuit_unitary(Circuit(3, triangle_block(0, 1, 2, *t)))
    return float(np.abs(U1 - U2).max())

