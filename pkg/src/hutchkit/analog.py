"""Analog block schedules for two-body G with couplings in {0, 2pi/3, 4pi/3}.

The pair terms of G are split into matchings by a round-robin edge colouring
of K_Q. Each matching becomes one analog block: its pairs sit side by side on
a 1D chain, with the spacing inside each pair chosen so a C6/r^6 interaction
produces the required coupling phase. Between blocks the atoms are rearranged
by transpositions.

The chain has S slots, where S = Q for even Q and S = Q + 1 for odd Q. Slots
(2s, 2s+1) form one pair site. For odd Q the extra vertex, labelled Q, is an
empty site, so its partner idles for that block. An arrangement lists the
vertex in every slot.

Per-atom drive convention: H = Omega X + Delta n, with n = (1 - Z)/2.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .hamiltonians import TWO_PI, mod_two_pi
from .limits import ResourceCapError

MAX_SIM_QUBITS = 14
Z3_LEVELS = (0.0, TWO_PI / 3, 2 * TWO_PI / 3)
PREP_OMEGA = -math.pi / (2 * math.sqrt(2))
PREP_DELTA = math.pi / math.sqrt(2)
DEFAULT_C6 = 4 * math.pi / 3


@dataclass
class EdgeColoring:
    Q: int
    classes: list
    # for odd Q: the vertex left idle in each class (partner of the auxiliary vertex)
    idle: list = field(default_factory=list)

    def check(self):
        seen = []
        for cls in self.classes:
            verts = [v for e in cls for v in e]
            if len(verts) != len(set(verts)):
                raise AssertionError(f"class {cls} is not a matching")
            seen += [tuple(sorted(e)) for e in cls]
        full = [(i, j) for i in range(self.Q) for j in range(i + 1, self.Q)]
        if sorted(seen) != full:
            raise AssertionError("classes do not partition the edge set")


def _full_round_robin(S):
    """1-factorization of K_S (S even): polygon of S-1 vertices plus the center S-1."""
    m = S - 1
    classes = []
    for k in range(m):
        cls = [(k, m)]
        for i in range(1, S // 2):
            cls.append(((k - i) % m, (k + i) % m))
        classes.append([tuple(sorted(e)) for e in cls])
    return classes


def round_robin_coloring(Q):
    if Q < 2:
        raise ValueError("need Q >= 2")
    if Q % 2 == 0:
        return EdgeColoring(Q, _full_round_robin(Q))
    classes, idle = [], []
    for cls in _full_round_robin(Q + 1):
        aux_edge = next(e for e in cls if Q in e)
        idle.append(aux_edge[0])
        classes.append([e for e in cls if Q not in e])
    return EdgeColoring(Q, classes, idle)


@dataclass
class Interaction:
    """C6/r^6 law with the three working distances (large, medium, short)."""

    C6: float = DEFAULT_C6
    lambda0: float = None

    def __post_init__(self):
        if self.C6 <= 0:
            raise ValueError("C6 must be positive")
        if self.lambda0 is None:
            self.lambda0 = 4 * self.lambda2
        if self.lambda0 <= self.lambda1:
            raise ValueError("lambda0 must exceed lambda1")

    @property
    def lambda2(self):
        return (self.C6 / Z3_LEVELS[2]) ** (1 / 6)

    @property
    def lambda1(self):
        return (self.C6 / Z3_LEVELS[1]) ** (1 / 6)

    def spacing(self, level):
        return (self.lambda0, self.lambda1, self.lambda2)[level]

    def potential(self, r):
        return self.C6 / r**6

    def ideal_coupling(self, r):
        """Coupling used in simulation: the C6 law, with anything at >= lambda0 set to zero."""
        if r >= self.lambda0 * (1 - 1e-12):
            return 0.0
        return self.potential(r)

    def to_dict(self):
        return {"C6": self.C6, "lambda0": self.lambda0}


def z3_level(gamma, tol=1e-9):
    g = mod_two_pi(gamma)
    k = round(g / (TWO_PI / 3))
    if abs(g - k * TWO_PI / 3) > tol:
        raise ValueError(f"coupling {float(gamma)!r} is not a multiple of 2pi/3")
    return k % 3


@dataclass
class AnalogBlock:
    pairs: list          # (i, j, gamma), i < j
    detunings: list      # per qubit, gamma_ii/(Q-1) if paired in this block else 0
    arrangement: list    # slot -> vertex (Q marks the empty site for odd Q)
    positions: list      # slot -> coordinate

    def phase_spectrum(self, Q):
        """Eigenvalue contribution of this block on every basis state."""
        idx = np.arange(2**Q)
        bits = (idx[:, None] >> np.arange(Q)[None, :]) & 1
        out = bits @ np.asarray(self.detunings, dtype=float)
        for i, j, g in self.pairs:
            out = out + float(g) * bits[:, i] * bits[:, j]
        return out


@dataclass
class AnalogSchedule:
    Q: int
    blocks: list
    swaps: list
    prep: list
    interaction: Interaction = field(default_factory=Interaction)
    initial_arrangement: list = None

    def __post_init__(self):
        if self.initial_arrangement is None:
            if self.blocks:
                self.initial_arrangement = list(self.blocks[0].arrangement)
            else:
                self.initial_arrangement = list(range(n_slots(self.Q)))

    @property
    def n_swaps(self):
        return sum(len(t) for t in self.swaps)

    def arrangements(self):
        """Arrangement before each block, derived by applying the swap lists."""
        arr = list(self.initial_arrangement)
        out = [list(arr)]
        for trans in self.swaps:
            arr = apply_transpositions(arr, trans)
            out.append(list(arr))
        return out


def n_slots(Q):
    return Q + (Q % 2)


def apply_transpositions(arr, transpositions):
    arr = list(arr)
    for a, b in transpositions:
        i, j = arr.index(a), arr.index(b)
        arr[i], arr[j] = b, a
    return arr


def transition_swaps(arr, next_matching):
    """Transpositions taking ``arr`` to an arrangement whose pair sites hold ``next_matching``.

    The two matchings form alternating cycles. A cycle through l pair sites
    is fixed with l - 1 transpositions, all moving one anchor vertex along
    the cycle, so a transition costs S/2 minus the number of cycles.
    """
    arr = list(arr)
    partner = {}
    for a, b in next_matching:
        partner[a], partner[b] = b, a
    done = set()
    trans = []
    for site in range(len(arr) // 2):
        if site in done:
            continue
        v1, v2 = arr[2 * site], arr[2 * site + 1]
        cycle_sites = [site]
        walk = [v1, v2]
        while True:
            v = partner[walk[-1]]
            if v == v1:
                break
            s = arr.index(v) // 2
            cycle_sites.append(s)
            mate = arr[2 * s] if arr[2 * s + 1] == v else arr[2 * s + 1]
            walk += [v, mate]
        done.update(cycle_sites)
        for t in range(1, len(cycle_sites)):
            trans.append((v1, walk[2 * t]))
    new = apply_transpositions(arr, trans)
    return trans, new


def _chain_positions(arr, levels, inter):
    """Coordinates: intra-site gap from the coupling level, lambda0 between sites."""
    pos = [0.0]
    for s in range(1, len(arr)):
        if s % 2:
            gap = inter.spacing(levels[s // 2])
        else:
            gap = inter.lambda0
        pos.append(pos[-1] + gap)
    return pos


def prep_waveform():
    return [{"omega": PREP_OMEGA, "delta": PREP_DELTA, "t0": 0.0, "t1": 1.0}]


def build_schedule(G, inter=None):
    """One analog block per colour class, with arrangements and swap lists between them."""
    if G.r != 2:
        raise ValueError(f"analog schedule needs a two-body Hamiltonian, got r={G.r}")
    inter = inter or Interaction()
    Q = G.Q
    one_body = [0] * Q
    pair = {}
    for S, g in G.terms.items():
        if len(S) == 1 or S[0] == S[1]:
            one_body[S[0]] += g
        else:
            pair[S] = g
    level = {e: z3_level(g) for e, g in pair.items()}
    coloring = round_robin_coloring(Q)
    aux = Q if Q % 2 else None
    share = [Q - 1] * Q
    blocks, swaps = [], []
    arr = None
    for k, cls in enumerate(coloring.classes):
        full = list(cls) + ([(coloring.idle[k], aux)] if aux is not None else [])
        if arr is None:
            arr = [v for e in full for v in e]
        else:
            trans, arr = transition_swaps(arr, full)
            swaps.append(trans)
        sites = [tuple(sorted(arr[2 * s: 2 * s + 2])) for s in range(len(arr) // 2)]
        levels = [level.get(e, 0) if aux not in e else 0 for e in sites]
        det = [0.0] * Q
        for i, j in cls:
            det[i] = one_body[i] / share[i]
            det[j] = one_body[j] / share[j]
        pairs = [(i, j, pair.get((i, j), 0.0)) for i, j in cls]
        blocks.append(AnalogBlock(pairs, det, list(arr), _chain_positions(arr, levels, inter)))
    return AnalogSchedule(Q, blocks, swaps, prep_waveform(), inter)


def positions_for_block(block, inter=None):
    """Chain coordinates for ``block`` and the residual interaction from every non-target atom pair.

    Returns (positions, leakage) where leakage sums C6/r^6 over all atom
    pairs except the coupled pair sites. The empty site (odd Q) is skipped.
    """
    inter = inter or Interaction()
    arr = block.arrangement
    Q = len(block.detunings)
    gam = {(i, j): g for i, j, g in block.pairs}
    coupled = {e for e, g in gam.items() if z3_level(g) != 0}
    levels = []
    for site in range(len(arr) // 2):
        e = tuple(sorted(arr[2 * site: 2 * site + 2]))
        levels.append(z3_level(gam[e]) if e in coupled else 0)
    pos = _chain_positions(arr, levels, inter)
    leak = 0.0
    for a in range(len(arr)):
        for b in range(a + 1, len(arr)):
            if arr[a] >= Q or arr[b] >= Q:
                continue
            if (min(arr[a], arr[b]), max(arr[a], arr[b])) in coupled:
                continue
            leak += inter.potential(abs(pos[b] - pos[a]))
    return pos, leak


def _drive_unitary(prep):
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    n = np.diag([0.0, 1.0]).astype(complex)
    U = np.eye(2, dtype=complex)
    for seg in prep:
        H = seg["omega"] * X + seg["delta"] * n
        U = expm(-1j * H * (seg["t1"] - seg["t0"])) @ U
    return U


def _apply_single(state, U, q):
    v = state.reshape(-1, 2, 2**q)
    a, b = v[:, 0, :].copy(), v[:, 1, :].copy()
    v[:, 0, :] = U[0, 0] * a + U[0, 1] * b
    v[:, 1, :] = U[1, 0] * a + U[1, 1] * b
    return state


def _swap_bits(state, a, b):
    idx = np.arange(state.size)
    diff = ((idx >> a) ^ (idx >> b)) & 1
    return state[np.where(diff, idx ^ ((1 << a) | (1 << b)), idx)]


def simulate_schedule(s, Q=None, basis="position"):
    """Final state of the schedule in the qubit basis (qubit i = logical qubit i).

    ``basis="position"`` evolves chain sites: couplings come from the emitted
    coordinates through the interaction law and swaps act as SWAP gates on
    sites. ``basis="qubit"`` evolves logical qubits directly, reading the
    pairs off the arrangements derived from the swap lists.
    """
    Q = s.Q if Q is None else Q
    if Q != s.Q:
        raise ValueError(f"schedule is for Q={s.Q}, not {Q}")
    if Q > MAX_SIM_QUBITS:
        raise ResourceCapError(f"schedule simulation is capped at Q={MAX_SIM_QUBITS}, got {Q}")
    U = _drive_unitary(s.prep)
    arrs = s.arrangements()
    if basis == "qubit":
        return _simulate_logical(s, U, arrs)
    if basis != "position":
        raise ValueError(f"unknown basis {basis!r}")
    S = len(s.initial_arrangement)
    state = np.zeros(2**S, dtype=complex)
    state[0] = 1.0
    for slot, v in enumerate(arrs[0]):
        if v < Q:
            state = _apply_single(state, U, slot)
    idx = np.arange(2**S)
    bits = (idx[:, None] >> np.arange(S)[None, :]) & 1
    for k, block in enumerate(s.blocks):
        arr = arrs[k]
        phase = np.zeros(2**S)
        for slot, v in enumerate(arr):
            if v < Q:
                phase += block.detunings[v] * bits[:, slot]
        for a in range(S):
            for b in range(a + 1, S):
                if arr[a] >= Q or arr[b] >= Q:
                    continue
                V = s.interaction.ideal_coupling(abs(block.positions[b] - block.positions[a]))
                if V:
                    phase += V * bits[:, a] * bits[:, b]
        state = state * np.exp(-1j * phase)
        if k < len(s.swaps):
            for a, b in s.swaps[k]:
                state = _swap_bits(state, arr.index(a), arr.index(b))
                arr = apply_transpositions(arr, [(a, b)])
    # read logical amplitudes off the final arrangement (empty site stays |0>)
    final = arrs[len(s.blocks) - 1] if s.blocks else arrs[0]
    logical = np.arange(2**Q)
    site_index = np.zeros(2**Q, dtype=np.int64)
    for slot, v in enumerate(final):
        if v < Q:
            site_index |= ((logical >> v) & 1) << slot
    return state[site_index]


def _simulate_logical(s, U, arrs):
    Q = s.Q
    state = np.zeros(2**Q, dtype=complex)
    state[0] = 1.0
    for q in range(Q):
        state = _apply_single(state, U, q)
    idx = np.arange(2**Q)
    bits = (idx[:, None] >> np.arange(Q)[None, :]) & 1
    for k, block in enumerate(s.blocks):
        arr = arrs[k]
        phase = bits @ np.asarray(block.detunings, dtype=float)
        gam = {(i, j): g for i, j, g in block.pairs}
        for site in range(len(arr) // 2):
            e = tuple(sorted(arr[2 * site: 2 * site + 2]))
            if e[1] < Q and e in gam:
                phase = phase + float(gam[e]) * bits[:, e[0]] * bits[:, e[1]]
        state = state * np.exp(-1j * phase)
    return state


def schedule_to_dict(s):
    """JSON-ready dict; qubit labels are 1-based (label Q+1 is the empty site)."""
    return {
        "Q": s.Q,
        "interaction": s.interaction.to_dict(),
        "prep": s.prep,
        "blocks": [
            {
                "pairs": [[i + 1, j + 1, float(g)] for i, j, g in b.pairs],
                "detunings": [float(x) for x in b.detunings],
                "arrangement": [v + 1 for v in b.arrangement],
                "positions": list(b.positions),
            }
            for b in s.blocks
        ],
        "swaps": [[[a + 1, b + 1] for a, b in trans] for trans in s.swaps],
    }


def schedule_from_dict(d):
    blocks = [
        AnalogBlock(
            [(int(p[0]) - 1, int(p[1]) - 1, p[2]) for p in b["pairs"]],
            list(b["detunings"]),
            [int(v) - 1 for v in b["arrangement"]],
            list(b["positions"]),
        )
        for b in d["blocks"]
    ]
    inter = Interaction(**d["interaction"]) if "interaction" in d else Interaction()
    swaps = [[(int(a) - 1, int(b) - 1) for a, b in trans] for trans in d["swaps"]]
    return AnalogSchedule(d["Q"], blocks, swaps, d["prep"], inter)


def write_schedule(s, path):
    with open(path, "w") as fh:
        json.dump(schedule_to_dict(s), fh, indent=1)


def read_schedule(path):
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))
