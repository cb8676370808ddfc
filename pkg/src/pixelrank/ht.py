"""Binary-tree product-pooling network (hierarchical Tucker format) for a
family's indicator function.

The tree has 2*log2(n) + 1 layers; leaves emit the basis vector (1 0) for a
black pixel and (0 1) for a white one, and every non-leaf node combines its
children's output vectors u (first child) and v (second child).  In the
generalized form the m-th output entry is v @ M_m @ u; the diagonal form
restricts to element-wise pooling, V_m @ (u * v), and is reachable from the
generalized form by duplicating channels.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .images import BinaryImage, ImageFamily, Region, gen_random_family, make_family, pad_family
from .rankcore import exact_rank, region_unfolding
from .tt import tt_eval_batch, tt_from_family

__all__ = [
    "TreeIndex",
    "Tree",
    "tree_structure",
    "verify_support_properties",
    "HTNetwork",
    "ht_from_family",
    "ht_eval",
    "ht_eval_batch",
    "diagonalize",
    "node_output_generalized",
    "node_output_diagonal",
    "layer_rank_table",
    "channel_scaling_report",
    "tt_ht_cross_check",
    "save_ht",
    "load_ht",
    "next_power_of_two",
]


@dataclass(frozen=True)
class TreeIndex:
    """Node address: layer i (1 = leaves), and spatial indices j, k."""

    i: int
    j: int
    k: int


def next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


class Tree:
    """The complete binary tree over an n-by-n grid, n a power of two.

    Layer i holds n^2 / 2^(i-1) nodes.  An even layer merges its children
    vertically, an odd layer (above the leaves) horizontally, so supports
    are squares on odd layers and 2:1 rectangles on even layers.
    """

    def __init__(self, n: int):
        if n < 2 or n & (n - 1):
            raise ValueError(f"side must be a power of two >= 2, got {n}")
        self.n = n
        self.n_layers = 2 * int(math.log2(n)) + 1
        self.layers: dict[int, list[TreeIndex]] = {}
        for i in range(1, self.n_layers + 1):
            jmax = n // (1 << (i // 2))
            kmax = n // (1 << ((i - 1) // 2))
            self.layers[i] = [
                TreeIndex(i, j, k)
                for j in range(1, jmax + 1)
                for k in range(1, kmax + 1)
            ]

    @property
    def root(self) -> TreeIndex:
        return TreeIndex(self.n_layers, 1, 1)

    def children(self, node: TreeIndex) -> tuple[TreeIndex, TreeIndex] | None:
        if node.i == 1:
            return None
        if node.i % 2 == 0:
            return (
                TreeIndex(node.i - 1, 2 * node.j - 1, node.k),
                TreeIndex(node.i - 1, 2 * node.j, node.k),
            )
        return (
            TreeIndex(node.i - 1, node.j, 2 * node.k - 1),
            TreeIndex(node.i - 1, node.j, 2 * node.k),
        )

    def parent(self, node: TreeIndex) -> TreeIndex | None:
        if node.i == self.n_layers:
            return None
        up = node.i + 1
        if up % 2 == 0:
            return TreeIndex(up, (node.j + 1) // 2, node.k)
        return TreeIndex(up, node.j, (node.k + 1) // 2)

    def sibling(self, node: TreeIndex) -> TreeIndex | None:
        parent = self.parent(node)
        if parent is None:
            return None
        first, second = self.children(parent)
        return second if node == first else first

    def is_first_child(self, node: TreeIndex) -> bool | None:
        """Whether the node is its parent's first input (None for the root)."""
        parent = self.parent(node)
        if parent is None:
            return None
        return self.children(parent)[0] == node

    def support(self, node: TreeIndex) -> Region:
        """The pixel rectangle covered by the node's leaf descendants."""
        height = 1 << (node.i // 2)
        width = 1 << ((node.i - 1) // 2)
        top = (node.j - 1) * height + 1
        left = (node.k - 1) * width + 1
        return Region.rectangle(top, left, height, width, self.n)


def tree_structure(n: int) -> Tree:
    return Tree(n)


def verify_support_properties(tree: Tree) -> dict[str, bool]:
    """Re-verify the support properties by brute force: supports equal the
    leaf descendants' pixels, same-layer supports tile the grid disjointly,
    a parent's support is the union of its children's, and shapes alternate
    between squares (odd layers) and 2:1 rectangles (even layers)."""
    n = tree.n
    sizes_ok = all(
        len(tree.layers[i]) == n * n // (1 << (i - 1))
        for i in range(1, tree.n_layers + 1)
    )
    disjoint_ok = True
    union_ok = True
    shapes_ok = True
    descendants_ok = True
    full = set(range(1, n * n + 1))

    def leaf_pixels(node: TreeIndex) -> set[int]:
        kids = tree.children(node)
        if kids is None:
            return set(tree.support(node).pixels())
        return leaf_pixels(kids[0]) | leaf_pixels(kids[1])

    for i in range(1, tree.n_layers + 1):
        covered: set[int] = set()
        for node in tree.layers[i]:
            pix = set(tree.support(node).pixels())
            if covered & pix:
                disjoint_ok = False
            covered |= pix
            _, _, h, w = tree.support(node).params
            if i % 2 == 1 and h != w:
                shapes_ok = False
            if i % 2 == 0 and h != 2 * w:
                shapes_ok = False
            if leaf_pixels(node) != pix:
                descendants_ok = False
            kids = tree.children(node)
            if kids:
                merged = set(tree.support(kids[0]).pixels()) | set(
                    tree.support(kids[1]).pixels()
                )
                if merged != pix:
                    union_ok = False
        if covered != full:
            disjoint_ok = False
    return {
        "layer_sizes": sizes_ok,
        "leaf_descendants": descendants_ok,
        "disjoint": disjoint_ok,
        "parent_union": union_ok,
        "shapes": shapes_ok,
    }


class HTNetwork:
    """Tree network with uniform per-layer channel counts.

    Generalized form: params[node] stacks matrices, shape
    (l_i, l_{i-1}, l_{i-1}), evaluated as out_m = v @ params[m] @ u.
    Diagonal form: params[node] stacks vectors, shape (l_i, l_{i-1}),
    evaluated as out_m = params[m] @ (u * v); every node's output is the
    channel-duplicated copy of its generalized counterpart.
    """

    def __init__(self, n, form, layer_widths, params, node_ranks=None, original_n=None):
        if form not in ("generalized", "diagonal"):
            raise ValueError(f"unknown form {form!r}")
        self.n = n
        self.form = form
        self.tree = Tree(n)
        self.layer_widths = list(layer_widths)
        if len(self.layer_widths) != self.tree.n_layers:
            raise ValueError("one width per layer required")
        self.params = dict(params)
        self.node_ranks = dict(node_ranks) if node_ranks else {}
        self.original_n = original_n if original_n is not None else n

    def width(self, layer: int) -> int:
        return self.layer_widths[layer - 1]

    def __repr__(self) -> str:
        return f"HTNetwork(n={self.n}, form={self.form}, widths={self.layer_widths})"


def node_output_generalized(mats: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """out_m = v @ mats[m] @ u."""
    return np.einsum("mqp,q,p->m", mats, v, u)


def node_output_diagonal(vecs: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """out_m = vecs[m] @ (u * v)."""
    return vecs @ (u * v)


def _member_configs(bits: np.ndarray, pixel_idx: np.ndarray):
    """Distinct configurations (sorted) of the members on a pixel subset and
    each member's configuration index."""
    sub = bits[:, pixel_idx]
    keys = [row.tobytes() for row in sub]
    configs = sorted(set(keys))
    pos = {cfg: c for c, cfg in enumerate(configs)}
    return configs, np.array([pos[key] for key in keys], dtype=np.intp)


def ht_from_family(family: ImageFamily, tol: float = 1e-9) -> HTNetwork:
    """Exact generalized-form network for the family's indicator.

    Families whose side is not a power of two are padded with white pixels
    first.  The build walks leaves-to-root, at each node taking an
    orthonormal basis (by SVD) of the occupied row space of the node's
    support-against-complement unfolding, and solving each layer's mixing
    matrices against the children's bases.  Per-layer channel counts are the
    maximal node rank in the layer; narrower nodes are zero-padded.
    """
    original_n = family.n
    target = next_power_of_two(max(family.n, 2))
    if target != family.n:
        family = pad_family(family, target)
    n = family.n
    tree = Tree(n)
    L = tree.n_layers
    m = len(family)

    if m == 0:
        widths = [2] + [1] * (L - 1)
        params = {}
        for i in range(2, L + 1):
            prev = widths[i - 2]
            for node in tree.layers[i]:
                params[node] = np.zeros((widths[i - 1], prev, prev))
        return HTNetwork(n, "generalized", widths, params, original_n=original_n)

    bits = family.bit_matrix()
    all_pixels = np.arange(n * n, dtype=np.intp)

    # Per-node state from the layer below: padded basis matrix (l_i x d),
    # per-member config index, config count.
    phi: dict[TreeIndex, np.ndarray] = {}
    cfg_idx: dict[TreeIndex, np.ndarray] = {}
    node_ranks: dict[TreeIndex, int] = {}

    for leaf in tree.layers[1]:
        sup = np.array([p - 1 for p in tree.support(leaf).pixels()], dtype=np.intp)
        # Config order [black, white] so the basis is the identity.
        cfg_idx[leaf] = 1 - bits[:, sup[0]]
        phi[leaf] = np.eye(2)
        node_ranks[leaf] = 2
    widths = [2]

    params: dict[TreeIndex, np.ndarray] = {}
    for i in range(2, L + 1):
        raw: dict[TreeIndex, tuple[np.ndarray, np.ndarray]] = {}
        for node in tree.layers[i]:
            sup = np.array([p - 1 for p in tree.support(node).pixels()], dtype=np.intp)
            comp = np.setdiff1d(all_pixels, sup, assume_unique=True)
            configs, idx = _member_configs(bits, sup)
            if comp.size:
                _, comp_idx = _member_configs(bits, comp)
            else:
                comp_idx = np.zeros(m, dtype=np.intp)
            d = len(configs)
            dc = int(comp_idx.max()) + 1
            biadj = np.zeros((d, dc))
            biadj[idx, comp_idx] = 1.0
            if i == L:
                # The root target is the indicator itself, not a normalized
                # basis of it.
                basis = np.ones((1, d))
                r = 1
            else:
                u, s, _ = np.linalg.svd(biadj, full_matrices=False)
                r = max(int(np.count_nonzero(s > tol * s[0])) if s[0] > 0 else 0, 1)
                basis = u[:, :r].T
            raw[node] = (basis, idx)
            cfg_idx[node] = idx
            node_ranks[node] = r
        l_i = max(basis.shape[0] for basis, _ in raw.values())
        widths.append(l_i)
        prev = widths[i - 2]
        for node in tree.layers[i]:
            basis, idx = raw[node]
            padded = np.zeros((l_i, basis.shape[1]))
            padded[: basis.shape[0]] = basis
            phi[node] = padded
            child1, child2 = tree.children(node)
            a_idx = cfg_idx[child1]
            b_idx = cfg_idx[child2]
            # One (child1, child2) configuration pair per node configuration.
            d = basis.shape[1]
            pair_a = np.zeros(d, dtype=np.intp)
            pair_b = np.zeros(d, dtype=np.intp)
            pair_a[idx] = a_idx
            pair_b[idx] = b_idx
            d1 = phi[child1].shape[1]
            d2 = phi[child2].shape[1]
            mats = np.zeros((l_i, prev, prev))
            for mm in range(basis.shape[0]):
                grid = np.zeros((d1, d2))
                grid[pair_a, pair_b] = padded[mm]
                c_m = phi[child1] @ grid @ phi[child2].T
                mats[mm] = c_m.T
            params[node] = mats
        # Children's bases are no longer needed.
        for node in tree.layers[i - 1]:
            del phi[node], cfg_idx[node]

    return HTNetwork(
        n, "generalized", widths, params, node_ranks=node_ranks, original_n=original_n
    )


def _leaf_basis_batch(bits_col: np.ndarray) -> np.ndarray:
    out = np.zeros((bits_col.shape[0], 2))
    out[bits_col == 1, 0] = 1.0
    out[bits_col == 0, 1] = 1.0
    return out


def ht_eval(net: HTNetwork, image: BinaryImage) -> float:
    """Bottom-up evaluation of one image; returns the root scalar."""
    if image.n != net.n:
        raise ValueError(f"image side {image.n} does not match network side {net.n}")
    bits = np.frombuffer(image.bits, dtype=np.uint8).reshape(1, -1)
    return float(ht_eval_batch(net, bits)[0])


def ht_eval_batch(net: HTNetwork, bits: np.ndarray) -> np.ndarray:
    """Evaluate many images; bits has one row per image in flat pixel order."""
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != net.n * net.n:
        raise ValueError("bit matrix shape does not match the network")
    tree = net.tree
    outs: dict[TreeIndex, np.ndarray] = {}
    for leaf in tree.layers[1]:
        col = bits[:, tree.support(leaf).pixels()[0] - 1]
        base = _leaf_basis_batch(col)
        if net.form == "diagonal":
            if tree.is_first_child(leaf):
                base = np.tile(base, 2)
            else:
                base = np.repeat(base, 2, axis=1)
        outs[leaf] = base
    for i in range(2, tree.n_layers + 1):
        for node in tree.layers[i]:
            child1, child2 = tree.children(node)
            u = outs.pop(child1)
            v = outs.pop(child2)
            p = net.params[node]
            if net.form == "generalized":
                # out[n, m] = sum_qp v[n,q] M[m,q,p] u[n,p]
                pooled = (v[:, :, None] * u[:, None, :]).reshape(bits.shape[0], -1)
                outs[node] = pooled @ p.reshape(p.shape[0], -1).T
            else:
                outs[node] = (u * v) @ p.T
    return outs[tree.root][:, 0]


def diagonalize(net: HTNetwork) -> HTNetwork:
    """Convert a generalized network to diagonal (element-wise pooling) form.

    Channel counts square in every layer.  Each node's matrices flatten
    row-major into vectors, and each node emits its own output duplicated in
    the order its parent expects: a first child tiles its channels, a second
    child repeats each entry.  The root keeps a single channel.
    """
    if net.form != "generalized":
        raise ValueError("network is already in diagonal form")
    tree = net.tree
    params: dict[TreeIndex, np.ndarray] = {}
    for i in range(2, tree.n_layers + 1):
        l_i = net.width(i)
        for node in tree.layers[i]:
            mats = net.params[node]
            first = tree.is_first_child(node)
            if first is None:
                # The root has a single channel and nobody above to feed.
                order = [0]
            elif first:
                order = [mp % l_i for mp in range(l_i * l_i)]
            else:
                order = [mp // l_i for mp in range(l_i * l_i)]
            params[node] = np.stack([mats[mm].reshape(-1) for mm in order])
    return HTNetwork(
        net.n,
        "diagonal",
        [w * w for w in net.layer_widths],
        params,
        node_ranks=net.node_ranks,
        original_n=net.original_n,
    )


def layer_rank_table(family: ImageFamily) -> dict[TreeIndex, int]:
    """Exact integer rank of the support-against-complement unfolding for
    every tree node; the independent counterpart of the network widths."""
    original = family
    target = next_power_of_two(max(family.n, 2))
    if target != family.n:
        family = pad_family(family, target)
    tree = Tree(family.n)
    table = {}
    for i in range(1, tree.n_layers + 1):
        for node in tree.layers[i]:
            region = tree.support(node)
            if region.size == family.n * family.n:
                table[node] = 1 if len(family) else 0
            else:
                table[node] = exact_rank(region_unfolding(family, region))
    return table


@dataclass
class ChannelScalingReport:
    """Per-layer channel widths with the fitted linear bound on log2 width
    versus layer index, and a size-matched random baseline."""

    per_n: dict[int, list[int]]
    boundary_per_layer: dict[int, list[int]]
    fitted_slope: dict[int, float]
    fitted_offset: dict[int, float]
    random_widths: dict[int, list[int]]
    node_ranks: dict[int, dict[TreeIndex, int]]


def channel_scaling_report(
    generator: str,
    ns: list[int],
    gen_params: dict | None = None,
    tol: float = 1e-9,
    random_seed: int = 1,
) -> ChannelScalingReport:
    """Measure channel growth per layer for a structured generator and a
    random family of matching member count."""
    params = dict(gen_params or {})
    per_n: dict[int, list[int]] = {}
    boundaries: dict[int, list[int]] = {}
    slopes: dict[int, float] = {}
    offsets: dict[int, float] = {}
    random_widths: dict[int, list[int]] = {}
    ranks: dict[int, dict[TreeIndex, int]] = {}
    for n in ns:
        if n < 2 or n & (n - 1):
            raise ValueError("tree networks need power-of-two sides")
        family = make_family(generator, n, **params)
        net = ht_from_family(family, tol=tol)
        per_n[n] = list(net.layer_widths)
        tree = net.tree
        boundaries[n] = [
            tree.support(tree.layers[i][0]).boundary_length
            for i in range(1, tree.n_layers + 1)
        ]
        xs = np.arange(1, tree.n_layers + 1, dtype=float)
        ys = np.log2(np.array(net.layer_widths, dtype=float))
        slope, _ = np.polyfit(xs, ys, 1)
        slopes[n] = float(slope)
        offsets[n] = float(np.max(ys - slope * xs))
        ranks[n] = dict(net.node_ranks)
        rnd = gen_random_family(n, len(family), seed=random_seed)
        random_widths[n] = list(ht_from_family(rnd, tol=tol).layer_widths)
    return ChannelScalingReport(per_n, boundaries, slopes, offsets, random_widths, ranks)


@dataclass
class CrossCheckReport:
    n_probes: int
    max_dev_tt_ht: float
    max_dev_f_tt: float
    max_dev_f_ht: float


def tt_ht_cross_check(
    family: ImageFamily, n_probes: int = 10_000, seed: int = 0, tol: float = 1e-9
) -> CrossCheckReport:
    """Both formats represent the same function; compare them against each
    other and against membership on all members plus random probes."""
    target = next_power_of_two(max(family.n, 2))
    if target != family.n:
        family = pad_family(family, target)
    train = tt_from_family(family, tol=tol)
    net = ht_from_family(family, tol=tol)
    n2 = family.n * family.n
    rng = random.Random(seed)
    rows = [np.frombuffer(img.bits, dtype=np.uint8) for img in family]
    truth = [1.0] * len(rows)
    for _ in range(n_probes):
        probe = np.array([rng.getrandbits(1) for _ in range(n2)], dtype=np.uint8)
        rows.append(probe)
        truth.append(float(family.indicator(BinaryImage(family.n, probe.tobytes()))))
    bits = np.vstack(rows) if rows else np.zeros((0, n2), dtype=np.uint8)
    truth_arr = np.array(truth)
    tt_vals = tt_eval_batch(train, bits) if len(bits) else np.zeros(0)
    ht_vals = ht_eval_batch(net, bits) if len(bits) else np.zeros(0)
    return CrossCheckReport(
        n_probes=len(bits),
        max_dev_tt_ht=float(np.max(np.abs(tt_vals - ht_vals), initial=0.0)),
        max_dev_f_tt=float(np.max(np.abs(tt_vals - truth_arr), initial=0.0)),
        max_dev_f_ht=float(np.max(np.abs(ht_vals - truth_arr), initial=0.0)),
    )


_HT_MAGIC = "pixelrank-ht 1"


def save_ht(net: HTNetwork, path) -> None:
    """Versioned text serialization; node blocks in (i, j, k) order, one
    row-major parameter line per output channel."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(_HT_MAGIC + "\n")
        fh.write(f"n={net.n}\n")
        fh.write(f"original_n={net.original_n}\n")
        fh.write(f"form={net.form}\n")
        fh.write("widths=" + " ".join(str(w) for w in net.layer_widths) + "\n")
        for node in sorted(net.params, key=lambda t: (t.i, t.j, t.k)):
            fh.write(f"node {node.i} {node.j} {node.k}\n")
            block = net.params[node]
            for mm in range(block.shape[0]):
                fh.write(" ".join("%.17g" % x for x in block[mm].reshape(-1)) + "\n")


def load_ht(path) -> HTNetwork:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _HT_MAGIC:
        raise ValueError("not a network file")
    n = int(lines[1].removeprefix("n="))
    original_n = int(lines[2].removeprefix("original_n="))
    form = lines[3].removeprefix("form=")
    widths = [int(tok) for tok in lines[4].removeprefix("widths=").split()]
    params = {}
    pos = 5
    while pos < len(lines):
        if not lines[pos].startswith("node "):
            raise ValueError(f"expected node header at line {pos + 1}")
        i, j, k = (int(tok) for tok in lines[pos].split()[1:])
        node = TreeIndex(i, j, k)
        l_i = widths[i - 1]
        prev = widths[i - 2]
        pos += 1
        rows = []
        for _ in range(l_i):
            vals = [float(tok) for tok in lines[pos].split()]
            rows.append(vals)
            pos += 1
        if form == "generalized":
            params[node] = np.array(rows).reshape(l_i, prev, prev)
        else:
            params[node] = np.array(rows).reshape(l_i, prev)
    return HTNetwork(n, form, widths, params, original_n=original_n)
