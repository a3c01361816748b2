"""
In-memory R-tree over rectangles.

A Guttman-style R-tree with quadratic split. Leaf entries map an id to a rectangle key; points
are stored as degenerate rectangles. The same structure indexes group rectangles while grouping
with distance-to-all semantics and processed points while grouping with distance-to-any
semantics.
"""

from collections.abc import Iterator
from typing import Generic, TypeVar

from similarity_groupby.exceptions import DuplicateIdError, UnknownIdError
from similarity_groupby.geometry import Rect
from similarity_groupby.logger import get_logger

logger = get_logger(__name__)

__all__ = ["RTree", "IndexStructureError", "DEFAULT_MAX_ENTRIES", "DEFAULT_MIN_ENTRIES"]

DEFAULT_MAX_ENTRIES = 16
DEFAULT_MIN_ENTRIES = 6

IdT = TypeVar("IdT")


class IndexStructureError(AssertionError):
    """Raised by RTree.validate when a structural invariant does not hold."""


class _Node:
    """
    Tree node holding parallel lists of keys and items.

    For leaves the items are entry ids; for internal nodes they are child nodes whose key is
    the child's minimum bounding rectangle.
    """

    __slots__ = ("leaf", "rects", "items", "parent")

    def __init__(self, leaf: bool, parent: "_Node | None" = None):
        self.leaf = leaf
        self.rects: list[Rect] = []
        self.items: list = []
        self.parent = parent

    def __len__(self) -> int:
        return len(self.items)

    def mbr(self) -> Rect:
        return Rect.bounding(self.rects)


class RTree(Generic[IdT]):
    """
    R-tree keyed by Rect with unique ids.

    Example:
    -------
        >>> tree = RTree()
        >>> tree.insert(1, Rect(0, 0, 1, 1))
        >>> tree.window_query(Rect(1, 1, 2, 2))
        [1]

    """

    def __init__(self, max_entries: int = DEFAULT_MAX_ENTRIES, min_entries: int = DEFAULT_MIN_ENTRIES):
        if max_entries < 4:
            raise ValueError(f"max_entries must be at least 4, got {max_entries}")
        if not 2 <= min_entries <= max_entries // 2:
            raise ValueError(f"min_entries must be in [2, {max_entries // 2}], got {min_entries}")
        self.max_entries = max_entries
        self.min_entries = min_entries
        self._root: _Node = _Node(leaf=True)
        self._leaf_of: dict[IdT, _Node] = {}

    # ------------------------------------------------------------------ queries

    def __len__(self) -> int:
        return len(self._leaf_of)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._leaf_of

    def get_key(self, item_id: IdT) -> Rect:
        leaf = self._leaf_of.get(item_id)
        if leaf is None:
            raise UnknownIdError(item_id, "spatial index")
        return leaf.rects[leaf.items.index(item_id)]

    def items(self) -> Iterator[tuple[IdT, Rect]]:
        """All (id, key) entries, in no particular order."""
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.leaf:
                yield from zip(node.items, node.rects, strict=True)
            else:
                stack.extend(node.items)

    def height(self) -> int:
        depth, node = 1, self._root
        while not node.leaf:
            node = node.items[0]
            depth += 1
        return depth

    def window_query(self, window: Rect) -> list[IdT]:
        """
        Ids of every entry whose key intersects ``window`` (inclusive boundaries).

        Returns
        -------
            Matching ids sorted ascending.

        """
        found: list[IdT] = []
        stack = [self._root]
        wx0, wy0, wx1, wy1 = window
        while stack:
            node = stack.pop()
            if node.leaf:
                for (x0, y0, x1, y1), item in zip(node.rects, node.items, strict=True):
                    if x0 <= wx1 and wx0 <= x1 and y0 <= wy1 and wy0 <= y1:
                        found.append(item)
            else:
                for (x0, y0, x1, y1), child in zip(node.rects, node.items, strict=True):
                    if x0 <= wx1 and wx0 <= x1 and y0 <= wy1 and wy0 <= y1:
                        stack.append(child)
        found.sort()
        return found

    # ---------------------------------------------------------------- mutations

    def insert(self, item_id: IdT, key: Rect) -> None:
        """
        Add an entry.

        Raises
        ------
            DuplicateIdError: If ``item_id`` is already indexed.

        """
        if item_id in self._leaf_of:
            raise DuplicateIdError(item_id, "spatial index")
        if not key.is_valid():
            raise ValueError(f"Invalid rectangle key {key}")
        self._insert_entry(item_id, key)

    def remove(self, item_id: IdT) -> None:
        """
        Delete an entry.

        Raises
        ------
            UnknownIdError: If ``item_id`` is not indexed.

        """
        leaf = self._leaf_of.pop(item_id, None)
        if leaf is None:
            raise UnknownIdError(item_id, "spatial index")
        index = leaf.items.index(item_id)
        del leaf.items[index]
        del leaf.rects[index]
        self._condense(leaf)

    def update_key(self, item_id: IdT, new_key: Rect) -> None:
        """
        Replace the key of an existing entry.

        A key that stays inside the old one is tightened in place; anything else is a remove
        followed by an insert.

        Raises
        ------
            UnknownIdError: If ``item_id`` is not indexed.

        """
        leaf = self._leaf_of.get(item_id)
        if leaf is None:
            raise UnknownIdError(item_id, "spatial index")
        if not new_key.is_valid():
            raise ValueError(f"Invalid rectangle key {new_key}")
        index = leaf.items.index(item_id)
        if leaf.rects[index].contains_rect(new_key):
            leaf.rects[index] = new_key
            self._tighten_upwards(leaf)
            return
        self.remove(item_id)
        self._insert_entry(item_id, new_key)

    # ----------------------------------------------------------------- internals

    def _insert_entry(self, item_id: IdT, key: Rect) -> None:
        leaf = self._choose_leaf(key)
        leaf.rects.append(key)
        leaf.items.append(item_id)
        self._leaf_of[item_id] = leaf
        self._adjust_tree(leaf)

    def _choose_leaf(self, key: Rect) -> _Node:
        node = self._root
        while not node.leaf:
            best_index = 0
            best_growth = best_area = float("inf")
            for i, r in enumerate(node.rects):
                area = r.area()
                growth = r.union(key).area() - area
                if growth < best_growth or (growth == best_growth and area < best_area):
                    best_index, best_growth, best_area = i, growth, area
            node = node.items[best_index]
        return node

    def _adjust_tree(self, node: _Node) -> None:
        """Propagate MBR changes from ``node`` to the root, splitting overflowing nodes."""
        while True:
            sibling = self._split(node) if len(node) > self.max_entries else None
            parent = node.parent
            if parent is None:
                if sibling is not None:
                    root = _Node(leaf=False)
                    for child in (node, sibling):
                        child.parent = root
                        root.rects.append(child.mbr())
                        root.items.append(child)
                    self._root = root
                    logger.debug(f"R-tree root split, height now {self.height()}")
                return
            parent.rects[parent.items.index(node)] = node.mbr()
            if sibling is not None:
                sibling.parent = parent
                parent.rects.append(sibling.mbr())
                parent.items.append(sibling)
            node = parent

    def _tighten_upwards(self, node: _Node) -> None:
        while node.parent is not None:
            parent = node.parent
            parent.rects[parent.items.index(node)] = node.mbr()
            node = parent

    def _split(self, node: _Node) -> _Node:
        """Quadratic split: ``node`` keeps one group, the returned sibling gets the other."""
        rects = node.rects
        items = node.items
        count = len(items)

        # Pick the pair wasting the most area as seeds.
        seed_a, seed_b, worst = 0, 1, -float("inf")
        for i in range(count - 1):
            ri = rects[i]
            area_i = ri.area()
            for j in range(i + 1, count):
                waste = ri.union(rects[j]).area() - area_i - rects[j].area()
                if waste > worst:
                    seed_a, seed_b, worst = i, j, waste

        group_a = [seed_a]
        group_b = [seed_b]
        mbr_a = rects[seed_a]
        mbr_b = rects[seed_b]
        remaining = [i for i in range(count) if i != seed_a and i != seed_b]

        while remaining:
            if len(group_a) + len(remaining) <= self.min_entries:
                group_a.extend(remaining)
                for i in remaining:
                    mbr_a = mbr_a.union(rects[i])
                break
            if len(group_b) + len(remaining) <= self.min_entries:
                group_b.extend(remaining)
                for i in remaining:
                    mbr_b = mbr_b.union(rects[i])
                break
            # Entry with the strongest preference for one group goes next.
            area_a = mbr_a.area()
            area_b = mbr_b.area()
            pick_pos, pick_diff, pick_da, pick_db = 0, -1.0, 0.0, 0.0
            for pos, i in enumerate(remaining):
                da = mbr_a.union(rects[i]).area() - area_a
                db = mbr_b.union(rects[i]).area() - area_b
                diff = abs(da - db)
                if diff > pick_diff:
                    pick_pos, pick_diff, pick_da, pick_db = pos, diff, da, db
            i = remaining.pop(pick_pos)
            if pick_da < pick_db:
                to_a = True
            elif pick_db < pick_da:
                to_a = False
            elif area_a != area_b:
                to_a = area_a < area_b
            else:
                to_a = len(group_a) <= len(group_b)
            if to_a:
                group_a.append(i)
                mbr_a = mbr_a.union(rects[i])
            else:
                group_b.append(i)
                mbr_b = mbr_b.union(rects[i])

        sibling = _Node(leaf=node.leaf, parent=node.parent)
        sibling.rects = [rects[i] for i in group_b]
        sibling.items = [items[i] for i in group_b]
        node.rects = [rects[i] for i in group_a]
        node.items = [items[i] for i in group_a]
        if node.leaf:
            for item in sibling.items:
                self._leaf_of[item] = sibling
        else:
            for child in sibling.items:
                child.parent = sibling
        return sibling

    def _condense(self, leaf: _Node) -> None:
        """Remove underfull nodes on the path to the root and reinsert their entries."""
        orphans: list[tuple[IdT, Rect]] = []
        node = leaf
        while node.parent is not None:
            parent = node.parent
            position = parent.items.index(node)
            if len(node) < self.min_entries:
                del parent.items[position]
                del parent.rects[position]
                orphans.extend(self._collect_entries(node))
            else:
                parent.rects[position] = node.mbr()
            node = parent

        root = self._root
        if not root.leaf and len(root) == 1:
            root = root.items[0]
            root.parent = None
            self._root = root
        elif not root.leaf and len(root) == 0:
            self._root = _Node(leaf=True)

        for item_id, key in orphans:
            self._insert_entry(item_id, key)

    def _collect_entries(self, node: _Node) -> list[tuple[IdT, Rect]]:
        entries: list[tuple[IdT, Rect]] = []
        stack = [node]
        while stack:
            current = stack.pop()
            if current.leaf:
                for item in current.items:
                    del self._leaf_of[item]
                entries.extend(zip(current.items, current.rects, strict=True))
            else:
                stack.extend(current.items)
        return entries

    # ---------------------------------------------------------------- validation

    def validate(self) -> None:
        """
        Walk the whole tree and check its structural invariants.

        Checks parent links, that stored child keys equal the child MBRs, uniform leaf depth,
        fanout bounds and the id-to-leaf map.

        Raises
        ------
            IndexStructureError: Describing the first violation found.

        """
        root = self._root
        if root.parent is not None:
            raise IndexStructureError("Root has a parent")
        if not root.leaf and len(root) < 2:
            raise IndexStructureError(f"Internal root has {len(root)} children")
        leaf_depths: set[int] = set()
        seen = 0
        stack: list[tuple[_Node, int]] = [(root, 1)]
        while stack:
            node, depth = stack.pop()
            if len(node.rects) != len(node.items):
                raise IndexStructureError("Node keys and items out of sync")
            if len(node) > self.max_entries:
                raise IndexStructureError(f"Node holds {len(node)} entries, more than {self.max_entries}")
            if node is not root and len(node) < self.min_entries:
                raise IndexStructureError(f"Node holds {len(node)} entries, fewer than {self.min_entries}")
            if node.leaf:
                leaf_depths.add(depth)
                for item in node.items:
                    if self._leaf_of.get(item) is not node:
                        raise IndexStructureError(f"Id {item!r} not mapped to its leaf")
                seen += len(node)
                continue
            for key, child in zip(node.rects, node.items, strict=True):
                if child.parent is not node:
                    raise IndexStructureError("Child has a wrong parent link")
                if len(child) == 0:
                    raise IndexStructureError("Empty non-root node")
                if key != child.mbr():
                    raise IndexStructureError(f"Stored key {key} differs from child MBR {child.mbr()}")
                stack.append((child, depth + 1))
        if len(leaf_depths) > 1:
            raise IndexStructureError(f"Leaves at different depths: {sorted(leaf_depths)}")
        if seen != len(self._leaf_of):
            raise IndexStructureError(f"Tree holds {seen} entries but the id map holds {len(self._leaf_of)}")

