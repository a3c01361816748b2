"""Union-find forest used to track merging groups under distance-to-any grouping."""

from collections.abc import Hashable, Iterator
from typing import Generic, TypeVar

from similarity_groupby.exceptions import DuplicateIdError, UnknownIdError

__all__ = ["DisjointSet"]

T = TypeVar("T", bound=Hashable)


class DisjointSet(Generic[T]):
    """
    Disjoint-set forest with path compression and union by rank.

    Each class carries metadata at its root: the member count and an optional integer label.
    The label of a merged class is the smallest label of the merged classes, which lets a
    caller number groups by creation order and keep the oldest number on merge.

    Example:
    -------
        >>> dsf = DisjointSet()
        >>> for item in (1, 2, 3):
        ...     dsf.make_set(item)
        >>> dsf.union(1, 2) == dsf.find(2)
        True
        >>> dsf.class_count
        2

    """

    def __init__(self) -> None:
        self._parent: dict[T, T] = {}
        self._rank: dict[T, int] = {}
        self._size: dict[T, int] = {}
        self._label: dict[T, int | None] = {}
        self._class_count = 0

    def __len__(self) -> int:
        return len(self._parent)

    def __contains__(self, item: object) -> bool:
        return item in self._parent

    def __iter__(self) -> Iterator[T]:
        return iter(self._parent)

    @property
    def class_count(self) -> int:
        return self._class_count

    def make_set(self, item: T, label: int | None = None) -> None:
        """
        Create a singleton class.

        Raises
        ------
            DuplicateIdError: If ``item`` already belongs to a class.

        """
        if item in self._parent:
            raise DuplicateIdError(item, "disjoint set")
        self._parent[item] = item
        self._rank[item] = 0
        self._size[item] = 1
        self._label[item] = label
        self._class_count += 1

    def find(self, item: T) -> T:
        """
        Root of the class containing ``item``; compresses the path on the way.

        Raises
        ------
            UnknownIdError: If ``item`` was never added.

        """
        parent = self._parent
        if item not in parent:
            raise UnknownIdError(item, "disjoint set")
        root = item
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return root

    def union(self, a: T, b: T) -> T:
        """
        Merge the classes of ``a`` and ``b``.

        Returns
        -------
            The root of the merged class. A no-op returning find(a) when both are already together.

        """
        root_a = self.find(a)
        root_b = self.find(b)
        if root_a == root_b:
            return root_a
        if self._rank[root_a] < self._rank[root_b]:
            root_a, root_b = root_b, root_a
        self._parent[root_b] = root_a
        if self._rank[root_a] == self._rank[root_b]:
            self._rank[root_a] += 1
        self._size[root_a] += self._size.pop(root_b)
        label_a = self._label[root_a]
        label_b = self._label.pop(root_b)
        if label_a is None or (label_b is not None and label_b < label_a):
            self._label[root_a] = label_b
        del self._rank[root_b]
        self._class_count -= 1
        return root_a

    def connected(self, a: T, b: T) -> bool:
        return self.find(a) == self.find(b)

    def size(self, item: T) -> int:
        """Member count of the class containing ``item``."""
        return self._size[self.find(item)]

    def label(self, item: T) -> int | None:
        """Label stored for the class containing ``item``."""
        return self._label[self.find(item)]

    def classes(self) -> dict[T, list[T]]:
        """
        Materialize every class.

        Returns
        -------
            Root to members; members keep insertion order and roots appear in order of their
            first member.

        """
        result: dict[T, list[T]] = {}
        for item in self._parent:
            result.setdefault(self.find(item), []).append(item)
        return result
