"""Exhaustive depth-first computation of exact optima and value-to-go.

The value-to-go of a partial assignment is its own value when complete,
otherwise the max over the m children that place the next free element.
The search tree has branching m and depth equal to the number of free
elements, so cost is m^depth; callers accept that cost explicitly through
a node budget, and the budget check happens before any work.

The two deepest levels are evaluated as one vectorized block. Leaf values
are always produced by gathering the m bundle entries of a complete
assignment and reducing along the row, which keeps results bit-identical
to a flat enumeration over all completions.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import ElementOrder, PartialAssignment, UNASSIGNED, ValueTable, expand_children

DEFAULT_NODE_BUDGET = 10**8


class BudgetExceededError(RuntimeError):
    """Raised when a search would visit more nodes than the caller allowed."""

    def __init__(self, needed: int, budget: int, context: str = "") -> None:
        where = f" ({context})" if context else ""
        super().__init__(f"search needs {needed} nodes, budget is {budget}{where}")
        self.needed = needed
        self.budget = budget
        self.context = context


def dfs_node_count(m: int, depth: int) -> int:
    """Nodes in a full m-ary tree of the given depth (root included)."""
    if m == 1:
        return depth + 1
    return (m ** (depth + 1) - 1) // (m - 1)


def _max_value(values: np.ndarray, masks: np.ndarray, cols: np.ndarray, rem: list[int], m: int) -> float:
    """Max completion value; `rem` holds the bit of each free element."""
    depth = len(rem)
    if depth == 0:
        return float(values[masks, cols].sum())
    if depth == 1:
        block = np.repeat(masks[None, :], m, axis=0)
        r = np.arange(m)
        block[r, r] |= rem[0]
        return float(values[block, cols].sum(axis=1).max())
    if depth == 2:
        k = m * m
        block = np.repeat(masks[None, :], k, axis=0)
        r = np.arange(k)
        block[r, r // m] |= rem[0]
        block[r, r % m] |= rem[1]
        return float(values[block, cols].sum(axis=1).max())
    bit = rem[0]
    rest = rem[1:]
    best = -np.inf
    for i in range(m):
        saved = masks[i]
        masks[i] = saved | bit
        val = _max_value(values, masks, cols, rest, m)
        masks[i] = saved
        if val > best:
            best = val
    return best


def exact_value_to_go(
    assignment: PartialAssignment,
    table: ValueTable,
    order: ElementOrder | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> float:
    """Best achievable total value over all completions of `assignment`.

    Free elements are expanded in the order they appear in `order`
    (identity by default); the maximum itself is order-invariant.
    """
    if assignment.n != table.n:
        raise ValueError(f"assignment has {assignment.n} elements, table expects {table.n}")
    if order is None:
        order = ElementOrder.identity(table.n)
    if len(order.perm) != table.n:
        raise ValueError("order length does not match the instance")
    rem = [1 << e for e in order.perm if not assignment.is_assigned(e)]
    needed = dfs_node_count(table.m, len(rem))
    if needed > node_budget:
        raise BudgetExceededError(needed, node_budget, f"depth {len(rem)}, branching {table.m}")
    masks = assignment.bundle_masks(table.m)
    cols = np.arange(table.m)
    return _max_value(table.values, masks, cols, rem, table.m)


def _argmax_search(
    values: np.ndarray,
    masks: np.ndarray,
    cols: np.ndarray,
    elems: list[int],
    labels: np.ndarray,
    m: int,
    best: list,
) -> None:
    """DFS twin of _max_value that also records the first argmax labeling."""
    depth = len(elems)
    if depth == 0:
        val = float(values[masks, cols].sum())
        if val > best[0]:
            best[0] = val
            best[1] = labels.copy()
        return
    if depth <= 2:
        if depth == 1:
            k = m
            r = np.arange(k)
            block = np.repeat(masks[None, :], k, axis=0)
            block[r, r] |= 1 << elems[0]
        else:
            k = m * m
            r = np.arange(k)
            block = np.repeat(masks[None, :], k, axis=0)
            block[r, r // m] |= 1 << elems[0]
            block[r, r % m] |= 1 << elems[1]
        leaf_vals = values[block, cols].sum(axis=1)
        pick = int(np.argmax(leaf_vals))
        val = float(leaf_vals[pick])
        if val > best[0]:
            best[0] = val
            winner = labels.copy()
            if depth == 1:
                winner[elems[0]] = pick
            else:
                winner[elems[0]] = pick // m
                winner[elems[1]] = pick % m
            best[1] = winner
        return
    e = elems[0]
    rest = elems[1:]
    bit = 1 << e
    for i in range(m):
        saved = masks[i]
        masks[i] = saved | bit
        labels[e] = i
        _argmax_search(values, masks, cols, rest, labels, m, best)
        masks[i] = saved
    labels[e] = UNASSIGNED


def solve_exact(table: ValueTable, node_budget: int = DEFAULT_NODE_BUDGET) -> tuple[PartialAssignment, float]:
    """Optimal complete assignment and its value, by exhaustive search.

    Ties resolve to the first optimum in lexicographic label order.
    """
    n, m = table.n, table.m
    needed = dfs_node_count(m, n)
    if needed > node_budget:
        raise BudgetExceededError(needed, node_budget, f"depth {n}, branching {m}")
    masks = np.zeros(m, dtype=np.int64)
    cols = np.arange(m)
    labels = np.full(n, UNASSIGNED, dtype=np.int64)
    best: list = [-np.inf, None]
    _argmax_search(table.values, masks, cols, list(range(n)), labels, m, best)
    return PartialAssignment.from_labels(best[1]), best[0]


def argmax_over_children(
    assignment: PartialAssignment,
    element: int,
    table: ValueTable,
    estimator: Callable[[PartialAssignment], float],
) -> int:
    """Index of the child maximizing the estimator; ties go to the lowest
    alternative index."""
    children = expand_children(assignment, element, table.m)
    best_i = 0
    best_score = estimator(children[0])
    for i in range(1, table.m):
        score = estimator(children[i])
        if score > best_score:
            best_i = i
            best_score = score
    return best_i
