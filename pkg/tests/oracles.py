"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive (recursion, exhaustive enumeration,
plain loops) and shares no code with the library paths it checks.
"""

from __future__ import annotations

import math


def edit_distance_recursive(a, b) -> int:
    """Plain recursive Levenshtein distance; fine for lengths <= ~8."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        edit_distance_recursive(a[1:], b) + 1,
        edit_distance_recursive(a, b[1:]) + 1,
        edit_distance_recursive(a[1:], b[1:]) + (a[0] != b[0]),
    )


def nw_enumerate(sa, sb, sub, gap: float) -> float:
    """Best global-alignment score by exhaustive enumeration.

    Every alignment is a sequence of match / gap-in-a / gap-in-b moves that
    consumes both sequences; matches score sub(p, q), gaps score ``gap``.
    """

    def best(i: int, j: int) -> float:
        if i == len(sa) and j == len(sb):
            return 0.0
        options = []
        if i < len(sa) and j < len(sb):
            options.append(sub(sa[i], sb[j]) + best(i + 1, j + 1))
        if i < len(sa):
            options.append(gap + best(i + 1, j))
        if j < len(sb):
            options.append(gap + best(i, j + 1))
        return max(options)

    return best(0, 0)


def _monotone_paths(n: int, m: int):
    """All monotone paths from (0,0) to (n-1,m-1) with right/down/diag moves."""

    def walk(i, j, path):
        if (i, j) == (n - 1, m - 1):
            yield path
            return
        if i < n - 1 and j < m - 1:
            yield from walk(i + 1, j + 1, path + [(i + 1, j + 1)])
        if i < n - 1:
            yield from walk(i + 1, j, path + [(i + 1, j)])
        if j < m - 1:
            yield from walk(i, j + 1, path + [(i, j + 1)])

    yield from walk(0, 0, [(0, 0)])


def multimatch_bruteforce(fa, fb, width: float, height: float):
    """Five similarity means over the cheapest saccade alignment, by
    enumerating every monotone alignment path.

    ``fa``/``fb`` are (x, y, d) triples.  Returns a dict with the five values.
    """
    ua = [(fa[i + 1][0] - fa[i][0], fa[i + 1][1] - fa[i][1]) for i in range(len(fa) - 1)]
    ub = [(fb[j + 1][0] - fb[j][0], fb[j + 1][1] - fb[j][1]) for j in range(len(fb) - 1)]
    cost = [
        [math.hypot(u[0] - v[0], u[1] - v[1]) for v in ub] for u in ua
    ]
    best_path, best_cost = None, math.inf
    for path in _monotone_paths(len(ua), len(ub)):
        total = sum(cost[i][j] for i, j in path)
        if total < best_cost:
            best_cost, best_path = total, path

    diag = math.hypot(width, height)

    def angle(u):
        return math.atan2(u[1], u[0])

    vec, drn, ln, pos, dur = [], [], [], [], []
    for i, j in best_path:
        u, v = ua[i], ub[j]
        vec.append(1 - math.hypot(u[0] - v[0], u[1] - v[1]) / (2 * diag))
        dtheta = abs(angle(u) - angle(v))
        dtheta = min(dtheta, 2 * math.pi - dtheta)
        drn.append(1 - dtheta / math.pi)
        ln.append(1 - abs(math.hypot(*u) - math.hypot(*v)) / diag)
        pos.append(1 - math.hypot(fa[i][0] - fb[j][0], fa[i][1] - fb[j][1]) / diag)
        dur.append(1 - abs(fa[i][2] - fb[j][2]) / max(fa[i][2], fb[j][2]))
    mean = lambda xs: sum(xs) / len(xs)
    return {
        "vector": mean(vec),
        "direction": mean(drn),
        "length": mean(ln),
        "position": mean(pos),
        "duration": mean(dur),
    }


def stde_bruteforce(pa, pb, width: float, height: float, k: int) -> float:
    """Window similarity by plain double loops over all sub-sequences."""
    k = max(1, min(k, len(pa), len(pb)))
    minima = []
    for i in range(len(pa) - k + 1):
        best = math.inf
        for j in range(len(pb) - k + 1):
            total = 0.0
            for s in range(k):
                total += math.hypot(
                    pa[i + s][0] - pb[j + s][0], pa[i + s][1] - pb[j + s][1]
                )
            best = min(best, total / k)
        minima.append(best)
    avg = sum(minima) / len(minima)
    return min(1.0, max(0.0, 1.0 - avg / math.hypot(width, height)))


def last_in_box_index(fixations, in_box):
    """Index of the last (x, y, d) triple whose position satisfies in_box."""
    for i in range(len(fixations) - 1, -1, -1):
        if in_box(fixations[i][0], fixations[i][1]):
            return i
    return None


def last_chain_members(fixations, in_box, radius: float):
    """Members of the final cluster: the maximal backward chain ending at the
    last in-box fixation, where consecutive fixations stay within the radius."""
    j = last_in_box_index(fixations, in_box)
    if j is None:
        return None
    members = [fixations[j]]
    i = j - 1
    while i >= 0 and math.hypot(
        fixations[i][0] - fixations[i + 1][0], fixations[i][1] - fixations[i + 1][1]
    ) <= radius:
        members.append(fixations[i])
        i -= 1
    return members
