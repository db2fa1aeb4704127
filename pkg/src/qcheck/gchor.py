"""Global choreographies: bounded star unfolding, pomset semantics, word membership."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import INPUT, OUTPUT, Action
from .semantics import Word

GChor = Union["Interaction", "Seq", "Choice", "Star", "Par", "Break", "Empty"]


@dataclass(frozen=True)
class Interaction:
    sender: str
    receiver: str
    message: str

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError("interaction needs distinct participants")


@dataclass(frozen=True)
class Seq:
    left: GChor
    right: GChor


@dataclass(frozen=True)
class Choice:
    left: GChor
    right: GChor


@dataclass(frozen=True)
class Star:
    body: GChor


@dataclass(frozen=True)
class Par:
    left: GChor
    right: GChor


@dataclass(frozen=True)
class Break:
    pass


@dataclass(frozen=True)
class Empty:
    pass


class GChorError(ValueError):
    pass


def participants_of(g: GChor) -> tuple[str, ...]:
    """Participants in first-mention order."""
    seen: dict[str, None] = {}

    def walk(node: GChor) -> None:
        if isinstance(node, Interaction):
            seen.setdefault(node.sender, None)
            seen.setdefault(node.receiver, None)
        elif isinstance(node, (Seq, Choice, Par)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Star):
            walk(node.body)

    walk(g)
    return tuple(seen)


def _split_breaks(g: GChor) -> tuple[GChor | None, list[GChor]]:
    """Separate a star body into its break-free form and its break-taking prefixes.

    Returns (continuing, stopped) where `continuing` is the body with every
    break-taking path removed (None when every path breaks) and `stopped`
    lists the prefixes that end at a break. A break contributes no event and
    skips the rest of its iteration.
    """
    if isinstance(g, Break):
        return None, [Empty()]
    if isinstance(g, (Interaction, Empty)):
        return g, []
    if isinstance(g, Seq):
        la, ba = _split_breaks(g.left)
        lb, bb = _split_breaks(g.right)
        cont = Seq(la, lb) if la is not None and lb is not None else None
        stopped = list(ba)
        if la is not None:
            stopped.extend(Seq(la, x) for x in bb)
        return cont, stopped
    if isinstance(g, Choice):
        la, ba = _split_breaks(g.left)
        lb, bb = _split_breaks(g.right)
        if la is None:
            cont = lb
        elif lb is None:
            cont = la
        else:
            cont = Choice(la, lb)
        return cont, ba + bb
    if isinstance(g, Par):
        la, ba = _split_breaks(g.left)
        lb, bb = _split_breaks(g.right)
        if ba or bb:
            raise GChorError("break under parallel composition is not supported")
        assert la is not None and lb is not None
        return Par(la, lb), []
    raise GChorError(f"unexpected node in star body: {g!r}")


def unfold(g: GChor, u: int, _in_star: bool = False) -> GChor:
    """Replace every star by the choice of its 0..u unfoldings.

    A break-resolved iteration ends the loop: unfoldings are i complete
    iterations optionally followed by one break-taking prefix. The result
    contains neither Star nor Break nodes.
    """
    if u < 0:
        raise GChorError("unfolding bound must be >= 0")
    if isinstance(g, (Interaction, Empty)):
        return g
    if isinstance(g, Break):
        if not _in_star:
            raise GChorError("break outside of a star body")
        return g
    if isinstance(g, Seq):
        return Seq(unfold(g.left, u, _in_star), unfold(g.right, u, _in_star))
    if isinstance(g, Choice):
        return Choice(unfold(g.left, u, _in_star), unfold(g.right, u, _in_star))
    if isinstance(g, Par):
        return Par(unfold(g.left, u, _in_star), unfold(g.right, u, _in_star))
    if isinstance(g, Star):
        body = unfold(g.body, u, True)
        cont, stopped = _split_breaks(body)
        # Alternatives: i complete iterations (0 <= i <= u), or i complete
        # iterations followed by one break-taking prefix (0 <= i < u). The
        # chain of complete iterations is shared between alternatives.
        alts: list[GChor] = [Empty()]
        chain: GChor = Empty()
        for i in range(u):
            for br in stopped:
                alts.append(br if i == 0 else Seq(chain, br))
            if cont is None:
                break
            chain = cont if i == 0 else Seq(chain, cont)
            alts.append(chain)
        out: GChor = alts[-1]
        for a in reversed(alts[:-1]):
            out = Choice(a, out)
        return out
    raise GChorError(f"not a g-choreography: {g!r}")


@dataclass(frozen=True)
class Pomset:
    """Events labelled with actions plus a strict partial order.

    `labels` lists events in a topological order of the construction;
    `preds[e]` is the bitmask of all events strictly below e (transitively
    closed).
    """

    labels: tuple[Action, ...]
    preds: tuple[int, ...]

    def _index(self) -> dict[Action, list[int]]:
        idx = self.__dict__.get("_by_label")
        if idx is None:
            idx = {}
            for e, lbl in enumerate(self.labels):
                idx.setdefault(lbl, []).append(e)
            object.__setattr__(self, "_by_label", idx)
        return idx


_EMPTY_POMSET = Pomset((), ())


def _pomset_interaction(i: Interaction) -> Pomset:
    out = Action(i.sender, i.receiver, OUTPUT, i.message)
    inp = Action(i.sender, i.receiver, INPUT, i.message)
    return Pomset((out, inp), (0, 1))


def _seq_compose(p: Pomset, q: Pomset) -> Pomset:
    n = len(p.labels)
    # For each q-event, everything by the same subject in p comes before it.
    cross: list[int] = []
    for lbl in q.labels:
        mask = 0
        for e, plbl in enumerate(p.labels):
            if plbl.subject == lbl.subject:
                mask |= (1 << e) | p.preds[e]
        cross.append(mask)
    preds = list(p.preds)
    for j, qmask in enumerate(q.preds):
        mask = qmask << n
        mask |= cross[j]
        rest = qmask
        while rest:
            low = rest & -rest
            mask |= cross[low.bit_length() - 1]
            rest ^= low
        preds.append(mask)
    return Pomset(p.labels + q.labels, tuple(preds))


def _par_compose(p: Pomset, q: Pomset) -> Pomset:
    n = len(p.labels)
    return Pomset(p.labels + q.labels, p.preds + tuple(m << n for m in q.preds))


def pomsets_of(g: GChor) -> tuple[Pomset, ...]:
    """One pomset per choice resolution of a star-free, break-free body."""
    if isinstance(g, Empty):
        return (_EMPTY_POMSET,)
    if isinstance(g, Interaction):
        return (_pomset_interaction(g),)
    if isinstance(g, Choice):
        out: list[Pomset] = []
        seen: set[Pomset] = set()
        for p in pomsets_of(g.left) + pomsets_of(g.right):
            if p not in seen:
                seen.add(p)
                out.append(p)
        return tuple(out)
    if isinstance(g, Seq):
        return tuple(
            _seq_compose(p, q) for p in pomsets_of(g.left) for q in pomsets_of(g.right)
        )
    if isinstance(g, Par):
        return tuple(
            _par_compose(p, q) for p in pomsets_of(g.left) for q in pomsets_of(g.right)
        )
    if isinstance(g, (Star, Break)):
        raise GChorError("pomsets need a star-free, break-free choreography; unfold first")
    raise GChorError(f"not a g-choreography: {g!r}")


def _match(p: Pomset, word: Word, complete: bool) -> bool:
    """Match `word` against linearizations of p, consuming minimal events.

    Duplicate labels force backtracking; visited (position, remaining) pairs
    are pruned, so the search is bounded by the number of such pairs.
    """
    if len(word) > len(p.labels):
        return False
    by_label = p._index()
    for a in word:
        if a not in by_label:
            return False
    dead: set[tuple[int, int]] = set()

    def go(i: int, remaining: int) -> bool:
        if i == len(word):
            return remaining == 0 if complete else True
        if (i, remaining) in dead:
            return False
        tried: set[int] = set()
        for e in by_label[word[i]]:
            bit = 1 << e
            if not remaining & bit:
                continue
            if p.preds[e] & remaining:
                continue  # a predecessor is still pending: e is not minimal
            if p.preds[e] in tried:
                continue  # interchangeable with an event already tried
            tried.add(p.preds[e])
            if go(i + 1, remaining & ~bit):
                return True
        dead.add((i, remaining))
        return False

    return go(0, (1 << len(p.labels)) - 1)


def word_in_language(g: GChor, u: int, w: Word) -> bool:
    """w is a prefix of a linearization of some pomset of unfold(g, u)."""
    return any(
        _match(p, w, complete=False)
        for p in pomsets_of(unfold(g, u))
        if len(p.labels) >= len(w)
    )


def word_maximal(g: GChor, u: int, w: Word) -> bool:
    """w is a complete linearization of some pomset of unfold(g, u).

    Each pomset stands for one maximal execution of the choreography, so
    completeness against its own pomset is what makes a word maximal.
    """
    return any(
        _match(p, w, complete=True)
        for p in pomsets_of(unfold(g, u))
        if len(p.labels) == len(w)
    )
