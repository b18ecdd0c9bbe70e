"""Earley membership over raw strings.

Terminals may span several characters and character classes match any
non-empty run of their class, so scanning can advance by more than one
position.  Nullable non-terminals are handled by advancing over them at
prediction time.
"""

from __future__ import annotations

from .grammar import CharClass, Grammar, NonTerminal, Terminal


def nullable_set(g: Grammar) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for name, alts in g.rules.items():
            if name in nullable:
                continue
            for alt in alts:
                if all(isinstance(s, NonTerminal) and s.name in nullable for s in alt):
                    nullable.add(name)
                    changed = True
                    break
    return nullable


class EarleyRecognizer:
    """Precompiled recognizer for one grammar; reusable across strings."""

    def __init__(self, g: Grammar) -> None:
        self.grammar = g
        self.rules: list[tuple[str, tuple]] = []
        self.by_lhs: dict[str, list[int]] = {}
        for name, alts in g.rules.items():
            for alt in alts:
                self.by_lhs.setdefault(name, []).append(len(self.rules))
                self.rules.append((name, alt))
        self.nullable = nullable_set(g)

    def accepts(self, s: str) -> bool:
        g = self.grammar
        if g.start not in self.by_lhs:
            return False
        rules = self.rules
        by_lhs = self.by_lhs
        nullable = self.nullable
        n = len(s)
        # chart[i]: set of (rule, dot, origin); waiting[i]: nt -> items expecting nt at i
        chart: list[set] = [set() for _ in range(n + 1)]
        waiting: list[dict[str, list]] = [dict() for _ in range(n + 1)]
        agenda: list[list] = [[] for _ in range(n + 1)]

        def add(i: int, item: tuple) -> None:
            if item not in chart[i]:
                chart[i].add(item)
                agenda[i].append(item)

        for r in by_lhs[g.start]:
            add(0, (r, 0, 0))

        for i in range(n + 1):
            work = agenda[i]
            # completed[nt] lists origins of nt completed at i (for late waiters)
            completed: dict[str, set[int]] = {}
            while work:
                item = work.pop()
                r, dot, origin = item
                lhs, rhs = rules[r]
                if dot == len(rhs):
                    origins = completed.setdefault(lhs, set())
                    if origin in origins:
                        continue
                    origins.add(origin)
                    for wr, wdot, worig in waiting[origin].get(lhs, ()):
                        add(i, (wr, wdot + 1, worig))
                    continue
                sym = rhs[dot]
                if isinstance(sym, NonTerminal):
                    name = sym.name
                    lst = waiting[i].setdefault(name, [])
                    lst.append(item)
                    if len(lst) == 1:
                        for r2 in by_lhs.get(name, ()):
                            add(i, (r2, 0, i))
                    if name in nullable:
                        add(i, (r, dot + 1, origin))
                    if i in completed.get(name, ()):
                        add(i, (r, dot + 1, origin))
                elif isinstance(sym, Terminal):
                    t = sym.text
                    if t and s.startswith(t, i):
                        add(i + len(t), (r, dot + 1, origin))
                elif isinstance(sym, CharClass):
                    j = i
                    while j < n and sym.matches_char(s[j]):
                        j += 1
                        add(j, (r, dot + 1, origin))
        return any(
            dot == len(rules[r][1]) and origin == 0 and rules[r][0] == g.start
            for r, dot, origin in chart[n]
        )


def earley_accepts(g: Grammar, s: str) -> bool:
    return EarleyRecognizer(g).accepts(s)
