"""Deterministic synthetic data: rewrite-rule statement pairs, a
benchmark corpus, and an in-memory repository for offline pipeline
runs.

Five deterministic rewrite rules produce (buggy, fixed) statement
pairs:

  this-removal        return this . x ;          -> return x ;
  index-increment     a [ 10 ] = v . toString ( ) ;  -> a [ 11 ] = ...
  diamond             List < T > x = new ArrayList < T > ( ) ;
                                                 -> ... new ArrayList < > ( ) ;
  log-level           log . trace ( "..." , e ) ;   -> log . info ( ... ) ;
  yoda-flip           if ( null != x ) {         -> if ( x != null ) {

plus 10% distractor pairs with unrelated random edits.  Novel queries
recombine identifiers already seen in training so every token stays in
vocabulary while the full statement is textually new; exact-match
baselines miss them, a model that learned the rule does not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IDENTIFIERS = (
    "height width depth length offset index cursor counter total limit "
    "buffer stream reader writer handler parser cache client session token "
    "payload record bundle config status result target source holder "
    "factory mapping channel router monitor metric ticket broker queue "
    "worker anchor segment window"
).split()

ARRAY_NAMES = "commands slots entries values frames pages cells items".split()
LOGGER_NAMES = "log logger LOGGER tracer".split()
ELEM_TYPES = "String Integer Long Object".split()
CONST_KEYS = (0, 1, 2, 5, 10)

RULES = ("this-removal", "index-increment", "diamond", "log-level", "yoda-flip")


def _pick(rng: np.random.Generator, pool) -> str:
    return pool[int(rng.integers(len(pool)))]


def make_rule_pair(rng: np.random.Generator, rule: str,
                   idents=IDENTIFIERS) -> tuple[str, str]:
    if rule == "this-removal":
        name = _pick(rng, idents)
        return f"return this . {name} ;", f"return {name} ;"
    if rule == "index-increment":
        arr = _pick(rng, ARRAY_NAMES)
        key = CONST_KEYS[int(rng.integers(len(CONST_KEYS)))]
        obj = _pick(rng, idents)
        rhs = f"this . {obj} . toString ( )"
        return (f"{arr} [ {key} ] = {rhs} ;",
                f"{arr} [ {key + 1} ] = {rhs} ;")
    if rule == "diamond":
        elem = _pick(rng, ELEM_TYPES)
        name = _pick(rng, idents)
        return (f"List < {elem} > {name} = new ArrayList < {elem} > ( ) ;",
                f"List < {elem} > {name} = new ArrayList < > ( ) ;")
    if rule == "log-level":
        logger = _pick(rng, LOGGER_NAMES)
        msg = _pick(rng, idents)
        return (f'{logger} . trace ( "{msg}" , cause ) ;',
                f'{logger} . info ( "{msg}" , cause ) ;')
    if rule == "yoda-flip":
        name = _pick(rng, idents)
        return (f"if ( null != {name} ) {{", f"if ( {name} != null ) {{")
    raise ValueError(f"unknown rule {rule!r}")


def make_distractor(rng: np.random.Generator) -> tuple[str, str]:
    a = _pick(rng, IDENTIFIERS)
    b = _pick(rng, IDENTIFIERS)
    forms = (
        f"int {a} = {b} . size ( ) ;",
        f"{a} = {b} + 1 ;",
        f"throw new IllegalStateException ( {a} ) ;",
        f"{a} . close ( ) ;",
        f"return {a} . equals ( {b} ) ;",
    )
    pre = forms[int(rng.integers(len(forms)))]
    post = forms[int(rng.integers(len(forms)))]
    return pre, post


@dataclass
class Benchmark:
    train_pairs: list[tuple[str, str]]          # concrete (pre, post) lines
    held_out: list[tuple[str, str]]
    queries: list[tuple[str, str, bool]]        # (query, reference, novel?)


def make_benchmark(
    seed: int = 7,
    n_train: int = 2000,
    n_held_out: int = 200,
    n_queries: int = 200,
    novel_fraction: float = 0.4,
    distractor_fraction: float = 0.1,
) -> Benchmark:
    rng = np.random.default_rng(seed)
    n_distract = int(round(n_train * distractor_fraction))
    n_rules = n_train - n_distract

    train: list[tuple[str, str]] = []
    for i in range(n_rules):
        rule = RULES[i % len(RULES)]
        train.append(make_rule_pair(rng, rule))
    for _ in range(n_distract):
        train.append(make_distractor(rng))
    perm = rng.permutation(len(train))
    train = [train[int(i)] for i in perm]

    held_out = [make_rule_pair(rng, RULES[i % len(RULES)])
                for i in range(n_held_out)]

    train_pres = {pre for pre, _ in train}
    n_novel = int(round(n_queries * novel_fraction))
    n_seen = n_queries - n_novel
    # queries drawn from training rule pairs (exact matches for a baseline)
    rule_train = [p for p in train if _is_rule_pair(p)]
    queries: list[tuple[str, str, bool]] = []
    for i in range(n_seen):
        pre, post = rule_train[int(rng.integers(len(rule_train)))]
        queries.append((pre, post, False))
    made = 0
    attempts = 0
    while made < n_novel and attempts < 100000:
        attempts += 1
        rule = RULES[(made + attempts) % len(RULES)]
        pre, post = make_rule_pair(rng, rule)
        if pre not in train_pres:
            queries.append((pre, post, True))
            made += 1
    if made < n_novel:
        raise RuntimeError("could not build enough novel queries")
    return Benchmark(train, held_out, queries)


def _is_rule_pair(pair: tuple[str, str]) -> bool:
    pre, post = pair
    if pre.startswith("return this . "):
        return True
    if " ] = this . " in pre and pre.split(" ", 1)[0] in ARRAY_NAMES:
        return True
    if pre.startswith("List < ") and "new ArrayList <" in pre:
        return True
    if " . trace ( " in pre:
        return True
    if pre.startswith("if ( null != "):
        return True
    return False


# ---------------------------------------------------------------------------
# synthetic repository

def make_repo(
    seed: int = 11,
    n_train_pairs: int = 40,
    n_test_pairs: int = 12,
    test_year: int = 2015,
) -> dict:
    """In-memory repository description whose mined history yields rule
    pairs: each statement lives in its own one-method file, introduced
    in one commit and rewritten in a later fix commit."""
    rng = np.random.default_rng(seed)
    train_years = (test_year - 3, test_year - 2, test_year - 1)
    commits: list[dict] = []
    trees: dict[str, str] = {}
    clock = [0]

    def commit(year: int, message: str) -> dict:
        clock[0] += 1
        obj = {
            "id": f"c{clock[0]:04d}",
            "time": f"{year}-01-01T00:00:00+00:00",
            "message": message,
            "parents": [commits[-1]["id"]] if commits else [],
            "files": dict(trees),
        }
        commits.append(obj)
        return obj

    def file_body(index: int, stmt: str) -> str:
        return (f"public class F{index} {{\n"
                f"public void run ( ) {{\n"
                f"{stmt}\n"
                f"}}\n"
                f"}}\n")

    commit(train_years[0] - 1, "initial import")

    pairs = []
    for i in range(n_train_pairs):
        rule = RULES[i % len(RULES)]
        intro_year = int(train_years[int(rng.integers(len(train_years)))])
        fix_year = int(train_years[int(rng.integers(len(train_years)))])
        fix_year = max(fix_year, intro_year)
        pairs.append((i, rule, intro_year, fix_year))
    for j in range(n_test_pairs):
        i = n_train_pairs + j
        rule = RULES[i % len(RULES)]
        pairs.append((i, rule, test_year, test_year))
    # a couple of straddlers: introduced before the test year, fixed in it
    for k in range(3):
        i = n_train_pairs + n_test_pairs + k
        rule = RULES[i % len(RULES)]
        pairs.append((i, rule, train_years[-1], test_year))

    events: list[tuple[int, int, str, str, str]] = []
    for index, rule, intro_year, fix_year in pairs:
        pre, post = make_rule_pair(rng, rule)
        path = f"src/F{index}.java"
        events.append((intro_year, 0, path, file_body(index, pre),
                       f"add feature module {index}"))
        events.append((fix_year, 1, path, file_body(index, post),
                       f"fix defect in module {index}"))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    for year, _, path, content, message in events:
        trees[path] = content
        commit(year, message)

    # delete-only noise: drop a statement from one file
    noisy = "src/N0.java"
    trees[noisy] = (f"public class N0 {{\npublic void run ( ) {{\n"
                    f"int unused = 1 ;\nreturn ;\n}}\n}}\n")
    commit(train_years[1], "add scratch file")
    trees[noisy] = f"public class N0 {{\npublic void run ( ) {{\nreturn ;\n}}\n}}\n"
    commit(train_years[2], "tidy scratch file")

    return {"commits": commits}
