"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from asc.contracts import ONE, AffSum, InputSum, IntChoice

NAMES = "abc"


def _sum(children):
    def build(draw_kind, labels, conts):
        cls = {"in": InputSum, "aff": AffSum, "int": IntChoice}[draw_kind]
        return cls(tuple(zip(labels, conts)))

    @st.composite
    def node(draw):
        kind = draw(st.sampled_from(["in", "aff", "int"]))
        lo = 2 if kind == "aff" else 1
        labels = sorted(draw(st.sets(st.sampled_from(NAMES), min_size=lo, max_size=3)))
        conts = [draw(children) for _ in labels]
        return build(kind, labels, conts)
    return node()


contracts = st.recursive(st.just(ONE), _sum, max_leaves=6)
