"""Compile a call site and its advising aspects into an ordered check plan.

A plan is the executable form of a blame table: every check step names the
party blamed when it fails, and the engine runs the steps top to bottom.

Assertion roles use these symbols::

    m_pre, m_post           the advised method's pre/postcondition
    bef_pre, bef_post       the aspect's before-advice pre/postcondition
    after_pre, after_post   the aspect's after-advice pre/postcondition
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .model import lookup_method, matching_aspects, resolve_override_chain
from .printer import format_expr
from .syntax import AspectDef, MethodDef, Program

M_PRE, M_POST = "m_pre", "m_post"
BEF_PRE, BEF_POST = "bef_pre", "bef_post"
AFTER_PRE, AFTER_POST = "after_pre", "after_post"

CATEGORIZED = "categorized"
LEGACY_MODES = ("legacy-A", "legacy-B", "legacy-C")
MODES = (CATEGORIZED, *LEGACY_MODES)


class CategoryMismatch(ValueError):
    pass


class PlanningError(LookupError):
    pass


@dataclass(frozen=True)
class BlameParty:
    party: str  # Caller | Method | Advice | Aspect | Subtype
    aspect: Optional[str] = None
    position: Optional[str] = None
    cls: Optional[str] = None

    def __str__(self):
        if self.party == "Advice":
            return f"Advice({self.aspect}, {self.position})"
        if self.party == "Aspect":
            return f"Aspect({self.aspect})"
        if self.party == "Subtype":
            return f"Subtype({self.cls})"
        return self.party

    def to_json(self) -> dict:
        data = {"party": self.party}
        if self.aspect is not None:
            data["aspect"] = self.aspect
        if self.position is not None:
            data["position"] = self.position
        if self.cls is not None:
            data["class"] = self.cls
        return data


CALLER = BlameParty("Caller")
METHOD = BlameParty("Method")


def advice_party(aspect: str, position: str) -> BlameParty:
    return BlameParty("Advice", aspect=aspect, position=position)


def aspect_party(aspect: str) -> BlameParty:
    return BlameParty("Aspect", aspect=aspect)


def subtype_party(cls: str) -> BlameParty:
    return BlameParty("Subtype", cls=cls)


@dataclass(frozen=True)
class AssertionRef:
    """One contract clause set: whose it is and which role it plays."""

    role: str
    owner: str  # defining class for m_*, aspect name for advice roles
    member: str  # method name, or advice position
    expr: object = field(compare=False, repr=False)

    @property
    def id(self) -> str:
        return f"{self.owner}.{self.member}:{self.role.rsplit('_', 1)[1]}"

    @property
    def is_method(self) -> bool:
        return self.role in (M_PRE, M_POST)

    @property
    def snapshot_key(self) -> str:
        """Which ``old`` snapshot this assertion reads: method, before or after."""
        if self.is_method:
            return "method"
        return "before" if self.role.startswith("bef") else "after"

    def to_json(self) -> dict:
        return {
            "role": self.role,
            "id": self.id,
            "text": format_expr(self.expr),
            "span": self.expr.span.to_json(),
        }


@dataclass(frozen=True)
class CheckAssert:
    assertion: AssertionRef
    blame: BlameParty
    level: int = 0


@dataclass(frozen=True)
class CheckImplication:
    antecedent: AssertionRef
    consequent: AssertionRef
    blame: BlameParty
    level: int = 0
    category: Optional[str] = None
    hierarchy: Optional[str] = None  # "pre" | "post" for behavioral-subtype checks


@dataclass(frozen=True)
class SnapshotOld:
    owner: str  # "method" | "advice"
    position: Optional[str] = None
    level: int = 0

    @property
    def key(self) -> str:
        return "method" if self.owner == "method" else self.position


@dataclass(frozen=True)
class RunBeforeAdvice:
    aspect: str
    level: int = 0


@dataclass(frozen=True)
class RunBody:
    cls: str
    method: str
    level: int = 0


@dataclass(frozen=True)
class RunAfterAdvice:
    aspect: str
    level: int = 0


PlanStep = Union[CheckAssert, CheckImplication, SnapshotOld, RunBeforeAdvice, RunBody, RunAfterAdvice]
CHECK_STEPS = (CheckAssert, CheckImplication)
RUN_STEPS = (RunBeforeAdvice, RunBody, RunAfterAdvice)


@dataclass(frozen=True)
class MethodTarget:
    """A call site resolved on the receiver's dynamic class."""

    cls: str  # dynamic class of the receiver
    owner: str  # class whose definition runs
    method: MethodDef
    chain: tuple[tuple[str, MethodDef], ...]

    @property
    def name(self) -> str:
        return self.method.name

    def pre(self) -> AssertionRef:
        return AssertionRef(M_PRE, self.owner, self.method.name, self.method.pre)

    def post(self) -> AssertionRef:
        return AssertionRef(M_POST, self.owner, self.method.name, self.method.post)


@dataclass(frozen=True)
class CheckPlan:
    steps: tuple[PlanStep, ...]
    cls: str
    method: str
    category: str  # "none", an aspect category, or a legacy mode
    aspects: tuple[tuple[str, str], ...] = ()  # (name, category) by precedence
    mode: str = CATEGORIZED

    def __post_init__(self):
        bodies = sum(isinstance(s, RunBody) for s in self.steps)
        if bodies != 1:
            raise ValueError(f"plan must contain exactly one RunBody, found {bodies}")


def method_target(program: Program, cls: str, method: str) -> MethodTarget:
    if cls not in program.classes:
        raise PlanningError(f"unknown class {cls!r}")
    found = lookup_method(program, cls, method)
    if found is None:
        raise PlanningError(f"{cls} has no method {method!r}")
    chain = tuple(resolve_override_chain(program, cls, method))
    return MethodTarget(cls, found[0], found[1], chain)


def _advice_ref(aspect: AspectDef, role: str) -> AssertionRef:
    position = "before" if role.startswith("bef") else "after"
    advice = aspect.advice(position)
    expr = advice.pre if role.endswith("pre") else advice.post
    return AssertionRef(role, aspect.name, position, expr)


# -- hierarchy ----------------------------------------------------------------


def plan_hierarchy_checks(chain: Sequence[tuple[str, MethodDef]], level: int = 0) -> list[PlanStep]:
    """Behavioral-subtype checks for each adjacent pair of the override chain.

    Pre-direction steps (supertype pre implies subtype pre) come first, then
    post-direction steps (subtype post implies supertype post).  Both blame
    the subtype.
    """
    pre, post = [], []
    for (sub, sub_m), (sup, sup_m) in zip(chain, chain[1:]):
        blame = subtype_party(sub)
        pre.append(CheckImplication(
            AssertionRef(M_PRE, sup, sup_m.name, sup_m.pre),
            AssertionRef(M_PRE, sub, sub_m.name, sub_m.pre),
            blame, level, hierarchy="pre"))
        post.append(CheckImplication(
            AssertionRef(M_POST, sub, sub_m.name, sub_m.post),
            AssertionRef(M_POST, sup, sup_m.name, sup_m.post),
            blame, level, hierarchy="post"))
    return pre + post


def _split_hierarchy(steps):
    return ([s for s in steps if s.hierarchy == "pre"], [s for s in steps if s.hierarchy == "post"])


# -- per-category step sequences ----------------------------------------------


def _agnostic(target: MethodTarget, aspect: AspectDef, inner: list, level: int) -> list:
    m_pre, m_post = target.pre(), target.post()
    name, cat = aspect.name, aspect.category
    steps: list = [CheckAssert(m_pre, CALLER, level)]
    if aspect.before is not None:
        advice = advice_party(name, "before")
        steps += [
            CheckImplication(m_pre, _advice_ref(aspect, BEF_PRE), aspect_party(name), level, cat),
            SnapshotOld("advice", "before", level),
            RunBeforeAdvice(name, level),
            CheckAssert(_advice_ref(aspect, BEF_POST), advice, level),
            CheckImplication(_advice_ref(aspect, BEF_POST), m_pre, aspect_party(name), level, cat),
            CheckAssert(m_pre, advice, level),
        ]
    steps += [SnapshotOld("method", None, level), *inner, CheckAssert(m_post, METHOD, level)]
    if aspect.after is not None:
        advice = advice_party(name, "after")
        steps += [
            CheckImplication(m_post, _advice_ref(aspect, AFTER_PRE), advice, level, cat),
            CheckAssert(_advice_ref(aspect, AFTER_PRE), advice, level),
            SnapshotOld("advice", "after", level),
            RunAfterAdvice(name, level),
            CheckAssert(_advice_ref(aspect, AFTER_POST), advice, level),
            CheckImplication(_advice_ref(aspect, AFTER_POST), m_post, aspect_party(name), level, cat),
        ]
    steps.append(CheckAssert(m_post, aspect_party(name), level))
    return steps


def _obedient(target: MethodTarget, aspect: AspectDef, inner: list, level: int) -> list:
    m_pre, m_post = target.pre(), target.post()
    name, cat = aspect.name, aspect.category
    steps: list = [CheckAssert(m_pre, CALLER, level)]
    if aspect.before is not None:
        steps += [
            CheckImplication(m_pre, _advice_ref(aspect, BEF_PRE), aspect_party(name), level, cat),
            SnapshotOld("advice", "before", level),
            RunBeforeAdvice(name, level),
            CheckAssert(_advice_ref(aspect, BEF_POST), advice_party(name, "before"), level),
        ]
    steps += [SnapshotOld("method", None, level), *inner]
    if aspect.after is not None:
        advice = advice_party(name, "after")
        steps += [
            CheckImplication(m_post, _advice_ref(aspect, AFTER_PRE), aspect_party(name), level, cat),
            CheckAssert(_advice_ref(aspect, AFTER_PRE), advice, level),
            SnapshotOld("advice", "after", level),
            RunAfterAdvice(name, level),
            CheckAssert(_advice_ref(aspect, AFTER_POST), advice, level),
            CheckImplication(_advice_ref(aspect, AFTER_POST), m_post, aspect_party(name), level, cat),
        ]
    else:
        # The caller-visible exit check survives; with no after advice it
        # reads the method's own postcondition and keeps the aspect's blame.
        steps.append(CheckAssert(m_post, aspect_party(name), level))
    return steps


def _rebellious(target: MethodTarget, aspect: AspectDef, inner: list, level: int) -> list:
    m_pre, m_post = target.pre(), target.post()
    name, cat = aspect.name, aspect.category
    if aspect.before is not None:
        advice = advice_party(name, "before")
        steps: list = [
            CheckImplication(m_pre, _advice_ref(aspect, BEF_PRE), aspect_party(name), level, cat),
            CheckAssert(_advice_ref(aspect, BEF_PRE), CALLER, level),
            SnapshotOld("advice", "before", level),
            RunBeforeAdvice(name, level),
            CheckAssert(_advice_ref(aspect, BEF_POST), advice, level),
            CheckImplication(_advice_ref(aspect, BEF_POST), m_pre, aspect_party(name), level, cat),
            CheckAssert(m_pre, advice, level),
        ]
    else:
        # Without a widened precondition the caller is held to the method's own.
        steps = [CheckAssert(m_pre, CALLER, level)]
    steps += [SnapshotOld("method", None, level), *inner, CheckAssert(m_post, METHOD, level)]
    if aspect.after is not None:
        advice = advice_party(name, "after")
        steps += [
            CheckImplication(m_post, _advice_ref(aspect, AFTER_PRE), aspect_party(name), level, cat),
            CheckAssert(_advice_ref(aspect, AFTER_PRE), advice, level),
            SnapshotOld("advice", "after", level),
            RunAfterAdvice(name, level),
            CheckAssert(_advice_ref(aspect, AFTER_POST), advice, level),
            CheckImplication(_advice_ref(aspect, AFTER_POST), m_post, aspect_party(name), level, cat),
        ]
    return steps


def _legacy(order: str):
    """Raw A/B/C interleavings with aspect-ignorant OOP blame only."""

    def build(target: MethodTarget, aspect: AspectDef, inner: list, level: int) -> list:
        m_pre = CheckAssert(target.pre(), CALLER, level)
        m_post = CheckAssert(target.post(), METHOD, level)
        before = [RunBeforeAdvice(aspect.name, level)] if aspect.before is not None else []
        after = [RunAfterAdvice(aspect.name, level)] if aspect.after is not None else []
        body = [SnapshotOld("method", None, level), *inner]
        if order == "A":
            return [*before, m_pre, *body, m_post, *after]
        if order == "B":
            return [m_pre, *before, *body, *after, m_post]
        return [m_pre, *before, m_pre, *body, m_post, *after, m_post]

    return build


_BUILDERS = {"agnostic": _agnostic, "obedient": _obedient, "rebellious": _rebellious}


def _builder(aspect: AspectDef, mode: str):
    if mode == CATEGORIZED:
        if aspect.category not in _BUILDERS:
            raise CategoryMismatch(f"aspect {aspect.name} has no usable category ({aspect.category!r})")
        return _BUILDERS[aspect.category]
    if mode not in LEGACY_MODES:
        raise ValueError(f"unknown planning mode {mode!r}")
    return _legacy(mode[-1])


# -- public planners ------------------------------------------------------------


def plan_no_aspect(target: MethodTarget) -> CheckPlan:
    pre_h, post_h = _split_hierarchy(plan_hierarchy_checks(target.chain))
    steps = [
        *pre_h,
        CheckAssert(target.pre(), CALLER),
        SnapshotOld("method"),
        RunBody(target.owner, target.name),
        CheckAssert(target.post(), METHOD),
        *post_h,
    ]
    return CheckPlan(tuple(steps), target.cls, target.name, "none")


def _single(target: MethodTarget, aspect: AspectDef, category: str) -> CheckPlan:
    if aspect.category != category:
        raise CategoryMismatch(f"aspect {aspect.name} is {aspect.category}, not {category}")
    steps = _BUILDERS[category](target, aspect, [RunBody(target.owner, target.name, 1)], 0)
    return CheckPlan(tuple(steps), target.cls, target.name, category, ((aspect.name, category),))


def plan_agnostic(target: MethodTarget, aspect: AspectDef) -> CheckPlan:
    return _single(target, aspect, "agnostic")


def plan_obedient(target: MethodTarget, aspect: AspectDef) -> CheckPlan:
    return _single(target, aspect, "obedient")


def plan_rebellious(target: MethodTarget, aspect: AspectDef) -> CheckPlan:
    return _single(target, aspect, "rebellious")


def plan_call(program: Program, cls: str, method: str, aspects: Optional[Sequence[AspectDef]] = None,
              mode: str = CATEGORIZED) -> CheckPlan:
    """Full plan for calling ``method`` on a receiver of class ``cls``.

    Aspects nest by precedence: the first aspect's plan wraps the second's,
    and so on, with the method body innermost.  Hierarchy checks for the
    receiver's override chain bracket the whole plan.
    """
    target = method_target(program, cls, method)
    if aspects is None:
        aspects = matching_aspects(program, cls, method)
    if not aspects:
        plan = plan_no_aspect(target)
        return CheckPlan(plan.steps, plan.cls, plan.method, plan.category, (), mode)
    inner: list = [RunBody(target.owner, target.name, len(aspects))]
    for level in reversed(range(len(aspects))):
        inner = _builder(aspects[level], mode)(target, aspects[level], inner, level)
    pre_h, post_h = _split_hierarchy(plan_hierarchy_checks(target.chain))
    category = aspects[0].category if mode == CATEGORIZED else mode
    return CheckPlan(
        tuple([*pre_h, *inner, *post_h]),
        cls,
        method,
        category,
        tuple((a.name, a.category) for a in aspects),
        mode,
    )


# -- inspection -----------------------------------------------------------------


def step_kind(step: PlanStep) -> str:
    return type(step).__name__


def _ref_label(ref: AssertionRef, hierarchy: bool) -> str:
    return f"{ref.owner}::{ref.role}" if hierarchy else ref.role


def step_label(step: PlanStep) -> str:
    if isinstance(step, CheckAssert):
        return step.assertion.role
    if isinstance(step, CheckImplication):
        h = step.hierarchy is not None
        return f"{_ref_label(step.antecedent, h)} -> {_ref_label(step.consequent, h)}"
    if isinstance(step, SnapshotOld):
        return f"old({step.key})"
    if isinstance(step, RunBody):
        return f"{step.cls}.{step.method}"
    return step.aspect


def check_rows(plan: CheckPlan) -> list[tuple[str, str]]:
    """(assertion, blamed party) for each check step, top to bottom."""
    return [(step_label(s), s.blame.party) for s in plan.steps if isinstance(s, CHECK_STEPS)]


_ORDERS = {
    "A": ("a", "P", "M", "Q", "a"),
    "B": ("P", "a", "M", "a", "Q"),
    "C": ("P", "a", "P", "M", "Q", "a", "Q"),
}


def _collapse(tokens) -> tuple:
    out: list = []
    for t in tokens:
        if not out or out[-1] != t:
            out.append(t)
    return tuple(out)


def _drop_advice(pattern, has_before: bool, has_after: bool) -> tuple:
    tokens = list(pattern)
    if not has_before:
        tokens.remove("a")
    if not has_after:
        tokens.reverse()
        tokens.remove("a")
        tokens.reverse()
    return _collapse(tokens)


def order_tokens(plan: CheckPlan) -> tuple:
    """Positional skeleton of the outermost level of a plan.

    ``P``/``Q`` mark checks establishing the method's pre/postcondition, ``a``
    advice runs and ``M`` the body (or any inner nesting level).  An
    implication only stands in for its consequent when the plan has no bare
    check of that assertion.
    """
    top = [s for s in plan.steps if s.level == 0 and not getattr(s, "hierarchy", None)]
    bare = {s.assertion.role for s in top if isinstance(s, CheckAssert)}
    tokens = []
    for step in plan.steps:
        if getattr(step, "hierarchy", None):
            continue
        if step.level > 0 or isinstance(step, RunBody):
            tokens.append("M")
        elif isinstance(step, (RunBeforeAdvice, RunAfterAdvice)):
            tokens.append("a")
        elif isinstance(step, CheckAssert) and step.assertion.is_method:
            tokens.append("P" if step.assertion.role == M_PRE else "Q")
        elif isinstance(step, CheckImplication) and step.consequent.is_method:
            role = step.consequent.role
            if role not in bare:
                tokens.append("P" if role == M_PRE else "Q")
    return _collapse(tokens)


def exec_order(plan: CheckPlan) -> Optional[str]:
    """Which interleaving (A, B or C) the plan's outermost level follows."""
    top = [s for s in plan.steps if s.level == 0]
    has_before = any(isinstance(s, RunBeforeAdvice) for s in top)
    has_after = any(isinstance(s, RunAfterAdvice) for s in top)
    if not (has_before or has_after):
        return None
    tokens = order_tokens(plan)
    for name, pattern in _ORDERS.items():
        if _drop_advice(pattern, has_before, has_after) == tokens:
            return name
    return None


def step_to_json(index: int, step: PlanStep) -> dict:
    data: dict = {"index": index, "kind": step_kind(step), "level": step.level, "label": step_label(step)}
    if isinstance(step, CheckAssert):
        data["assertion"] = step.assertion.to_json()
        data["blame"] = str(step.blame)
    elif isinstance(step, CheckImplication):
        data["antecedent"] = step.antecedent.to_json()
        data["consequent"] = step.consequent.to_json()
        data["blame"] = str(step.blame)
        if step.category is not None:
            data["category"] = step.category
        if step.hierarchy is not None:
            data["hierarchy"] = step.hierarchy
    elif isinstance(step, SnapshotOld):
        data["owner"] = step.owner
        if step.position is not None:
            data["position"] = step.position
    elif isinstance(step, RunBody):
        data["class"] = step.cls
        data["method"] = step.method
    else:
        data["aspect"] = step.aspect
    return data


def plan_to_json(plan: CheckPlan) -> dict:
    return {
        "class": plan.cls,
        "method": plan.method,
        "mode": plan.mode,
        "category": plan.category,
        "aspects": [{"name": n, "category": c} for n, c in plan.aspects],
        "exec_order": exec_order(plan),
        "steps": [step_to_json(i, s) for i, s in enumerate(plan.steps)],
    }
