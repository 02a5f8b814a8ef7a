"""Name -> protocol lookup used by configs, the CLI and the engine."""

from __future__ import annotations

from functools import partial

from ..model import (
    LIGHT_ADJUSTING,
    LIGHT_DONE,
    LIGHT_EXTERNAL,
    LIGHT_MOVED,
    LIGHT_NONE,
    LIGHT_OFF,
    LIGHT_VERTEX,
)
from .base import Protocol, ProtocolError
from .circle import circle_contain_done_step, circle_contain_step
from .contain import contain_asynch_variant, contain_n_known, contain_step
from .sequential import sequential_step
from .shrink import (
    shrink_delta_known,
    shrink_n_known,
    shrink_near_gathering,
    shrink_step,
)

PROTOCOLS: dict[str, Protocol] = {}


def _register(p: Protocol) -> Protocol:
    PROTOCOLS[p.name] = p
    return p


_register(Protocol(
    name="shrink",
    palette=(LIGHT_OFF, LIGHT_VERTEX),
    initial_light=LIGHT_OFF,
    step=shrink_step,
))

_register(Protocol(
    name="shrink-near-gathering",
    palette=(LIGHT_NONE,),
    initial_light=LIGHT_NONE,
    step=shrink_near_gathering,
))

_register(Protocol(
    name="shrink-near-gathering-2color",
    palette=(LIGHT_OFF, LIGHT_VERTEX),
    initial_light=LIGHT_OFF,
    step=shrink_near_gathering,
))

_register(Protocol(
    name="shrink-delta",
    palette=(LIGHT_OFF, LIGHT_VERTEX),
    initial_light=LIGHT_OFF,
    step=shrink_delta_known,
    needs=frozenset({"delta"}),
))

_register(Protocol(
    name="shrink-n-known",
    palette=(LIGHT_NONE,),
    initial_light=LIGHT_NONE,
    step=shrink_n_known,
    needs=frozenset({"n"}),
))

_register(Protocol(
    name="contain",
    palette=(LIGHT_OFF, LIGHT_EXTERNAL, LIGHT_ADJUSTING),
    initial_light=LIGHT_OFF,
    step=contain_step,
))

_register(Protocol(
    name="contain-axis",
    palette=(LIGHT_OFF, LIGHT_EXTERNAL, LIGHT_ADJUSTING),
    initial_light=LIGHT_OFF,
    step=contain_asynch_variant,
    needs=frozenset({"north"}),
))

_register(Protocol(
    name="contain-n-known",
    palette=(LIGHT_OFF, LIGHT_EXTERNAL),
    initial_light=LIGHT_OFF,
    step=contain_n_known,
    needs=frozenset({"n"}),
))

_register(Protocol(
    name="circle-contain",
    palette=(LIGHT_OFF, LIGHT_EXTERNAL, LIGHT_ADJUSTING),
    initial_light=LIGHT_OFF,
    step=circle_contain_step,
))

_register(Protocol(
    name="circle-contain-done",
    palette=(LIGHT_OFF, LIGHT_EXTERNAL, LIGHT_ADJUSTING, LIGHT_DONE),
    initial_light=LIGHT_OFF,
    step=circle_contain_done_step,
))

_register(Protocol(
    name="sequential",
    palette=(LIGHT_NONE,),
    initial_light=LIGHT_NONE,
    step=partial(sequential_step, termination="none"),
))

_register(Protocol(
    name="sequential-2color",
    palette=(LIGHT_OFF, LIGHT_MOVED),
    initial_light=LIGHT_OFF,
    step=partial(sequential_step, termination="two-color"),
))

_register(Protocol(
    name="sequential-n-known",
    palette=(LIGHT_NONE,),
    initial_light=LIGHT_NONE,
    step=partial(sequential_step, termination="n-known"),
    needs=frozenset({"n"}),
))


def get_protocol(name: str) -> Protocol:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ProtocolError(
            f"unknown protocol {name!r}; available: {sorted(PROTOCOLS)}") from None
