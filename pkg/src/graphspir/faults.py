"""Deliberately broken scheme variants, used to show the verifier catches them."""

from __future__ import annotations

from typing import Optional

from .general_scheme import GeneralScheme
from .protocol import Scheme, TableScheme, Var, make_form

FAULTS = ("drop-pad", "flip-sign", "unblind", "reuse-pad")


def drop_pads(scheme: Scheme) -> Scheme:
    """Remove every randomness term from every answer."""
    if isinstance(scheme, GeneralScheme):
        return GeneralScheme(scheme.graph, scheme.endpoint, drop_pads=True, flip=scheme.flip, unblinded=scheme.unblinded)
    if isinstance(scheme, TableScheme):
        templates = {
            t: {n: tuple(make_form((v, c) for v, c in f if v.kind == "W") for f in forms) for n, forms in per.items()}
            for t, per in scheme.templates.items()
        }
        return scheme.with_templates(templates, name=scheme.name + "[no-pads]")
    raise TypeError(f"cannot strip pads from {type(scheme).__name__}")


def flip_sign(scheme: Scheme, at: Optional[tuple[int, int]] = None) -> Scheme:
    """Negate one signed-incidence entry; ``at`` is (server, edge), default the lower end of edge 1."""
    if not isinstance(scheme, GeneralScheme):
        raise TypeError("sign flips apply to the general scheme only")
    if at is None:
        at = (scheme.graph.endpoints(1)[0], 1)
    return GeneralScheme(scheme.graph, scheme.endpoint, drop_pads=scheme.drop_pads, flip=at, unblinded=scheme.unblinded)


def unblind(scheme: Scheme) -> Scheme:
    """Make the user's private choices visible to the servers."""
    if isinstance(scheme, GeneralScheme):
        return GeneralScheme(scheme.graph, scheme.endpoint, drop_pads=scheme.drop_pads, flip=scheme.flip, unblinded=True)
    if isinstance(scheme, TableScheme):
        return scheme.with_templates(scheme.templates, name=scheme.name + "[unblinded]", unblinded=True)
    raise TypeError(f"cannot unblind {type(scheme).__name__}")


def reuse_pad(scheme: Scheme) -> Scheme:
    """Let two distinct interference symbols share one pool pad (shared-pool schemes only)."""
    if not isinstance(scheme, TableScheme) or scheme.descriptor.info("cr") is None:
        raise TypeError("pad reuse needs a shared-pool scheme with a randomness assignment")
    crs = scheme.descriptor.info("cr")
    templates = {}
    for t, per in scheme.templates.items():
        first: dict = {}
        for u in crs[t].uses:
            if u.role == "interference" and u.parts not in first:
                first[u.parts] = u.pads[0]
        pads = list(dict.fromkeys(first.values()))
        if len(pads) < 2:
            raise ValueError(f"target {t} has fewer than two interference pads")
        keep, drop = pads[0], pads[1]

        def swap(f):
            return make_form((Var("S", v.label, keep) if v.kind == "S" and v.index == drop else v, c) for v, c in f)

        templates[t] = {n: tuple(swap(f) for f in forms) for n, forms in per.items()}
    return scheme.with_templates(templates, name=scheme.name + "[reused-pad]")


def inject(scheme: Scheme, fault: str) -> Scheme:
    if fault == "drop-pad":
        return drop_pads(scheme)
    if fault == "flip-sign":
        return flip_sign(scheme)
    if fault == "unblind":
        return unblind(scheme)
    if fault == "reuse-pad":
        return reuse_pad(scheme)
    raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
