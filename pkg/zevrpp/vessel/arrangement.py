"""Battery rooms below the lowest ro-ro deck.

An odd number of rooms sits in a row along the centreline, mirrored about the
centre room, so only the fore half and the centre room carry variables. Room
``k`` spans ``[front_k, front_k + length_k]`` from the bow; its floor is at
the inner bottom ``h̃_batt`` and its width is limited by the fore-body offset
at its front wall and floor.
"""

from __future__ import annotations

import math

import attrs
from scipy import integrate

from zevrpp.errors import ModelError
from zevrpp.gp import constraint
from zevrpp.gp.constraint import Constraint
from zevrpp.gp.expression import Expression, Monomial, Posynomial, Registry, Variable, posy_sum
from zevrpp.vessel.hull import HullDimensions, HullVars


@attrs.frozen
class RoomVars:
    width: Variable
    length: Variable
    front: Variable


@attrs.frozen
class Arrangement:
    """``rooms`` lists the distinct rooms from the bow; the last is the centre room."""

    room_count: int
    rooms: tuple[RoomVars, ...]
    room_height: Variable
    inner_bottom: Variable
    roro_deck: Variable
    roro_height: Variable

    @classmethod
    def create(cls, registry: Registry, prefix: str, room_count: int) -> Arrangement:
        if room_count < 1 or room_count % 2 == 0:
            raise ModelError(f"Battery room count must be odd and positive, got {room_count}")
        distinct = math.ceil(room_count / 2)
        rooms = tuple(
            RoomVars(
                registry.continuous(f"{prefix}room{k}.width"),
                registry.continuous(f"{prefix}room{k}.length"),
                registry.continuous(f"{prefix}room{k}.front"),
            )
            for k in range(1, distinct + 1)
        )
        return cls(
            room_count,
            rooms,
            registry.continuous(f"{prefix}h_batt"),
            registry.continuous(f"{prefix}h_inner_bottom"),
            registry.continuous(f"{prefix}h_roro_deck"),
            registry.continuous(f"{prefix}h_roro"),
        )

    @property
    def centre(self) -> RoomVars:
        return self.rooms[-1]

    def multiplicity(self, index: int) -> int:
        """How many physical rooms the distinct room ``index`` stands for."""
        return 1 if index == len(self.rooms) - 1 else 2

    def wall_length(self) -> Posynomial:
        """``2 Σ_{k<centre} l_k + l_centre``: total room length along the ship."""
        return posy_sum(
            self.multiplicity(i) * room.length.as_monomial() for i, room in enumerate(self.rooms)
        )


def bulkhead_area(front: Variable, hull: HullVars, deck_height: Variable) -> Monomial:
    """Transverse section area below ``deck_height`` at ``front`` metres from the bow."""
    beta = hull.form.beta
    return (
        beta
        / (beta + 1)
        * deck_height
        * hull.breadth
        * (deck_height / hull.draught) ** (1 / beta)
        * (2 * front / hull.length) ** 0.5
    )


def bulkhead_area_oracle(front: float, hull: HullDimensions, deck_height: float) -> float:
    """Same area by integrating the fore offsets up to ``deck_height``."""
    L, B, T, beta = hull.length, hull.breadth, hull.draught, hull.form.beta

    def breadth(z: float) -> float:
        return B * math.sqrt(2 * front / L) * (z / T) ** (1 / beta)

    value, _ = integrate.quad(breadth, 0.0, deck_height, epsabs=1e-12, epsrel=1e-11)
    return value


def arrangement_constraints(
    arrangement: Arrangement,
    hull: HullVars,
    room_energy: Expression | Monomial,
    volume_per_energy: float,
    min_room_height: float,
    min_roro_height: float,
    lcb_fraction: float,
) -> list[Constraint]:
    """Room sizing, enclosure, spacing and deck stacking.

    ``room_energy`` is the energy stored in each room (a monomial); rooms are
    sized to ``volume_per_energy`` times that.
    """
    if not isinstance(room_energy, Monomial):
        raise ModelError("Room energy must be a monomial")
    a, beta = arrangement, hull.form.beta
    constraints: list[Constraint] = [
        constraint.MonoGE(a.room_height.as_monomial(), min_room_height, "Dimensions:room_height"),
        constraint.ge(a.inner_bottom, 0.1 * hull.depth, "Dimensions:inner_bottom"),
        constraint.MonoGE(a.roro_height.as_monomial(), min_roro_height, "Dimensions:roro_height"),
    ]
    for k, room in enumerate(a.rooms, start=1):
        constraints += [
            constraint.eq(
                room.width * a.room_height * room.length,
                volume_per_energy * room_energy,
                f"Dimensions:room{k}_volume",
            ),
            constraint.le(
                0.5 * room.width.as_monomial(),
                0.5
                * hull.breadth
                * (2 * room.front / hull.length) ** 0.5
                * (a.inner_bottom / hull.draught) ** (1 / beta),
                f"Dimensions:room{k}_enclosure",
            ),
            constraint.le(room.front, 0.5 * hull.length, f"Dimensions:room{k}_fore_body"),
        ]
    for k, (room, following) in enumerate(zip(a.rooms, a.rooms[1:]), start=1):
        constraints.append(
            constraint.le(
                room.length + room.front, following.front, f"Dimensions:room{k}_spacing"
            )
        )
    centre = a.centre
    constraints += [
        constraint.le(
            centre.front + 0.5 * centre.length,
            lcb_fraction * hull.length,
            "Hydrostatics:longitudinal_balance",
        ),
        constraint.le(a.room_height + a.inner_bottom, a.roro_deck, "Dimensions:room_deck"),
        constraint.le(hull.draught, a.roro_deck, "Dimensions:deck_above_waterline"),
        constraint.le(a.roro_deck + a.roro_height, hull.depth, "Dimensions:deck_height"),
    ]
    return constraints


def transverse_bulkhead_area(arrangement: Arrangement, hull: HullVars) -> Posynomial:
    """Sum of bulkhead areas at the front wall of each distinct room."""
    return posy_sum(
        bulkhead_area(room.front, hull, arrangement.roro_deck) for room in arrangement.rooms
    )
