"""Robot description parsing and the kinematic-tree data model.

A description is a JSON document with top-level keys ``links[]``, ``joints[]``,
``groups{}``, ``frames{}`` and optionally ``feet{left, right, size: [lx, ly]}``.
Angles are radians, lengths meters. The schema is documented in
``docs/robot_description_schema.md``; two descriptions ship with the package:
``g1_desk.json`` (29 actuated body DoF + 3 head DoF) and ``dex_hand.json``
(7-DoF three-fingered hand).

Joint-limit and mass values in the bundled files that are not vendor-published
are approximations; the files flag them with a top-level ``"approximate"``
note.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

AXIS_UNIT_TOL = 1e-9

HUMANOID_GROUPS = {
    "left_leg": 6,
    "right_leg": 6,
    "waist": 3,
    "left_arm": 7,
    "right_arm": 7,
}
HAND_GROUPS = {"thumb": 3, "index": 2, "middle": 2}
HAND_FRAMES = ("wrist", "thumb_tip", "index_tip", "middle_tip")


class DescriptionError(ValueError):
    """Raised on any schema or consistency violation, naming the entity."""


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    com: np.ndarray  # (3,) CoM offset in link frame


@dataclass(frozen=True)
class Joint:
    name: str
    parent_link: str
    child_link: str
    origin_xyz: np.ndarray
    origin_rpy: np.ndarray
    axis: np.ndarray
    lower: float
    upper: float


@dataclass(frozen=True)
class Frame:
    name: str
    link: str
    xyz: np.ndarray
    rpy: np.ndarray


@dataclass(frozen=True)
class FeetSpec:
    left: str  # frame name
    right: str
    size: tuple[float, float]  # patch length (x) and width (y), meters


@dataclass
class BasePose:
    """Floating-base pose: world position plus extrinsic roll-pitch-yaw."""

    position: np.ndarray
    rpy: np.ndarray

    @staticmethod
    def identity() -> "BasePose":
        return BasePose(np.zeros(3), np.zeros(3))


@dataclass
class RobotModel:
    """Immutable kinematic tree; safe to share across concurrent solvers.

    Joint order in ``joints`` defines the layout of every configuration
    vector ``q`` handed to the kinematics functions.
    """

    root_link: str
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    groups: dict[str, tuple[str, ...]]
    frames: dict[str, Frame]
    feet: FeetSpec | None = None

    # Derived, filled by _finalize().
    link_index: dict[str, int] = field(default_factory=dict, repr=False)
    joint_index: dict[str, int] = field(default_factory=dict, repr=False)
    parent_joint_of_link: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_parent_link: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_child_link: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_origin_xyz: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_origin_rot: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_axis: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    limits_lower: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    limits_upper: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    link_mass: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    link_com: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    ancestor_joints_of_link: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_topo_order: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    joint_origin_identity: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    @property
    def nq(self) -> int:
        return len(self.joints)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.link_mass))

    def group_indices(self, name: str) -> np.ndarray:
        return np.array([self.joint_index[j] for j in self.groups[name]], dtype=int)

    def lower_indices(self) -> np.ndarray:
        """q indices of the 15 lower-body joints: legs then waist."""
        return np.concatenate([
            self.group_indices("left_leg"),
            self.group_indices("right_leg"),
            self.group_indices("waist"),
        ])

    def upper_indices(self) -> np.ndarray:
        """q indices of the 14 arm joints: left arm then right arm."""
        return np.concatenate([
            self.group_indices("left_arm"),
            self.group_indices("right_arm"),
        ])

    def head_indices(self) -> np.ndarray:
        if "head" not in self.groups:
            return np.array([], dtype=int)
        return self.group_indices("head")

    def _finalize(self) -> None:
        from .geometry import rpy_to_matrix

        self.link_index = {l.name: i for i, l in enumerate(self.links)}
        self.joint_index = {j.name: i for i, j in enumerate(self.joints)}
        nl, nj = len(self.links), len(self.joints)
        self.parent_joint_of_link = np.full(nl, -1, dtype=int)
        self.joint_parent_link = np.zeros(nj, dtype=int)
        self.joint_child_link = np.zeros(nj, dtype=int)
        self.joint_origin_xyz = np.zeros((nj, 3))
        self.joint_origin_rot = np.zeros((nj, 3, 3))
        self.joint_axis = np.zeros((nj, 3))
        self.limits_lower = np.zeros(nj)
        self.limits_upper = np.zeros(nj)
        for i, j in enumerate(self.joints):
            self.joint_parent_link[i] = self.link_index[j.parent_link]
            self.joint_child_link[i] = self.link_index[j.child_link]
            self.parent_joint_of_link[self.link_index[j.child_link]] = i
            self.joint_origin_xyz[i] = j.origin_xyz
            self.joint_origin_rot[i] = rpy_to_matrix(j.origin_rpy)
            self.joint_axis[i] = j.axis
            self.limits_lower[i] = j.lower
            self.limits_upper[i] = j.upper
        self.link_mass = np.array([l.mass for l in self.links])
        self.link_com = np.array([l.com for l in self.links])
        self.joint_origin_identity = np.array(
            [np.allclose(R, np.eye(3), atol=0.0) for R in self.joint_origin_rot])
        # ancestor_joints_of_link[l, j] == True iff joint j is on the chain
        # from the root to link l (so moving j moves l).
        anc = np.zeros((nl, nj), dtype=bool)
        for l in range(nl):
            jid = self.parent_joint_of_link[l]
            while jid >= 0:
                anc[l, jid] = True
                jid = self.parent_joint_of_link[self.joint_parent_link[jid]]
        self.ancestor_joints_of_link = anc
        # Evaluation order: parents before children regardless of file order.
        order: list[int] = []
        frontier = [self.link_index[self.root_link]]
        by_parent: dict[int, list[int]] = {}
        for i in range(nj):
            by_parent.setdefault(int(self.joint_parent_link[i]), []).append(i)
        while frontier:
            cur = frontier.pop(0)
            for jid in by_parent.get(cur, []):
                order.append(jid)
                frontier.append(int(self.joint_child_link[jid]))
        self.joint_topo_order = np.array(order, dtype=int)


def _vec3(raw, what: str) -> np.ndarray:
    v = np.asarray(raw, dtype=float)
    if v.shape != (3,):
        raise DescriptionError(f"{what}: expected 3 numbers, got {raw!r}")
    return v


def parse_robot_description(
    text: str,
    *,
    required_groups: dict[str, int] | None = None,
    required_frames: tuple[str, ...] = (),
) -> RobotModel:
    """Parse and validate a JSON robot description.

    ``required_groups`` maps group name to expected size; ``required_frames``
    lists frame names that must exist. Deterministic: identical text yields
    an identical model.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DescriptionError(f"not valid JSON: {e}") from e

    links: list[Link] = []
    seen_links: set[str] = set()
    for raw in doc.get("links", []):
        name = raw["name"]
        if name in seen_links:
            raise DescriptionError(f"duplicate link name '{name}'")
        seen_links.add(name)
        links.append(Link(name=name, mass=float(raw.get("mass", 0.0)),
                          com=_vec3(raw.get("com", [0, 0, 0]), f"link '{name}' com")))
    if not links:
        raise DescriptionError("description has no links")

    link_names = {l.name for l in links}
    joints: list[Joint] = []
    seen_joints: set[str] = set()
    children: set[str] = set()
    for raw in doc.get("joints", []):
        name = raw["name"]
        if name in seen_joints or name in link_names:
            raise DescriptionError(f"duplicate name '{name}'")
        seen_joints.add(name)
        if raw.get("type", "revolute") != "revolute":
            raise DescriptionError(f"joint '{name}': only revolute joints are supported")
        parent, child = raw["parent"], raw["child"]
        if parent not in link_names:
            raise DescriptionError(f"joint '{name}': unknown parent link '{parent}'")
        if child not in link_names:
            raise DescriptionError(f"joint '{name}': unknown child link '{child}'")
        if child in children:
            raise DescriptionError(f"link '{child}' has two parent joints")
        children.add(child)
        axis = _vec3(raw["axis"], f"joint '{name}' axis")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_UNIT_TOL:
            raise DescriptionError(f"joint '{name}': axis is not unit length")
        lo, hi = float(raw["limit"][0]), float(raw["limit"][1])
        if not lo < hi:
            raise DescriptionError(f"joint '{name}': limit lower must be < upper")
        joints.append(Joint(
            name=name, parent_link=parent, child_link=child,
            origin_xyz=_vec3(raw.get("origin_xyz", [0, 0, 0]), f"joint '{name}' origin_xyz"),
            origin_rpy=_vec3(raw.get("origin_rpy", [0, 0, 0]), f"joint '{name}' origin_rpy"),
            axis=axis, lower=lo, upper=hi,
        ))

    roots = [l.name for l in links if l.name not in children]
    if len(roots) != 1:
        raise DescriptionError(f"tree must have exactly one root link, found {roots}")
    root = roots[0]

    # Reachability from the root doubles as the cycle check: a cycle would
    # leave its links unreachable (they cannot contain the single root).
    reachable = {root}
    frontier = [root]
    by_parent: dict[str, list[Joint]] = {}
    for j in joints:
        by_parent.setdefault(j.parent_link, []).append(j)
    while frontier:
        cur = frontier.pop()
        for j in by_parent.get(cur, []):
            if j.child_link not in reachable:
                reachable.add(j.child_link)
                frontier.append(j.child_link)
    unreachable = link_names - reachable
    if unreachable:
        raise DescriptionError(
            f"cycle detected: links not reachable from root: {sorted(unreachable)}")

    joint_names = {j.name for j in joints}
    groups: dict[str, tuple[str, ...]] = {}
    for gname, members in doc.get("groups", {}).items():
        for m in members:
            if m not in joint_names:
                raise DescriptionError(f"group '{gname}': unknown joint '{m}'")
        groups[gname] = tuple(members)
    for gname, size in (required_groups or {}).items():
        if gname not in groups:
            raise DescriptionError(f"missing required group '{gname}'")
        if len(groups[gname]) != size:
            raise DescriptionError(
                f"group '{gname}': expected {size} joints, got {len(groups[gname])}")

    frames: dict[str, Frame] = {}
    for fname, raw in doc.get("frames", {}).items():
        if raw["link"] not in link_names:
            raise DescriptionError(f"frame '{fname}': unknown link '{raw['link']}'")
        frames[fname] = Frame(
            name=fname, link=raw["link"],
            xyz=_vec3(raw.get("xyz", [0, 0, 0]), f"frame '{fname}' xyz"),
            rpy=_vec3(raw.get("rpy", [0, 0, 0]), f"frame '{fname}' rpy"),
        )
    for fname in required_frames:
        if fname not in frames:
            raise DescriptionError(f"missing required frame '{fname}'")

    feet = None
    if "feet" in doc:
        raw = doc["feet"]
        for side in ("left", "right"):
            if raw[side] not in frames:
                raise DescriptionError(f"feet.{side}: unknown frame '{raw[side]}'")
        lx, ly = float(raw["size"][0]), float(raw["size"][1])
        if lx <= 0 or ly <= 0:
            raise DescriptionError("feet.size entries must be positive")
        feet = FeetSpec(left=raw["left"], right=raw["right"], size=(lx, ly))

    model = RobotModel(root_link=root, links=tuple(links), joints=tuple(joints),
                       groups=groups, frames=frames, feet=feet)
    model._finalize()
    return model


def _bundled_text(filename: str) -> str:
    return resources.files("wbopt.data").joinpath(filename).read_text()


def load_humanoid(path: str | None = None) -> RobotModel:
    """Load a humanoid description; default is the bundled ``g1_desk``."""
    text = _bundled_text("g1_desk.json") if path is None else open(path).read()
    model = parse_robot_description(
        text,
        required_groups=dict(HUMANOID_GROUPS),
        required_frames=("torso",),
    )
    if "head" in model.groups and len(model.groups["head"]) > 3:
        raise DescriptionError("head group may have at most 3 joints")
    if model.feet is None:
        raise DescriptionError("humanoid description must declare feet")
    return model


def load_hand(path: str | None = None) -> RobotModel:
    """Load a hand description; default is the bundled 7-DoF three-finger hand."""
    text = _bundled_text("dex_hand.json") if path is None else open(path).read()
    return parse_robot_description(
        text, required_groups=dict(HAND_GROUPS), required_frames=HAND_FRAMES)
