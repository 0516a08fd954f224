#!/usr/bin/env python3
"""Regenerate the bundled robot descriptions under src/wbopt/data/.

The humanoid mirrors the published 29-DoF layout (12 leg + 3 waist + 14 arm)
plus a 3-DoF head; the waist-pitch limit of +/-0.52 rad is the only
vendor-published joint value, everything else is a documented approximation.
Run from the repo root:  python scripts/make_bundled_models.py
"""

import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "src" / "wbopt" / "data"

X, Y, Z = [1, 0, 0], [0, 1, 0], [0, 0, 1]


def humanoid() -> dict:
    links = [{"name": "pelvis", "mass": 3.0, "com": [0, 0, 0]}]
    joints = []
    groups = {}

    def add(joint, parent, child_link, origin, axis, limit, mass, com=(0, 0, 0)):
        links.append({"name": child_link, "mass": mass, "com": list(com)})
        joints.append({
            "name": joint, "type": "revolute", "parent": parent,
            "child": child_link, "origin_xyz": list(origin), "axis": axis,
            "limit": list(limit),
        })

    for side, sy in (("left", 1.0), ("right", -1.0)):
        p = f"{side}_"
        add(p + "hip_pitch", "pelvis", p + "hip_pitch_link", (0, sy * 0.10, -0.05), Y, (-2.5, 2.8), 1.2)
        add(p + "hip_roll", p + "hip_pitch_link", p + "hip_roll_link", (0, 0, 0), X, (-1.0, 1.0), 0.8)
        add(p + "hip_yaw", p + "hip_roll_link", p + "thigh", (0, 0, 0), Z, (-1.5, 1.5), 2.2, (0, 0, -0.18))
        add(p + "knee", p + "thigh", p + "shank", (0, 0, -0.35), Y, (-0.1, 2.7), 1.8, (0, 0, -0.16))
        add(p + "ankle_pitch", p + "shank", p + "ankle_link", (0, 0, -0.35), Y, (-1.4, 0.9), 0.3)
        add(p + "ankle_roll", p + "ankle_link", p + "foot", (0, 0, 0), X, (-0.6, 0.6), 0.6, (0, 0, -0.04))
        groups[f"{side}_leg"] = [p + n for n in
                                 ("hip_pitch", "hip_roll", "hip_yaw", "knee", "ankle_pitch", "ankle_roll")]

    add("waist_yaw", "pelvis", "waist_yaw_link", (0, 0, 0.05), Z, (-2.62, 2.62), 0.5)
    add("waist_roll", "waist_yaw_link", "waist_roll_link", (0, 0, 0.05), X, (-0.52, 0.52), 0.5)
    # Waist pitch limit +/-0.52 rad is the vendor-published value.
    add("waist_pitch", "waist_roll_link", "torso", (0, 0, 0.05), Y, (-0.52, 0.52), 7.0, (0, 0, 0.15))
    groups["waist"] = ["waist_yaw", "waist_roll", "waist_pitch"]

    for side, sy in (("left", 1.0), ("right", -1.0)):
        p = f"{side}_"
        add(p + "shoulder_pitch", "torso", p + "shoulder_pitch_link", (0, sy * 0.16, 0.25), Y, (-3.0, 2.6), 0.7)
        add(p + "shoulder_roll", p + "shoulder_pitch_link", p + "shoulder_roll_link", (0, 0, 0), X, (-2.2, 2.2), 0.7)
        add(p + "shoulder_yaw", p + "shoulder_roll_link", p + "upper_arm", (0, 0, 0), Z, (-2.6, 2.6), 1.2, (0, 0, -0.10))
        add(p + "elbow", p + "upper_arm", p + "forearm", (0, 0, -0.22), Y, (-1.0, 2.1), 0.8, (0, 0, -0.10))
        add(p + "wrist_roll", p + "forearm", p + "wrist_roll_link", (0, 0, -0.22), X, (-1.9, 1.9), 0.3)
        add(p + "wrist_pitch", p + "wrist_roll_link", p + "wrist_pitch_link", (0, 0, 0), Y, (-1.6, 1.6), 0.3)
        add(p + "wrist_yaw", p + "wrist_pitch_link", p + "hand", (0, 0, 0), Z, (-1.6, 1.6), 0.5, (0, 0, -0.05))
        groups[f"{side}_arm"] = [p + n for n in
                                 ("shoulder_pitch", "shoulder_roll", "shoulder_yaw", "elbow",
                                  "wrist_roll", "wrist_pitch", "wrist_yaw")]

    add("head_yaw", "torso", "head_yaw_link", (0, 0, 0.35), Z, (-1.6, 1.6), 0.1)
    add("head_roll", "head_yaw_link", "head_roll_link", (0, 0, 0), X, (-0.5, 0.5), 0.1)
    add("head_pitch", "head_roll_link", "head", (0, 0, 0), Y, (-0.8, 0.8), 1.2, (0, 0, 0.08))
    groups["head"] = ["head_yaw", "head_roll", "head_pitch"]

    frames = {
        "torso": {"link": "torso", "xyz": [0, 0, 0.10]},
        "head": {"link": "head", "xyz": [0, 0, 0.10]},
        "left_wrist": {"link": "left_hand", "xyz": [0, 0, -0.06]},
        "right_wrist": {"link": "right_hand", "xyz": [0, 0, -0.06]},
        "left_foot": {"link": "left_foot", "xyz": [0, 0, -0.07]},
        "right_foot": {"link": "right_foot", "xyz": [0, 0, -0.07]},
    }
    return {
        "name": "g1_desk",
        "approximate": "all limits and masses except the waist-pitch limit are approximations",
        "links": links, "joints": joints, "groups": groups, "frames": frames,
        "feet": {"left": "left_foot", "right": "right_foot", "size": [0.20, 0.09]},
    }


def hand() -> dict:
    links = [{"name": "palm", "mass": 0.3, "com": [0, 0, 0]}]
    joints = []

    def add(joint, parent, child_link, origin, axis, limit, mass, com=(0, 0, 0)):
        links.append({"name": child_link, "mass": mass, "com": list(com)})
        joints.append({
            "name": joint, "type": "revolute", "parent": parent,
            "child": child_link, "origin_xyz": list(origin), "axis": axis,
            "limit": list(limit),
        })

    add("thumb_cmc_yaw", "palm", "thumb_cmc_link", (0.03, 0.045, 0), Z, (-0.5, 1.3), 0.05)
    add("thumb_cmc_pitch", "thumb_cmc_link", "thumb_proximal", (0, 0, 0), Y, (-0.2, 1.2), 0.05, (0.02, 0, 0))
    add("thumb_ip", "thumb_proximal", "thumb_distal", (0.04, 0, 0), Y, (-0.2, 1.3), 0.03, (0.015, 0, 0))
    add("index_mcp", "palm", "index_proximal", (0.09, 0.02, 0), Y, (-0.1, 1.6), 0.05, (0.02, 0, 0))
    add("index_pip", "index_proximal", "index_distal", (0.045, 0, 0), Y, (-0.1, 1.6), 0.03, (0.015, 0, 0))
    add("middle_mcp", "palm", "middle_proximal", (0.09, -0.02, 0), Y, (-0.1, 1.6), 0.05, (0.02, 0, 0))
    add("middle_pip", "middle_proximal", "middle_distal", (0.045, 0, 0), Y, (-0.1, 1.6), 0.03, (0.015, 0, 0))

    return {
        "name": "dex_hand",
        "approximate": "stand-in kinematics; the vendor hand geometry is unpublished",
        "links": links, "joints": joints,
        "groups": {
            "thumb": ["thumb_cmc_yaw", "thumb_cmc_pitch", "thumb_ip"],
            "index": ["index_mcp", "index_pip"],
            "middle": ["middle_mcp", "middle_pip"],
        },
        "frames": {
            "wrist": {"link": "palm", "xyz": [0, 0, 0]},
            "thumb_tip": {"link": "thumb_distal", "xyz": [0.035, 0, 0]},
            "index_tip": {"link": "index_distal", "xyz": [0.04, 0, 0]},
            "middle_tip": {"link": "middle_distal", "xyz": [0.04, 0, 0]},
        },
    }


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    for name, doc in (("g1_desk.json", humanoid()), ("dex_hand.json", hand())):
        path = DATA / name
        path.write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
