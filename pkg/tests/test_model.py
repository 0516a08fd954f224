import json

import numpy as np
import pytest

from wbopt.model import DescriptionError, load_humanoid, parse_robot_description

MINIMAL = {
    "links": [{"name": "base", "mass": 1.0}, {"name": "tip", "mass": 0.5, "com": [0, 0, -0.1]}],
    "joints": [{"name": "j0", "parent": "base", "child": "tip",
                "origin_xyz": [0, 0, -0.2], "axis": [0, 1, 0], "limit": [-1.0, 1.0]}],
}


def doc(**overrides):
    d = json.loads(json.dumps(MINIMAL))
    d.update(overrides)
    return json.dumps(d)


def test_single_joint_chain():
    m = parse_robot_description(doc())
    assert m.nq == 1
    assert m.root_link == "base"
    assert m.joints[0].name == "j0"


def test_unknown_parent_link():
    bad = json.loads(doc())
    bad["joints"][0]["parent"] = "nope"
    with pytest.raises(DescriptionError, match="unknown parent link"):
        parse_robot_description(json.dumps(bad))


def test_non_unit_axis():
    bad = json.loads(doc())
    bad["joints"][0]["axis"] = [0, 1, 1]
    with pytest.raises(DescriptionError, match="axis is not unit length"):
        parse_robot_description(json.dumps(bad))


def test_duplicate_names():
    bad = json.loads(doc())
    bad["links"].append({"name": "tip", "mass": 1.0})
    with pytest.raises(DescriptionError, match="duplicate"):
        parse_robot_description(json.dumps(bad))


def test_cycle_detected():
    bad = {
        "links": [{"name": "a", "mass": 1}, {"name": "b", "mass": 1}, {"name": "c", "mass": 1}],
        "joints": [
            {"name": "j1", "parent": "b", "child": "c", "axis": [0, 0, 1], "limit": [-1, 1]},
            {"name": "j2", "parent": "c", "child": "b", "axis": [0, 0, 1], "limit": [-1, 1]},
        ],
    }
    with pytest.raises(DescriptionError, match="cycle"):
        parse_robot_description(json.dumps(bad))


def test_bad_limits():
    bad = json.loads(doc())
    bad["joints"][0]["limit"] = [1.0, 1.0]
    with pytest.raises(DescriptionError, match="limit"):
        parse_robot_description(json.dumps(bad))


def test_missing_required_group():
    with pytest.raises(DescriptionError, match="missing required group 'left_leg'"):
        parse_robot_description(doc(), required_groups={"left_leg": 6})


def test_two_roots_rejected():
    bad = json.loads(doc())
    bad["links"].append({"name": "orphan", "mass": 1.0})
    with pytest.raises(DescriptionError, match="exactly one root"):
        parse_robot_description(json.dumps(bad))


def test_bundled_humanoid_layout(humanoid):
    # 29 actuated body DoF: 12 legs + 3 waist + 14 arms (head is extra).
    body = sum(len(humanoid.groups[g]) for g in
               ("left_leg", "right_leg", "waist", "left_arm", "right_arm"))
    assert body == 29
    assert len(humanoid.lower_indices()) == 15
    assert len(humanoid.upper_indices()) == 14
    wp = humanoid.joints[humanoid.joint_index["waist_pitch"]]
    assert (wp.lower, wp.upper) == (-0.52, 0.52)
    for j in humanoid.joints:
        assert abs(np.linalg.norm(j.axis) - 1.0) <= 1e-9
        assert j.lower < j.upper


def test_parse_is_deterministic(humanoid):
    m2 = load_humanoid()
    assert [j.name for j in m2.joints] == [j.name for j in humanoid.joints]
    assert np.array_equal(m2.limits_lower, humanoid.limits_lower)


def test_hand_model(hand):
    assert hand.nq == 7
    assert set(hand.groups) == {"thumb", "index", "middle"}
    for f in ("wrist", "thumb_tip", "index_tip", "middle_tip"):
        assert f in hand.frames
