import numpy as np
import pytest

from wbopt.ik import (
    IkTargets,
    IkWeights,
    _virtual_base,
    default_targets,
    residual,
    solve_ik,
    upper_submodel,
)
from wbopt.kinematics import fk


@pytest.fixture(scope="module")
def model():
    from wbopt.model import load_humanoid
    return load_humanoid()


@pytest.fixture(scope="module")
def chain(model):
    return upper_submodel(model)


def fk_targets(chain, q):
    base = _virtual_base(chain, q[17:20], float(q[20]))
    res = fk(chain.sub, base, q[: chain.sub.nq])
    return IkTargets(head=res.frames["head"], left=res.frames["left_wrist"],
                     right=res.frames["right_wrist"])


def random_feasible_q(chain, rng, joint_scale=0.6, rpy_amp=0.3):
    q = chain.q_ref.copy()
    q[:17] += rng.uniform(-0.7, 0.7, 17) * joint_scale
    q[:17] = np.clip(q[:17], chain.lo[:17] * 0.8, chain.hi[:17] * 0.8)
    q[17:20] = rng.uniform(-rpy_amp, rpy_amp, 3)
    q[20] = rng.uniform(0.6, 0.82)
    return q


def test_weights_validation():
    with pytest.raises(ValueError, match="rotation"):
        IkWeights(rotation=0.0)
    with pytest.raises(ValueError, match="exceed"):
        IkWeights(w_arm=1e-3, w_rpy=1e-4)


def test_targets_validation():
    bad = np.eye(3)
    bad[0, 0] = 2.0
    with pytest.raises(ValueError, match="orthonormal"):
        IkTargets(head=(np.zeros(3), bad), left=(np.zeros(3), np.eye(3)),
                  right=(np.zeros(3), np.eye(3)))


def test_residual_zero_at_generator(chain, rng):
    q = random_feasible_q(chain, rng)
    t = fk_targets(chain, q)
    r, _ = residual(chain, q, t, 0.1)
    assert np.max(np.abs(r)) < 1e-12


def test_residual_rotation_rows_vanish_at_lambda_zero(chain, rng):
    q = random_feasible_q(chain, rng)
    t = fk_targets(chain, chain.q_ref)
    r, _ = residual(chain, q, t, 0.0)
    for t_idx in range(3):
        assert np.array_equal(r[12 * t_idx + 3:12 * t_idx + 12], np.zeros(9))


@pytest.mark.parametrize("seed", range(3))
def test_residual_jacobian_finite_differences(chain, seed):
    rng = np.random.default_rng(seed)
    q = random_feasible_q(chain, rng)
    t = fk_targets(chain, chain.q_ref)
    r0, J = residual(chain, q, t, 0.1)
    h = 1e-6
    for i in range(21):
        d = np.zeros(21)
        d[i] = h
        rp, _ = residual(chain, q + d, t, 0.1)
        rm, _ = residual(chain, q - d, t, 0.1)
        fd = (rp - rm) / (2 * h)
        assert np.max(np.abs(fd - J[:, i])) <= 1e-5


def test_roundtrip_recovery(model, chain):
    rng = np.random.default_rng(5)
    for _ in range(15):
        q = random_feasible_q(chain, rng)
        sol = solve_ik(model, fk_targets(chain, q), chain=chain)
        assert sol.iterations <= 100
        assert max(sol.pos_residuals.values()) <= 1e-3
        assert max(sol.rot_residuals.values()) <= 1e-2


def test_posture_priority_for_near_targets(model, chain):
    """Arm-reachable targets leave the whole-body command untouched."""
    rng = np.random.default_rng(6)
    tdef = default_targets(model, chain)
    for _ in range(15):
        q = chain.q_ref.copy()
        q[3:10] = rng.uniform(-0.5, 0.5, 7)
        q[3:10] = np.clip(q[3:10], chain.lo[3:10] * 0.6, chain.hi[3:10] * 0.6)
        t = fk_targets(chain, q)
        t = IkTargets(head=tdef.head, left=t.left, right=tdef.right)
        sol = solve_ik(model, t, chain=chain)
        assert np.max(np.abs(sol.command.rpy)) <= 0.02
        assert abs(sol.command.height - chain.h0) <= 0.005
        assert np.max(np.abs(sol.q_left_arm)) > 1e-3  # the arm did the work


def test_ground_pick_engages_whole_body(model, chain):
    """A target below the arm envelope drops the base height (Fig.-1-style
    ground pick): the crouching-operator triple resolves exactly."""
    tdef = default_targets(model, chain)
    wrist_p, wrist_R = tdef.left
    drop = wrist_p[2] - 0.30
    head_p, head_R = tdef.head
    rp, rR = tdef.right
    t = IkTargets(head=(head_p - np.array([0, 0, drop]), head_R),
                  left=(np.array([wrist_p[0], wrist_p[1], 0.30]), wrist_R),
                  right=(rp - np.array([0, 0, drop]), rR))
    sol = solve_ik(model, t, chain=chain)
    assert sol.command.height < chain.h0 - 0.1
    assert sol.pos_residuals["left_wrist"] <= 1e-2


def test_limits_respected(model, chain):
    rng = np.random.default_rng(7)
    for _ in range(5):
        q = random_feasible_q(chain, rng, joint_scale=1.0)
        sol = solve_ik(model, fk_targets(chain, q), chain=chain)
        qv = sol.q_vector()
        assert np.all(qv >= chain.lo) and np.all(qv <= chain.hi)


def test_objective_monotone_and_warm_start(model, chain):
    rng = np.random.default_rng(8)
    q = random_feasible_q(chain, rng)
    t = fk_targets(chain, q)
    sol = solve_ik(model, t, chain=chain)
    warm = solve_ik(model, t, q_init=sol.q_vector(), chain=chain)
    assert warm.iterations <= 3
    assert warm.objective <= sol.objective + 1e-12


def test_posture_weight_scaling_never_increases_engagement(model, chain):
    rng = np.random.default_rng(9)
    base_w = IkWeights()
    heavy = IkWeights(w_rpy=base_w.w_rpy * 10, w_h=base_w.w_h * 10)
    for _ in range(8):
        q = random_feasible_q(chain, rng)
        t = fk_targets(chain, q)
        a = solve_ik(model, t, base_w, chain=chain)
        b = solve_ik(model, t, heavy, chain=chain)
        eng_a = np.sum(np.abs(a.command.rpy)) + abs(a.command.height - chain.h0)
        eng_b = np.sum(np.abs(b.command.rpy)) + abs(b.command.height - chain.h0)
        assert eng_b <= eng_a + 1e-6


def test_determinism(model, chain, rng):
    q = random_feasible_q(chain, rng)
    t = fk_targets(chain, q)
    s1 = solve_ik(model, t, chain=chain)
    s2 = solve_ik(model, t, chain=chain)
    assert np.array_equal(s1.q_vector(), s2.q_vector())
