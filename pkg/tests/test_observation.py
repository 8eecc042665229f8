"""Observation encoders: viewport law, pixel planes, symbolic records.

The pixel planes are checked against a brute-force per-pixel rasterizer
written here from the documented semantics (a pixel is lit iff its center
lies inside some circle of that channel; gridlines at 10-unit pitch are
drawn on the self plane at intensity 0.2, clipped to the arena).  The
production renderer must match it bit-for-bit on randomized scenes.
"""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import add_blob, add_pellet, add_virus, bare_config, bare_world
from petridish.dynamics import ControlInput, DiscreteAction, step_tick
from petridish.observation import (
    BASE_VIEW,
    CH_ENEMIES,
    CH_PELLETS,
    CH_SELF,
    CH_VIRUSES,
    FOV_MARGIN,
    GRID_INTENSITY,
    GRID_PITCH,
    compute_viewport,
    encode_symbolic,
    render_pixel_obs,
)
from petridish.pellets import PELLET_RADIUS
from petridish.world import (
    VIRUS_RADIUS,
    PlayerSpec,
    Vec2,
    create_world,
)

# -- viewport -------------------------------------------------------------------


def test_viewport_minimum_side_for_small_player():
    world = bare_world()
    vp = compute_viewport(world, world.players[0])
    assert vp.side == BASE_VIEW == 60.0
    assert (vp.center.x, vp.center.y) == (100.0, 100.0)


def test_viewport_grows_with_spread_cells():
    world = bare_world()
    from conftest import add_cell

    world.players[0].cells[0].mass = 100.0
    add_cell(world, 0, 100.0, 160.0, 100.0)
    player = world.players[0]
    vp = compute_viewport(world, player)
    # centroid (130, 100); reach = 30 + 10; side = 1.5 * 2 * 40 = 120 > 60
    assert vp.center == Vec2(130.0, 100.0)
    assert vp.side == FOV_MARGIN * 2.0 * player.max_reach() == 120.0
    # margin 1.5 strictly contains every owned cell circle
    half = vp.side / 2.0
    for cell in player.cells:
        assert abs(cell.x - vp.center.x) + cell.radius < half
        assert abs(cell.y - vp.center.y) + cell.radius < half


def test_viewport_fully_observable_covers_arena():
    world = bare_world(fully_observable=True)
    vp = compute_viewport(world, world.players[0])
    assert vp.side == 200.0
    assert (vp.center.x, vp.center.y) == (100.0, 100.0)
    assert (vp.x0, vp.y0) == (0.0, 0.0)


# -- pixel observation: structure ---------------------------------------------------


def test_pixel_obs_shape_dtype_and_resolution():
    world = bare_world(obs_resolution=128)
    obs = render_pixel_obs(world, world.players[0])
    assert obs.planes.shape == (4, 128, 128)
    assert obs.planes.dtype == np.float32
    assert obs.resolution == 128
    t = obs.tensor()
    assert t.shape == (128, 128, 4)
    assert np.shares_memory(t, obs.planes)  # zero-copy transpose
    assert obs.to_bytes() == obs.planes.tobytes()
    assert len(obs.to_bytes()) == 4 * 128 * 128 * 4


def test_pixel_obs_respects_resolution_override():
    world = bare_world()
    obs = render_pixel_obs(world, world.players[0], resolution=32)
    assert obs.planes.shape == (4, 32, 32)


def test_self_plane_contains_own_cell():
    world = bare_world()
    obs = render_pixel_obs(world, world.players[0])
    # mass 25 in a 60-unit viewport at resolution 64: radius ~5.3 px
    lit = (obs.planes[CH_SELF] == 1.0).sum()
    assert 60 <= lit <= 120
    assert obs.planes[CH_ENEMIES].max() == 0.0
    assert obs.planes[CH_PELLETS].max() == 0.0
    assert obs.planes[CH_VIRUSES].max() == 0.0


# -- pixel observation: brute-force oracle -------------------------------------------


def _oracle_planes(world, player, resolution):
    """Per-pixel reference rasterizer (no windowing, no vectorized fill)."""
    vp = compute_viewport(world, player)
    scale = vp.side / resolution
    x0, y0 = vp.x0, vp.y0
    planes = np.zeros((4, resolution, resolution), dtype=np.float32)

    def centers():
        for i in range(resolution):
            for j in range(resolution):
                yield i, j, (j + 0.5), (i + 0.5)

    circles = {CH_PELLETS: [], CH_VIRUSES: [], CH_ENEMIES: [], CH_SELF: []}
    for k in range(world.pellets.count):
        circles[CH_PELLETS].append(
            (
                (float(world.pellets.xs[k]) - x0) / scale,
                (float(world.pellets.ys[k]) - y0) / scale,
                PELLET_RADIUS / scale,
            )
        )
    for v in world.viruses:
        circles[CH_VIRUSES].append(((v.x - x0) / scale, (v.y - y0) / scale, VIRUS_RADIUS / scale))
    for p in world.players:
        ch = CH_SELF if p.index == player.index else CH_ENEMIES
        for c in p.cells:
            circles[ch].append(((c.x - x0) / scale, (c.y - y0) / scale, c.radius / scale))
    for b in world.blobs:
        ch = CH_SELF if b.source_owner == player.index else CH_ENEMIES
        circles[ch].append(((b.x - x0) / scale, (b.y - y0) / scale, b.radius / scale))

    # gridlines first (cells overwrite them with 1.0 on the self plane)
    plane = planes[CH_SELF]
    w, h = world.config.arena_width, world.config.arena_height
    i_lo = max(0, math.ceil((0.0 - y0) / scale - 0.5))
    i_hi = min(resolution - 1, math.floor((h - y0) / scale - 0.5))
    j_lo = max(0, math.ceil((0.0 - x0) / scale - 0.5))
    j_hi = min(resolution - 1, math.floor((w - x0) / scale - 0.5))
    if i_hi >= i_lo and j_hi >= j_lo:
        for k in range(math.ceil(max(x0, 0.0) / GRID_PITCH),
                       math.floor(min(x0 + vp.side, w) / GRID_PITCH) + 1):
            j = math.floor((k * GRID_PITCH - x0) / scale)
            if 0 <= j < resolution:
                for i in range(i_lo, i_hi + 1):
                    plane[i, j] = max(plane[i, j], GRID_INTENSITY)
        for k in range(math.ceil(max(y0, 0.0) / GRID_PITCH),
                       math.floor(min(y0 + vp.side, h) / GRID_PITCH) + 1):
            i = math.floor((k * GRID_PITCH - y0) / scale)
            if 0 <= i < resolution:
                for j in range(j_lo, j_hi + 1):
                    plane[i, j] = max(plane[i, j], GRID_INTENSITY)

    for ch, entries in circles.items():
        plane = planes[ch]
        for i, j, px, py in centers():
            for cx, cy, cr in entries:
                dx = px - cx
                dy = py - cy
                if dx * dx + dy * dy <= cr * cr:
                    plane[i, j] = 1.0
                    break
    return planes


def _busy_world(seed):
    config = bare_config(
        arena_width=150.0,
        arena_height=150.0,
        max_pellets=60,
        min_viruses=3,
        obs_resolution=48,
        seed=seed,
        players=(PlayerSpec(), PlayerSpec(bot_kind="hungry", initial_mass=64.0)),
        start_positions=None,
        virus_regen_enabled=True,
        mass_decay_enabled=True,
    )
    world = create_world(config)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        controls = [
            ControlInput(
                p.index,
                Vec2(rng.uniform(0, 150.0), rng.uniform(0, 150.0)),
                DiscreteAction(int(rng.integers(0, 3))),
            )
            for p in world.players
        ]
        step_tick(world, controls)
    if not world.blobs:  # make sure blobs are exercised
        add_blob(world, 30.0, 120.0, owner=0)
        add_blob(world, 120.0, 30.0, owner=1)
    return world


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_renderer_matches_brute_force_oracle(seed):
    world = _busy_world(seed)
    for player in world.players:
        got = render_pixel_obs(world, player)
        want = _oracle_planes(world, player, world.config.obs_resolution)
        assert np.array_equal(got.planes, want)


def test_renderer_oracle_fully_observable():
    world = _busy_world(9)
    object.__setattr__(world.config, "fully_observable", True)
    got = render_pixel_obs(world, world.players[0])
    want = _oracle_planes(world, world.players[0], 48)
    assert np.array_equal(got.planes, want)


# -- pixel observation: invariants ----------------------------------------------------


@pytest.mark.parametrize("seed", range(10, 22))
def test_pellet_and_virus_planes_are_disjoint(seed):
    world = _busy_world(seed)
    obs = render_pixel_obs(world, world.players[0])
    overlap = (obs.planes[CH_PELLETS] > 0) & (obs.planes[CH_VIRUSES] > 0)
    assert not overlap.any()


@pytest.mark.parametrize("seed", range(30, 38))
def test_self_cells_never_touch_the_viewport_border(seed):
    world = _busy_world(seed)
    for player in world.players:
        obs = render_pixel_obs(world, player)
        solid = obs.planes[CH_SELF] == 1.0
        blob_own = [b for b in world.blobs if b.source_owner == player.index]
        if blob_own:
            continue  # blobs may fly outside the FOV-margin guarantee
        assert solid.any()
        assert not solid[0, :].any() and not solid[-1, :].any()
        assert not solid[:, 0].any() and not solid[:, -1].any()


def test_gridlines_drawn_at_pitch_on_self_plane():
    world = bare_world(fully_observable=True, arena_width=100.0,
                       arena_height=100.0, obs_resolution=50,
                       start_positions=((80.0, 80.0),))
    obs = render_pixel_obs(world, world.players[0])
    plane = obs.planes[CH_SELF]
    # scale = 2 world-units/px: gridline k at x = 10k -> column floor(10k / 2)
    expected_cols = {math.floor(k * 10.0 / 2.0) for k in range(0, 11)}
    expected_cols = {c for c in expected_cols if 0 <= c < 50}
    grid_cols = {j for j in range(50) if np.all(plane[:, j] >= GRID_INTENSITY)}
    assert expected_cols <= grid_cols


def test_empty_scene_renders_empty_planes():
    world = bare_world()  # no pellets, viruses, or opponents configured
    obs = render_pixel_obs(world, world.players[0])
    assert obs.planes[CH_PELLETS].max() == 0.0
    assert obs.planes[CH_VIRUSES].max() == 0.0
    assert obs.planes[CH_ENEMIES].max() == 0.0


# -- symbolic observation ----------------------------------------------------------------


def test_symbolic_schema_and_kinds():
    world = bare_world()
    add_pellet(world, 105.0, 100.0)
    add_virus(world, 90.0, 90.0)
    add_blob(world, 110.0, 110.0, owner=0)
    obs = encode_symbolic(world, world.players[0])
    payload = json.loads(obs.to_json())
    assert set(payload) == {"global", "player", "overlap"}
    assert payload["global"]["arena"] == [200.0, 200.0]
    assert payload["global"]["tick"] == 0
    vp = payload["player"]["viewport"]
    assert vp == [70.0, 70.0, 60.0]  # [x0, y0, side]
    assert payload["player"]["score"] == 25.0
    assert isinstance(payload["player"]["can_split"], bool)
    assert isinstance(payload["player"]["can_eject"], bool)
    kinds = sorted(r["kind"] for r in payload["overlap"])
    assert kinds == ["blob", "cell", "pellet", "virus"]
    (me,) = [r for r in payload["overlap"] if r["kind"] == "cell"]
    assert me["self"] is True
    assert me["mass"] == 25.0
    assert me["radius"] == 5.0
    assert me["pos"] == [100.0, 100.0]


def test_symbolic_clips_to_viewport_boundary_inclusive():
    world = bare_world()
    inside = add_pellet(world, 130.0 + PELLET_RADIUS, 100.0)  # rim touches x=131
    add_pellet(world, 132.0, 100.0)  # strictly outside the 60-wide viewport
    obs = encode_symbolic(world, world.players[0])
    pellet_ids = [r.serial for r in obs.overlap if r.kind == "pellet"]
    assert pellet_ids == [inside]


def test_symbolic_self_flag_distinguishes_owners():
    world = bare_world(
        players=(PlayerSpec(), PlayerSpec(bot_kind="stationary")),
        start_positions=((100.0, 100.0), (110.0, 100.0)),
    )
    add_blob(world, 95.0, 100.0, owner=1)
    obs = encode_symbolic(world, world.players[0])
    by_kind = {}
    for r in obs.overlap:
        by_kind.setdefault(r.kind, []).append(r)
    flags = {r.is_self for r in by_kind["cell"]}
    assert flags == {True, False}
    assert [r.is_self for r in by_kind["blob"]] == [False]


def test_symbolic_can_split_and_eject_thresholds():
    world = bare_world()
    obs = json.loads(encode_symbolic(world, world.players[0]).to_json())
    assert obs["player"]["can_split"] is False  # 25 < 2 x mass floor
    assert obs["player"]["can_eject"] is False  # 25 < mass floor + eject cost
    world.players[0].cells[0].mass = 50.0
    obs = json.loads(encode_symbolic(world, world.players[0]).to_json())
    assert obs["player"]["can_split"] is True
    assert obs["player"]["can_eject"] is True  # 50 >= 43
    assert obs["player"]["score"] == 50.0


def test_symbolic_velocity_fields_track_movement():
    world = bare_world()
    step_tick(world, [ControlInput(0, Vec2(150.0, 100.0))])
    obs = encode_symbolic(world, world.players[0])
    (me,) = [r for r in obs.overlap if r.kind == "cell"]
    assert me.vx > 0.0 and me.vy == 0.0


def test_symbolic_json_is_compact():
    world = bare_world()
    text = encode_symbolic(world, world.players[0]).to_json()
    assert ": " not in text and ", " not in text
