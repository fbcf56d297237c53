"""Combat, movement, support actions, turn refresh, and victory rules."""

import random

import pytest

import hexarena.errors as err
from hexarena.hexes import HexCoord
from hexarena.rules import (
    BattleReport,
    CombatInputs,
    EffectivenessCurve,
    apply_fortify,
    apply_move,
    apply_occupy,
    apply_rest,
    apply_skill,
    check_victory,
    effective_attack,
    effectiveness,
    end_turn,
    plan_move,
    resolve_combat,
    round_half_up,
)
from hexarena.scenario import ScenarioConfig, Terrain
from hexarena.world import (
    ActionPoints,
    MovementPoints,
    Position,
    SkillState,
    StatusEffects,
    TerrainGrid,
    UnitCount,
    WorldState,
    snapshot_digest,
)

CURVE = EffectivenessCurve()


def flat_world(mode="turn_based"):
    cfg = ScenarioConfig()
    return WorldState(cfg, TerrainGrid(cfg.width, cfg.height), mode, seed=1)


def duel(defender_terrain=Terrain.PLAIN, attacker="cavalry", defender="archer", dist=1):
    w = flat_world()
    a = w.spawn_unit("wei", attacker, HexCoord(5, 5))
    d_pos = HexCoord(5, 5 + dist)
    w.terrain.set_terrain(d_pos, defender_terrain)
    d = w.spawn_unit("shu", defender, d_pos)
    return w, a, d


# -- effectiveness curve -------------------------------------------------------


def test_curve_endpoints_exact():
    assert effectiveness(0.0, CURVE) == 0.0
    assert effectiveness(1.0, CURVE) == 1.0


def test_curve_monotone_on_grid():
    values = [effectiveness(i / 1000, CURVE) for i in range(1001)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_curve_penalizes_depletion():
    for i in range(1, 1000):
        x = i / 1000
        assert effectiveness(x, CURVE) < x


def test_curve_default_at_30_percent():
    assert effectiveness(0.3, CURVE) == pytest.approx(0.195, abs=1e-12)


def test_curve_rejects_out_of_domain():
    with pytest.raises(err.DomainError):
        effectiveness(-0.01, CURVE)
    with pytest.raises(err.DomainError):
        effectiveness(1.01, CURVE)


def test_effective_attack_products():
    assert effective_attack(CombatInputs(85, 1.0, 1.0, 1.0), CURVE) == 85
    # sigma(0.95) = 0.5*0.95 + 0.5*0.9025 = 0.92625
    assert effective_attack(CombatInputs(85, 0.95, 1.0, 1.0), CURVE) == pytest.approx(
        78.73125, abs=1e-9
    )
    assert effective_attack(CombatInputs(85, 0.7, 0.0, 1.0), CURVE) == 0.0


# -- combat ---------------------------------------------------------------------


def test_full_strength_cavalry_vs_archer_on_plain():
    w, a, d = duel(Terrain.PLAIN)
    report = resolve_combat(w, a, d)
    # round(85 * 100 / 130) = 65
    assert report.damage_dealt == 65
    assert report.defender_count_after == 35
    assert report.terrain_modifier_applied == 0.0
    assert not report.defender_destroyed
    assert w.registry.get(a, ActionPoints).current == 1


def test_hill_defense_bonus_reduces_casualties():
    w, a, d = duel(Terrain.HILL)
    report = resolve_combat(w, a, d)
    # D_eff = 30 * 1.3 = 39 -> round(8500 / 139) = 61
    assert report.damage_dealt == 61
    assert report.terrain_modifier_applied == pytest.approx(0.30)


def test_attack_out_of_range():
    w, a, d = duel(dist=3)
    with pytest.raises(err.OutOfRange):
        resolve_combat(w, a, d)


def test_friendly_fire_rejected():
    w = flat_world()
    a = w.spawn_unit("wei", "cavalry", HexCoord(5, 5))
    b = w.spawn_unit("wei", "archer", HexCoord(5, 6))
    with pytest.raises(err.FriendlyFire):
        resolve_combat(w, a, b)


def test_attack_without_ap_rejected():
    w, a, d = duel()
    w.registry.get(a, ActionPoints).current = 0
    with pytest.raises(err.InsufficientAP):
        resolve_combat(w, a, d)


def test_dead_target_rejected():
    w, a, d = duel()
    w.registry.despawn(d)
    with pytest.raises(err.DeadTarget):
        resolve_combat(w, a, d)


def test_defender_destroyed_and_despawned():
    w, a, d = duel()
    w.registry.get(d, UnitCount).current = 10
    report = resolve_combat(w, a, d)
    assert report.defender_destroyed
    assert report.defender_count_after == 0
    assert not w.registry.exists(d)


def test_combat_is_deterministic():
    reports = []
    for _ in range(3):
        w, a, d = duel(Terrain.FOREST)
        reports.append(resolve_combat(w, a, d))
    assert reports[0] == reports[1] == reports[2]


def test_casualties_monotone_in_attack_and_terrain():
    rng = random.Random(55)
    for _ in range(200):
        base = rng.randrange(20, 120)
        bonus = rng.choice([0.0, 0.2, 0.3, 0.4, 0.5])
        ratio = rng.random()

        def casualties(a_base, terrain_bonus):
            a_eff = a_base * effectiveness(ratio, CURVE)
            d_eff = 30 * (1 + terrain_bonus)
            return round_half_up(a_eff * 100 / (100 + d_eff))

        assert casualties(base + 10, bonus) >= casualties(base, bonus)
        assert casualties(base, min(bonus + 0.2, 0.8)) <= casualties(base, bonus)


def test_status_multiplier_zero_annihilates():
    w, a, d = duel()
    w.registry.get(a, StatusEffects).active["FATIGUE"] = -1
    w.config.statuses["FATIGUE"].multiplier = 0.0
    report = resolve_combat(w, a, d)
    assert report.damage_dealt == 0


def test_defense_stacking_capped():
    w, a, d = duel(Terrain.CITY)
    pos = w.registry.get(d, Position).coord
    w.terrain.set_fort(pos, 3)  # 0.40 + 3*0.15 = 0.85 -> capped at 0.80
    report = resolve_combat(w, a, d)
    assert report.terrain_modifier_applied == pytest.approx(0.80)
    # D_eff = 30 * 1.8 = 54 -> round(8500 / 154) = 55
    assert report.damage_dealt == 55


# -- movement -------------------------------------------------------------------


def test_move_deducts_path_cost():
    w = flat_world()
    u = w.spawn_unit("wei", "cavalry", HexCoord(5, 5))
    path = plan_move(w, u, HexCoord(5, 8))
    assert path.total_cost == 3
    assert apply_move(w, u, path) == 2
    assert w.registry.get(u, Position).coord == HexCoord(5, 8)


def test_move_costs_respect_terrain():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.terrain.set_terrain(HexCoord(5, 6), Terrain.FOREST)
    path = plan_move(w, u, HexCoord(5, 6))
    assert path.total_cost == 2


def test_move_beyond_mp_rejected():
    w = flat_world()
    u = w.spawn_unit("wei", "cavalry", HexCoord(5, 5))
    with pytest.raises(err.InsufficientMP):
        plan_move(w, u, HexCoord(5, 11))  # cost 6 over plains, MP 5


def test_move_blocked_by_units_and_water():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(0, 0))
    # wall the corner off with water
    for cell in (HexCoord(1, 0), HexCoord(0, 1), HexCoord(1, 1)):
        w.terrain.set_terrain(cell, Terrain.WATER)
    with pytest.raises(err.Blocked):
        plan_move(w, u, HexCoord(5, 5))


def test_move_onto_occupied_tile_blocked():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.spawn_unit("shu", "archer", HexCoord(5, 6))
    with pytest.raises(err.Blocked):
        plan_move(w, u, HexCoord(5, 6))


def test_confusion_blocks_movement():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.registry.get(u, StatusEffects).active["CONFUSION"] = 1
    with pytest.raises(err.StatusForbids):
        plan_move(w, u, HexCoord(5, 6))


# -- support actions --------------------------------------------------------------


def test_occupy_adjacent_neutral_city():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    city = HexCoord(5, 6)
    w.terrain.set_terrain(city, Terrain.CITY)
    detail = apply_occupy(w, u, city)
    assert detail["owner"] == "wei"
    assert w.terrain.owner_at(city) == "wei"
    assert w.registry.get(u, ActionPoints).current == 1


def test_occupy_own_tile_rejected():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.terrain.set_owner(HexCoord(5, 6), "wei")
    with pytest.raises(err.AlreadyOwned):
        apply_occupy(w, u, HexCoord(5, 6))


def test_fortify_water_rejected():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.terrain.set_terrain(HexCoord(5, 6), Terrain.WATER)
    w.terrain.set_owner(HexCoord(5, 6), "wei")
    with pytest.raises(err.TerrainForbidsConstruction):
        apply_fortify(w, u, HexCoord(5, 6))


def test_fortify_spends_cp_and_caps_at_max_level():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    here = HexCoord(5, 5)
    w.terrain.set_owner(here, "wei")
    detail = apply_fortify(w, u, here)
    assert detail["level"] == 1
    assert w.cp_pool["wei"] == 4
    w.terrain.set_fort(here, 3)
    w.registry.get(u, ActionPoints).current = 2
    w.registry.get(u, ActionPoints).spent_this_turn = 0
    with pytest.raises(err.MaxFortification):
        apply_fortify(w, u, here)


def test_skill_cooldown_cycle():
    w = flat_world()
    a = w.spawn_unit("wei", "archer", HexCoord(5, 5))
    d = w.spawn_unit("shu", "infantry", HexCoord(5, 7))
    detail = apply_skill(w, a, "fire_attack", d)
    assert detail["report"]["damage_dealt"] > 0
    # next own turn: cooldown still running
    end_turn(w, "wei")
    end_turn(w, "shu")
    with pytest.raises(err.SkillOnCooldown):
        apply_skill(w, a, "fire_attack", d)


def test_skill_sp_pool_exhausts():
    w = flat_world()
    a = w.spawn_unit("wei", "archer", HexCoord(5, 5))
    d = w.spawn_unit("shu", "infantry", HexCoord(5, 7))
    w.registry.get(a, SkillState).sp = 0
    with pytest.raises(err.InsufficientSP):
        apply_skill(w, a, "fire_attack", d)


def test_ambush_applies_confusion():
    w = flat_world()
    a = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    d = w.spawn_unit("shu", "archer", HexCoord(5, 6))
    apply_skill(w, a, "ambush", d)
    assert "CONFUSION" in w.registry.get(d, StatusEffects).active


def test_rest_restores_ap_and_relieves_status():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    ap = w.registry.get(u, ActionPoints)
    ap.current = 1
    w.registry.get(u, StatusEffects).active["FATIGUE"] = -1
    detail = apply_rest(w, u)
    assert detail == {"ap": 2, "status_relieved": "FATIGUE"}
    assert w.registry.get(u, StatusEffects).active == {}


def test_ap_spend_never_exceeds_max_even_with_rest():
    w = flat_world()
    a = w.spawn_unit("wei", "cavalry", HexCoord(5, 5))
    d = w.spawn_unit("shu", "infantry", HexCoord(5, 6))
    heal = lambda: setattr(w.registry.get(d, UnitCount), "current", 100)
    resolve_combat(w, a, d)
    heal()
    apply_rest(w, a)  # back to 2 AP, but the turn spend ledger stands
    resolve_combat(w, a, d)
    heal()
    apply_rest(w, a)
    with pytest.raises(err.InsufficientAP):
        resolve_combat(w, a, d)
    assert w.registry.get(a, ActionPoints).spent_this_turn == 2


# -- turn transitions -------------------------------------------------------------


def test_end_turn_restores_gauges_at_next_activation():
    w = flat_world()
    u = w.spawn_unit("wei", "cavalry", HexCoord(5, 5))
    ap = w.registry.get(u, ActionPoints)
    mp = w.registry.get(u, MovementPoints)
    ap.current = 0
    ap.spent_this_turn = 2
    mp.current_milli = 1000
    end_turn(w, "wei")
    assert w.active_faction == "shu"
    end_turn(w, "shu")
    assert w.active_faction == "wei"
    assert w.turn_number == 2
    assert (ap.current, ap.spent_this_turn) == (2, 0)
    assert mp.current == 5


def test_end_turn_by_inactive_faction_rejected():
    w = flat_world()
    with pytest.raises(err.NotYourTurn):
        end_turn(w, "shu")


def test_status_duration_one_removed_after_own_end_turn():
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.registry.get(u, StatusEffects).active["CONFUSION"] = 1
    end_turn(w, "wei")
    assert w.registry.get(u, StatusEffects).active == {}


def test_city_income_awarded_per_owned_city():
    w = flat_world()
    w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    city = HexCoord(7, 7)
    w.terrain.set_terrain(city, Terrain.CITY)
    w.terrain.set_owner(city, "wei")
    before = dict(w.resources["wei"])
    end_turn(w, "wei")
    assert w.resources["wei"]["manpower"] == before["manpower"] + 10
    assert w.resources["wei"]["supplies"] == before["supplies"] + 5


# -- victory ----------------------------------------------------------------------


def test_elimination_victory():
    w, a, d = duel()
    w.registry.get(d, UnitCount).current = 5
    resolve_combat(w, a, d)
    outcome = check_victory(w)
    assert outcome is not None
    assert outcome.winner == "wei"
    assert outcome.terminal_reason == "elimination"
    assert outcome.surviving_fraction == pytest.approx(1.0)


def test_horizon_tiebreak_by_fraction():
    w = flat_world()
    a = w.spawn_unit("wei", "infantry", HexCoord(2, 2))
    b = w.spawn_unit("shu", "infantry", HexCoord(9, 9))
    w.registry.get(a, UnitCount).current = 60
    w.registry.get(b, UnitCount).current = 40
    w.turn_number = w.config.horizon_turns + 1
    outcome = check_victory(w)
    assert outcome.winner == "wei"
    assert outcome.terminal_reason == "horizon"
    assert outcome.duration == w.config.horizon_turns
    assert outcome.surviving_fraction == pytest.approx(0.6)


def test_horizon_equal_fractions_draw():
    w = flat_world()
    w.spawn_unit("wei", "infantry", HexCoord(2, 2))
    w.spawn_unit("shu", "infantry", HexCoord(9, 9))
    w.turn_number = w.config.horizon_turns + 1
    outcome = check_victory(w)
    assert outcome.winner is None


def test_no_outcome_mid_match():
    w = flat_world()
    w.spawn_unit("wei", "infantry", HexCoord(2, 2))
    w.spawn_unit("shu", "infantry", HexCoord(9, 9))
    assert check_victory(w) is None


# -- terrain golden fixtures -------------------------------------------------------

TERRAIN_MOVE_FIXTURES = [
    (Terrain.PLAIN, 1),
    (Terrain.FOREST, 2),
    (Terrain.HILL, 2),
    (Terrain.MOUNTAIN, 3),
    (Terrain.WATER, None),
    (Terrain.CITY, 1),
]

# casualties for full-strength cavalry (85) vs archer (30 def) on each tile,
# frozen from round_half_up(8500 / (100 + 30 * (1 + bonus)))
TERRAIN_COMBAT_FIXTURES = [
    (Terrain.PLAIN, 65),
    (Terrain.FOREST, 63),
    (Terrain.HILL, 61),
    (Terrain.MOUNTAIN, 59),
    (Terrain.CITY, 60),
]


@pytest.mark.parametrize("terrain,cost", TERRAIN_MOVE_FIXTURES)
def test_terrain_move_cost_fixture(terrain, cost):
    w = flat_world()
    u = w.spawn_unit("wei", "infantry", HexCoord(5, 5))
    w.terrain.set_terrain(HexCoord(5, 6), terrain)
    if cost is None:
        with pytest.raises(err.Blocked):
            plan_move(w, u, HexCoord(5, 6))
    else:
        assert plan_move(w, u, HexCoord(5, 6)).total_cost == cost


@pytest.mark.parametrize("terrain,expected", TERRAIN_COMBAT_FIXTURES)
def test_terrain_combat_fixture(terrain, expected):
    w, a, d = duel(terrain)
    assert resolve_combat(w, a, d).damage_dealt == expected


def test_water_units_cannot_exist():
    w = flat_world()
    w.terrain.set_terrain(HexCoord(4, 4), Terrain.WATER)
    with pytest.raises(err.ImpassableTile):
        w.spawn_unit("wei", "infantry", HexCoord(4, 4))
