#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the per-race action catalogs under data/catalogs/.

Build_* ids follow the PySC2 function table; the remaining ids are assigned
in contiguous blocks per action family.
"""
import json
import pathlib

BUILD_IDS = {
    "Build_Armory_screen": 39, "Build_Assimilator_screen": 40, "Build_BanelingNest_screen": 41,
    "Build_Barracks_screen": 42, "Build_Bunker_screen": 43, "Build_CommandCenter_screen": 44,
    "Build_CreepTumor_screen": 45, "Build_CreepTumor_Queen_screen": 46, "Build_CreepTumor_Tumor_screen": 47,
    "Build_CyberneticsCore_screen": 48, "Build_DarkShrine_screen": 49, "Build_EngineeringBay_screen": 50,
    "Build_EvolutionChamber_screen": 51, "Build_Extractor_screen": 52, "Build_Factory_screen": 53,
    "Build_FleetBeacon_screen": 54, "Build_Forge_screen": 55, "Build_FusionCore_screen": 56,
    "Build_Gateway_screen": 57, "Build_GhostAcademy_screen": 58, "Build_Hatchery_screen": 59,
    "Build_HydraliskDen_screen": 60, "Build_InfestationPit_screen": 61, "Build_Interceptors_quick": 62,
    "Build_MissileTurret_screen": 64, "Build_Nexus_screen": 65, "Build_Nuke_quick": 66,
    "Build_NydusNetwork_screen": 67, "Build_NydusWorm_screen": 68, "Build_PhotonCannon_screen": 69,
    "Build_Pylon_screen": 70, "Build_Reactor_quick": 71, "Build_Reactor_screen": 72,
    "Build_Reactor_Barracks_quick": 73, "Build_Reactor_Barracks_screen": 74,
    "Build_Reactor_Factory_quick": 75, "Build_Reactor_Factory_screen": 76,
    "Build_Reactor_Starport_quick": 77, "Build_Reactor_Starport_screen": 78,
    "Build_Refinery_screen": 79, "Build_RoachWarren_screen": 80, "Build_RoboticsBay_screen": 81,
    "Build_RoboticsFacility_screen": 82, "Build_SensorTower_screen": 83, "Build_SpawningPool_screen": 84,
    "Build_SpineCrawler_screen": 85, "Build_Spire_screen": 86, "Build_SporeCrawler_screen": 87,
    "Build_Stargate_screen": 88, "Build_Starport_screen": 89, "Build_StasisTrap_screen": 90,
    "Build_SupplyDepot_screen": 91, "Build_TechLab_quick": 92, "Build_TechLab_screen": 93,
    "Build_TechLab_Barracks_quick": 94, "Build_TechLab_Barracks_screen": 95,
    "Build_TechLab_Factory_quick": 96, "Build_TechLab_Factory_screen": 97,
    "Build_TechLab_Starport_quick": 98, "Build_TechLab_Starport_screen": 99,
    "Build_TemplarArchive_screen": 100, "Build_TwilightCouncil_screen": 101,
    "Build_UltraliskCavern_screen": 102, "Build_LurkerDen_screen": 103, "Build_ShieldBattery_screen": 104,
}

TERRAN = {
    "build": ["Armory", "Barracks", "Bunker", "CommandCenter", "EngineeringBay", "Factory", "FusionCore",
              "GhostAcademy", "MissileTurret", "Refinery", "SensorTower", "Starport", "SupplyDepot"],
    "build_quick": ["Nuke", "Reactor", "Reactor_Barracks", "Reactor_Factory", "Reactor_Starport",
                    "TechLab", "TechLab_Barracks", "TechLab_Factory", "TechLab_Starport"],
    "build_addon_screen": ["Reactor", "Reactor_Barracks", "Reactor_Factory", "Reactor_Starport",
                           "TechLab", "TechLab_Barracks", "TechLab_Factory", "TechLab_Starport"],
    "train": ["Banshee", "Battlecruiser", "Cyclone", "Ghost", "Hellbat", "Hellion", "Liberator", "Marauder",
              "Marine", "Medivac", "Raven", "Reaper", "SCV", "SiegeTank", "Thor", "VikingFighter", "WidowMine"],
    "morph": ["Hellbat", "OrbitalCommand", "PlanetaryFortress", "SiegeMode", "SupplyDepot_Lower",
              "SupplyDepot_Raise", "Unsiege"],
    "research": ["AdvancedBallistics", "BansheeCloakingField", "BansheeHyperflightRotors",
                 "BattlecruiserWeaponRefit", "CombatShield", "ConcussiveShells", "DrillingClaws",
                 "HiSecAutoTracking", "InfernalPreigniter", "NeosteelFrame", "PersonalCloaking",
                 "RavenCorvidReactor", "RavenRecalibratedExplosives", "SmartServos", "Stimpack",
                 "TerranInfantryArmor", "TerranInfantryWeapons", "TerranShipWeapons",
                 "TerranStructureArmorUpgrade", "TerranVehicleAndShipPlating", "TerranVehicleWeapons"],
}

PROTOSS = {
    "build": ["Assimilator", "CyberneticsCore", "DarkShrine", "FleetBeacon", "Forge", "Gateway", "Nexus",
              "PhotonCannon", "Pylon", "RoboticsBay", "RoboticsFacility", "ShieldBattery", "Stargate",
              "StasisTrap", "TemplarArchive", "TwilightCouncil"],
    "build_quick": ["Interceptors"],
    "build_addon_screen": [],
    "train": ["Adept", "Carrier", "Colossus", "DarkTemplar", "Disruptor", "HighTemplar", "Immortal",
              "Mothership", "MothershipCore", "Observer", "Oracle", "Phoenix", "Probe", "Sentry", "Stalker",
              "Tempest", "VoidRay", "WarpPrism", "Zealot"],
    "train_warp": ["Adept", "DarkTemplar", "HighTemplar", "Sentry", "Stalker", "Zealot"],
    "morph": ["Archon", "Gateway", "WarpGate"],
    "research": ["AdeptResonatingGlaives", "Blink", "Charge", "ExtendedThermalLance", "GraviticBooster",
                 "GraviticDrive", "PhoenixAnionPulseCrystals", "ProtossAirArmor", "ProtossAirWeapons",
                 "ProtossGroundArmor", "ProtossGroundWeapons", "ProtossShields", "PsiStorm", "ShadowStrike",
                 "WarpGate", "InterceptorGravitonCatapult"],
}

ZERG = {
    "build": ["BanelingNest", "CreepTumor", "CreepTumor_Queen", "CreepTumor_Tumor", "EvolutionChamber",
              "Extractor", "Hatchery", "HydraliskDen", "InfestationPit", "LurkerDen", "NydusNetwork",
              "NydusWorm", "RoachWarren", "SpawningPool", "SpineCrawler", "Spire", "SporeCrawler",
              "UltraliskCavern"],
    "build_quick": [],
    "build_addon_screen": [],
    "train": ["Baneling", "Corruptor", "Drone", "Hydralisk", "Infestor", "Mutalisk", "Overlord", "Queen",
              "Roach", "SwarmHost", "Ultralisk", "Viper", "Zergling"],
    "morph": ["BroodLord", "GreaterSpire", "Hive", "Lair", "Lurker", "OverlordTransport", "Overseer",
              "Ravager", "SpineCrawlerRoot", "SpineCrawlerUproot", "SporeCrawlerRoot", "SporeCrawlerUproot"],
    "research": ["AdaptiveTalons", "AnabolicSynthesis", "Burrow", "CentrifugalHooks", "ChitinousPlating",
                 "GlialRegeneration", "GroovedSpines", "MuscularAugments", "NeuralParasite", "PathogenGlands",
                 "PneumatizedCarapace", "TunnelingClaws", "ZergFlyerArmor", "ZergFlyerAttack",
                 "ZergGroundArmor", "ZergMeleeWeapons", "ZergMissileWeapons", "ZerglingAdrenalGlands",
                 "ZerglingMetabolicBoost"],
    "burrow": ["BurrowDown_Baneling", "BurrowDown_Drone", "BurrowDown_Hydralisk", "BurrowDown_Infestor",
               "BurrowDown_Queen", "BurrowDown_Roach", "BurrowDown_Zergling", "BurrowUp_Baneling",
               "BurrowUp_Drone", "BurrowUp_Hydralisk", "BurrowUp_Roach", "BurrowUp_Zergling"],
}

# Blocks for the families without a fixed id table.
FAMILY_BASE = {"research": 300, "morph": 400, "train": 450, "train_warp": 500, "burrow": 550}

MINI = {
    "Terran": ["Build_Barracks_screen", "Build_Factory_screen", "Build_Reactor_Factory_quick",
               "Build_Refinery_screen", "Build_SupplyDepot_screen", "Build_TechLab_Barracks_quick",
               "Morph_OrbitalCommand_quick", "Research_AdvancedBallistics_quick",
               "Research_RavenCorvidReactor_quick", "Research_Stimpack_quick", "Train_Marine_quick",
               "Train_SCV_quick"],
    "Protoss": ["Build_Assimilator_screen", "Build_CyberneticsCore_screen", "Build_Gateway_screen",
                "Build_Nexus_screen", "Build_Pylon_screen", "Build_RoboticsFacility_screen",
                "Morph_WarpGate_quick", "Research_Blink_quick", "Research_WarpGate_quick",
                "Train_Probe_quick", "Train_Stalker_quick", "Train_Zealot_quick"],
    "Zerg": ["Build_Extractor_screen", "Build_Hatchery_screen", "Build_RoachWarren_screen",
             "Build_SpawningPool_screen", "Morph_Lair_quick", "Morph_Overseer_quick",
             "Research_GlialRegeneration_quick", "Research_ZerglingMetabolicBoost_quick",
             "Train_Drone_quick", "Train_Overlord_quick", "Train_Queen_quick", "Train_Zergling_quick"],
}


def build(race_spec):
    actions = {}
    names = [f"Build_{b}_screen" for b in race_spec["build"]]
    names += [f"Build_{b}_quick" for b in race_spec["build_quick"]]
    names += [f"Build_{b}_screen" for b in race_spec["build_addon_screen"]]
    for n in names:
        actions[BUILD_IDS[n]] = n
    for family, prefix in (("research", "Research"), ("morph", "Morph"), ("train", "Train"),
                           ("train_warp", "TrainWarp"), ("burrow", None)):
        for i, item in enumerate(race_spec.get(family, [])):
            name = f"{item}_quick" if prefix is None else f"{prefix}_{item}_quick"
            actions[FAMILY_BASE[family] + i] = name
    return actions


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "catalogs"
    out.mkdir(parents=True, exist_ok=True)
    expected = {"Terran": 75, "Protoss": 61, "Zerg": 74}
    for race, spec in (("Terran", TERRAN), ("Protoss", PROTOSS), ("Zerg", ZERG)):
        actions = build(spec)
        assert len(actions) == expected[race], (race, len(actions))
        assert len(set(actions.values())) == len(actions), race
        doc = {"race": race, "actions": {str(k): v for k, v in sorted(actions.items())}}
        (out / f"{race.lower()}_full.json").write_text(json.dumps(doc, indent=1) + "\n")
        by_name = {v: k for k, v in actions.items()}
        mini = {by_name[n]: n for n in MINI[race]}
        assert len(mini) == 12, race
        doc = {"race": race, "actions": {str(k): v for k, v in sorted(mini.items())}}
        (out / f"{race.lower()}_mini.json").write_text(json.dumps(doc, indent=1) + "\n")
    assert build(TERRAN)[75] == "Build_Reactor_Factory_quick"


if __name__ == "__main__":
    main()
