"""Build the shipped vacuum-robot config and write it to the package data dir.

The catalog is hand-designed: 20 sensors, 26 actions, 20 faults over a
four-level taxonomy (root, 4 subsystems, 9 component groups, 46 leaves).
Each fault perturbs 1-4 sensors and is fixed by 1-3 actions; 14 of the 20
faults resolve with a single action. Ideal read lists are repeated
verification sweeps over the affected and causally related sensors, sized so
the catalog-wide action-to-read ratio of the reference paths lands near 8%.

Run from the repo root:  python3 scripts/build_default_config.py
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tocbench.robot import load_robot_config  # noqa: E402

OUT_PATH = pathlib.Path(__file__).resolve().parents[1] / "src" / "tocbench" / "data" / "vacuum_robot.json"

LEVEL1 = [
    ("drivetrain", "Drivetrain"),
    ("cleaning_system", "Cleaning system"),
    ("power_system", "Power system"),
    ("navigation", "Navigation"),
]

LEVEL2 = [
    ("wheels", "Wheels", "drivetrain"),
    ("drive_motors", "Drive motors", "drivetrain"),
    ("suction", "Suction unit", "cleaning_system"),
    ("brushes", "Brushes", "cleaning_system"),
    ("dustbin", "Dustbin and filter", "cleaning_system"),
    ("battery", "Battery", "power_system"),
    ("charging", "Charging dock", "power_system"),
    ("rangefinding", "Rangefinding", "navigation"),
    ("motion_sensing", "Motion sensing", "navigation"),
]

# id, label, unit, nominal_mean, noise_std, min, max, level-2 group
SENSORS = [
    ("left_wheel_speed", "Left wheel speed", "rpm", 120.0, 4.0, 0.0, 200.0, "wheels"),
    ("right_wheel_speed", "Right wheel speed", "rpm", 120.0, 4.0, 0.0, 200.0, "wheels"),
    ("drive_motor_current", "Drive motor current", "A", 2.5, 0.2, 0.0, 12.0, "drive_motors"),
    ("drive_motor_temp", "Drive motor temperature", "C", 45.0, 2.0, 10.0, 120.0, "drive_motors"),
    ("suction_pressure", "Suction pressure", "kPa", 18.0, 0.8, 0.0, 30.0, "suction"),
    ("fan_rpm", "Suction fan speed", "rpm", 9000.0, 150.0, 0.0, 12000.0, "suction"),
    ("brush_rpm", "Main brush speed", "rpm", 1400.0, 40.0, 0.0, 2000.0, "brushes"),
    ("brush_motor_current", "Brush motor current", "A", 1.2, 0.1, 0.0, 6.0, "brushes"),
    ("bin_fill_level", "Dustbin fill level", "%", 35.0, 3.0, 0.0, 100.0, "dustbin"),
    ("bin_lid_angle", "Dustbin lid angle", "deg", 0.5, 0.3, 0.0, 90.0, "dustbin"),
    ("filter_pressure_drop", "Filter pressure drop", "kPa", 2.0, 0.2, 0.0, 10.0, "dustbin"),
    ("battery_voltage", "Battery voltage", "V", 24.8, 0.15, 18.0, 29.0, "battery"),
    ("battery_temp", "Battery temperature", "C", 35.0, 1.5, 0.0, 90.0, "battery"),
    ("battery_current", "Battery current", "A", 6.0, 0.4, 0.0, 20.0, "battery"),
    ("charger_contact_voltage", "Charger contact voltage", "V", 24.5, 0.3, 0.0, 30.0, "charging"),
    ("charging_current", "Charging current", "A", 3.5, 0.25, 0.0, 10.0, "charging"),
    ("lidar_scan_rate", "Lidar scan rate", "Hz", 10.0, 0.2, 0.0, 15.0, "rangefinding"),
    ("cliff_sensor_signal", "Cliff sensor signal", "mV", 850.0, 25.0, 0.0, 1200.0, "rangefinding"),
    ("imu_drift", "IMU drift", "deg/min", 0.4, 0.1, 0.0, 10.0, "motion_sensing"),
    ("odometry_error", "Odometry error", "%", 1.5, 0.3, 0.0, 25.0, "motion_sensing"),
]

# id, label, level-2 group
ACTIONS = [
    ("clear_wheel_obstruction", "Clear wheel obstruction", "wheels"),
    ("calibrate_wheel_encoders", "Calibrate wheel encoders", "wheels"),
    ("restart_drive_motor", "Restart drive motor", "drive_motors"),
    ("reset_motor_controller", "Reset motor controller", "drive_motors"),
    ("cool_down_motors", "Cool down drive motors", "drive_motors"),
    ("restart_suction_fan", "Restart suction fan", "suction"),
    ("clear_air_duct", "Clear air duct", "suction"),
    ("reseat_fan_housing", "Reseat fan housing", "suction"),
    ("remove_brush_debris", "Remove debris from brush", "brushes"),
    ("replace_main_brush", "Replace main brush", "brushes"),
    ("replace_side_brush", "Replace side brush", "brushes"),
    ("tighten_brush_mount", "Tighten brush mount", "brushes"),
    ("empty_dustbin", "Empty dustbin", "dustbin"),
    ("reseat_dustbin", "Reseat dustbin", "dustbin"),
    ("replace_bin_filter", "Replace bin filter", "dustbin"),
    ("close_bin_lid", "Close dustbin lid", "dustbin"),
    ("recharge_battery", "Recharge battery", "battery"),
    ("power_cycle_robot", "Power-cycle robot", "battery"),
    ("replace_battery_pack", "Replace battery pack", "battery"),
    ("clean_charging_contacts", "Clean charging contacts", "charging"),
    ("realign_dock", "Realign charging dock", "charging"),
    ("replace_dock_fuse", "Replace dock fuse", "charging"),
    ("clean_lidar_window", "Clean lidar window", "rangefinding"),
    ("recalibrate_cliff_sensors", "Recalibrate cliff sensors", "rangefinding"),
    ("recalibrate_imu", "Recalibrate IMU", "motion_sensing"),
    ("reset_odometry", "Reset odometry", "motion_sensing"),
]

# id, symptom, effects {sensor: (shifted_mean, shifted_std)}, resolution,
# related sensors, (affected sweep rounds, related sweep rounds)
FAULTS = [
    (
        "drive_slow_obstruction",
        "Robot driving slow",
        {
            "left_wheel_speed": (70.0, 6.0),
            "right_wheel_speed": (72.0, 6.0),
            "drive_motor_current": (5.5, 0.5),
        },
        ["clear_wheel_obstruction"],
        ["drive_motor_temp", "battery_current", "odometry_error"],
        (4, 2),
    ),
    (
        "drive_motor_overheat",
        "Robot stops mid-run and smells hot",
        {
            "drive_motor_temp": (95.0, 3.0),
            "drive_motor_current": (4.8, 0.4),
        },
        ["cool_down_motors", "reset_motor_controller"],
        ["left_wheel_speed", "right_wheel_speed", "battery_temp"],
        (4, 3),
    ),
    (
        "encoder_drift",
        "Robot veers off its planned path",
        {
            "left_wheel_speed": (132.0, 5.0),
            "right_wheel_speed": (108.0, 5.0),
            "odometry_error": (8.0, 1.0),
        },
        ["calibrate_wheel_encoders"],
        ["imu_drift"],
        (5, 2),
    ),
    (
        "motor_controller_fault",
        "Robot moves in jerks",
        {
            "drive_motor_current": (7.5, 1.2),
            "left_wheel_speed": (95.0, 18.0),
            "right_wheel_speed": (143.0, 18.0),
        },
        ["reset_motor_controller"],
        ["odometry_error", "drive_motor_temp"],
        (4, 3),
    ),
    (
        "suction_duct_blocked",
        "Robot leaves dust on the floor",
        {
            "suction_pressure": (9.5, 1.0),
            "fan_rpm": (8700.0, 180.0),
        },
        ["clear_air_duct"],
        ["filter_pressure_drop", "bin_fill_level", "brush_rpm"],
        (4, 3),
    ),
    (
        "fan_stall",
        "Loud whine and no suction",
        {
            "fan_rpm": (2500.0, 300.0),
            "suction_pressure": (4.0, 0.8),
        },
        ["restart_suction_fan", "reseat_fan_housing"],
        ["filter_pressure_drop", "bin_fill_level"],
        (5, 3),
    ),
    (
        "filter_clogged",
        "Suction fades after a few minutes",
        {
            "filter_pressure_drop": (6.5, 0.5),
            "suction_pressure": (12.0, 1.0),
            "fan_rpm": (9350.0, 160.0),
        },
        ["replace_bin_filter"],
        ["bin_fill_level"],
        (5, 2),
    ),
    (
        "brush_tangled",
        "Dirt trail left behind the robot",
        {
            "brush_rpm": (650.0, 80.0),
            "brush_motor_current": (2.6, 0.3),
        },
        ["remove_brush_debris"],
        ["suction_pressure", "bin_fill_level"],
        (5, 3),
    ),
    (
        "main_brush_worn",
        "Carpets stay dirty after cleaning",
        {
            "brush_rpm": (1180.0, 45.0),
            "brush_motor_current": (0.75, 0.08),
        },
        ["replace_main_brush"],
        ["suction_pressure"],
        (6, 3),
    ),
    (
        "side_brush_broken",
        "Edges and corners stay dirty",
        {
            "brush_motor_current": (0.55, 0.08),
        },
        ["replace_side_brush"],
        ["brush_rpm", "suction_pressure", "lidar_scan_rate", "odometry_error"],
        (5, 3),
    ),
    (
        "brush_mount_loose",
        "Rattling noise from the underside",
        {
            "brush_rpm": (1750.0, 90.0),
            "brush_motor_current": (1.8, 0.25),
            "imu_drift": (1.4, 0.3),
        },
        ["tighten_brush_mount"],
        ["odometry_error"],
        (5, 2),
    ),
    (
        "bin_full",
        "Pickup performance dropped",
        {
            "bin_fill_level": (95.0, 1.5),
            "suction_pressure": (13.5, 1.0),
            "filter_pressure_drop": (4.2, 0.4),
        },
        ["empty_dustbin"],
        ["fan_rpm"],
        (5, 2),
    ),
    (
        "bin_unseated",
        "Dust blows back out of the robot",
        {
            "bin_lid_angle": (24.0, 4.0),
            "suction_pressure": (11.0, 1.2),
        },
        ["reseat_dustbin", "close_bin_lid"],
        ["bin_fill_level", "filter_pressure_drop"],
        (5, 3),
    ),
    (
        "battery_degraded",
        "Runtime far below normal",
        {
            "battery_voltage": (22.4, 0.3),
            "battery_current": (8.5, 0.6),
            "battery_temp": (48.0, 2.0),
        },
        ["replace_battery_pack"],
        ["charging_current"],
        (5, 2),
    ),
    (
        "battery_overheat",
        "Robot shuts down with a hot casing",
        {
            "battery_temp": (78.0, 3.0),
            "battery_current": (9.2, 0.7),
        },
        ["power_cycle_robot"],
        ["battery_voltage", "drive_motor_temp"],
        (5, 3),
    ),
    (
        "dock_contacts_dirty",
        "Robot does not charge on the dock",
        {
            "charger_contact_voltage": (6.0, 1.5),
            "charging_current": (0.4, 0.15),
        },
        ["clean_charging_contacts"],
        ["battery_voltage"],
        (6, 3),
    ),
    (
        "dock_misaligned",
        "Robot docks but stays empty",
        {
            "charging_current": (0.8, 0.3),
            "charger_contact_voltage": (15.0, 2.0),
            "battery_voltage": (21.9, 0.3),
        },
        ["realign_dock", "clean_charging_contacts"],
        ["battery_current"],
        (5, 2),
    ),
    (
        "lidar_window_dirty",
        "Robot bumps into furniture",
        {
            "lidar_scan_rate": (7.2, 0.4),
        },
        ["clean_lidar_window"],
        ["cliff_sensor_signal", "imu_drift", "odometry_error"],
        (6, 4),
    ),
    (
        "nav_unit_failure",
        "Robot wanders and gets lost",
        {
            "imu_drift": (4.5, 0.6),
            "odometry_error": (12.0, 1.5),
            "lidar_scan_rate": (8.8, 0.3),
        },
        ["recalibrate_imu", "reset_odometry", "power_cycle_robot"],
        ["cliff_sensor_signal"],
        (6, 2),
    ),
    (
        "dock_power_failure",
        "Dock stays dead after a power surge",
        {
            "charger_contact_voltage": (1.5, 0.8),
            "charging_current": (0.2, 0.1),
            "battery_voltage": (22.0, 0.3),
        },
        ["replace_dock_fuse", "clean_charging_contacts", "recharge_battery"],
        ["battery_current"],
        (6, 2),
    ),
]


def build_document() -> dict:
    taxonomy = [{"id": "robot", "label": "Industrial vacuum robot", "level": 0, "parent_id": None, "kind": "category"}]
    for nid, label in LEVEL1:
        taxonomy.append({"id": nid, "label": label, "level": 1, "parent_id": "robot", "kind": "category"})
    for nid, label, parent in LEVEL2:
        taxonomy.append({"id": nid, "label": label, "level": 2, "parent_id": parent, "kind": "category"})
    for sid, label, *_rest, group in SENSORS:
        taxonomy.append({"id": sid, "label": label, "level": 3, "parent_id": group, "kind": "sensor-leaf"})
    for aid, label, group in ACTIONS:
        taxonomy.append({"id": aid, "label": label, "level": 3, "parent_id": group, "kind": "actuator-leaf"})

    sensors = [
        {
            "id": sid,
            "unit": unit,
            "nominal_mean": mean,
            "noise_std": std,
            "min_value": lo,
            "max_value": hi,
            "taxonomy_leaf": sid,
        }
        for sid, _label, unit, mean, std, lo, hi, _group in SENSORS
    ]
    actions = [{"id": aid, "label": label, "taxonomy_leaf": aid} for aid, label, _group in ACTIONS]

    faults = []
    for fid, symptom, effects, resolution, related, (aff_rounds, rel_rounds) in FAULTS:
        affected = list(effects)
        ideal_reads = affected * aff_rounds + related * rel_rounds
        faults.append(
            {
                "id": fid,
                "symptom_message": symptom,
                "sensor_effects": {
                    sid: {"shifted_mean": m, "shifted_std": s} for sid, (m, s) in effects.items()
                },
                "resolution": resolution,
                "ideal_reads": ideal_reads,
                "related_sensors": related,
            }
        )

    return {
        "schema_version": "1",
        "taxonomy": taxonomy,
        "sensors": sensors,
        "actions": actions,
        "faults": faults,
    }


def main() -> None:
    doc = build_document()
    text = json.dumps(doc, indent=2) + "\n"
    config = load_robot_config(text)

    assert len(config.sensors) == 20, len(config.sensors)
    assert len(config.actions) == 26, len(config.actions)
    assert len(config.faults) == 20, len(config.faults)
    singles = sum(1 for f in config.faults if len(f.resolution) == 1)
    assert singles == 14, singles

    total_acts = sum(len(f.resolution) for f in config.faults)
    total_reads = sum(len(f.ideal_reads) for f in config.faults)
    ratio = total_acts / total_reads
    assert 0.06 <= ratio <= 0.10, ratio

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(text)
    print(f"wrote {OUT_PATH}")
    print(f"reference paths: {total_acts} actions / {total_reads} reads, ratio {ratio:.4f}")


if __name__ == "__main__":
    main()
