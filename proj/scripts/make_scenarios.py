"""Generate the bundled parking scenarios.

The reference paths stand in for a lattice planner: they are open-loop
simulations of the tractor-trailer kinematics with a hand-shaped steering
profile. The forward path is simulated directly. The reverse path is the
time reversal of a forward exit from the slot, which the kinematic model
admits exactly. Both paths cut the inner slot corner with the trailer, as a
planner that ignores off-tracking would.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from shapely.geometry import Polygon

L1, L2, LH = 3.23, 2.9, 1.15
W1, W2 = 2.0, 2.5
OH_F, OH_R, OH_T = 1.0, 1.0, 1.5
SLOT_HALF = 1.5         # 3 m slot
CAR_AX, CAR_AY = 1.5, 6.5
DT = 0.01


def simulate(x, y, th1, th2, profile, direction):
    """profile: list of (distance [m], steering angle [rad]). Returns sampled states."""
    states = [(x, y, th1, th2)]
    sgn = 1.0 if direction > 0 else -1.0
    for dist, delta in profile:
        n = max(1, int(round(dist / DT)))
        for _ in range(n):
            phi = th1 - th2
            dth1 = sgn * math.tan(delta) / L1
            dth2 = sgn * (math.sin(phi) - LH / L1 * math.cos(phi) * math.tan(delta)) / L2
            x += sgn * DT * math.cos(th1)
            y += sgn * DT * math.sin(th1)
            th1 += DT * dth1
            th2 += DT * dth2
            states.append((x, y, th1, th2))
    return states


def ramp(total, delta_from, delta_to, pieces=10):
    return [(total / pieces, delta_from + (delta_to - delta_from) * (i + 0.5) / pieces) for i in range(pieces)]


def resample(states, spacing):
    pts = np.array(states)
    d = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])))])
    targets = np.arange(0.0, d[-1], spacing)
    if d[-1] - targets[-1] > 0.25 * spacing:
        targets = np.append(targets, d[-1])
    else:
        targets[-1] = d[-1]
    return [tuple(np.interp(t, d, pts[:, k]) for k in range(4)) for t in targets]


def rect(cx, cy, c, s, hl, hw):
    return Polygon([(cx + c * a - s * b, cy + s * a + c * b)
                    for a, b in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))])


def bodies(x, y, th1, th2):
    c1, s1, c2, s2 = math.cos(th1), math.sin(th1), math.cos(th2), math.sin(th2)
    lt, lr = OH_R + L1 + OH_F, L2 + OH_T
    mid = -OH_R + 0.5 * lt
    hx, hy = x - LH * c1, y - LH * s1
    return [rect(x + mid * c1, y + mid * s1, c1, s1, 0.5 * lt, 0.5 * W1),
            rect(hx - 0.5 * lr * c2, hy - 0.5 * lr * s2, c2, s2, 0.5 * lr, 0.5 * W2)]


def superellipse(o, n=720):
    pts = []
    for i in range(n):
        t = 2 * math.pi * i / n
        ct, st = math.cos(t), math.sin(t)
        lx = o["ax"] * math.copysign(abs(ct) ** (2 / o["exponent"]), ct)
        ly = o["ay"] * math.copysign(abs(st) ** (2 / o["exponent"]), st)
        c, s = math.cos(o.get("theta", 0.0)), math.sin(o.get("theta", 0.0))
        pts.append((o["cx"] + c * lx - s * ly, o["cy"] + s * lx + c * ly))
    return Polygon(pts)


def signed_clearance(state, polys):
    """Distance to the nearest obstacle, or minus the smaller extent of the overlap."""
    best = math.inf
    for b in bodies(*state):
        for p in polys:
            overlap = b.intersection(p)
            if overlap.area > 0:
                x0, y0, x1, y1 = overlap.bounds
                best = min(best, -min(x1 - x0, y1 - y0))
            else:
                best = min(best, b.distance(p))
    return best


def disc_barrier(state, cars, n_tractor, n_trailer, margin):
    """Smallest inflated super-ellipse value over the footprint discs, as the controller sees it."""
    x, y, th1, th2 = state
    c1, s1, c2, s2 = math.cos(th1), math.sin(th1), math.cos(th2), math.sin(th2)
    lt, lr = OH_R + L1 + OH_F, L2 + OH_T
    discs = [(x + d * c1, y + d * s1, 0.5 * W1)
             for d in (-OH_R + (i + 0.5) * lt / n_tractor for i in range(n_tractor))]
    discs += [(x - LH * c1 - d * c2, y - LH * s1 - d * s2, 0.5 * W2)
              for d in ((i + 0.5) * lr / n_trailer for i in range(n_trailer))]
    best = math.inf
    for px, py, r in discs:
        for o in cars:
            a, b, e = o["ax"] + r + margin, o["ay"] + r + margin, o["exponent"]
            best = min(best, abs((px - o["cx"]) / a) ** e + abs((py - o["cy"]) / b) ** e - 1.0)
    return best


def parked_cars(slot_x, y0):
    return [
        {"name": "parked_left", "cx": slot_x - SLOT_HALF - CAR_AX, "cy": y0 + CAR_AY, "ax": CAR_AX, "ay": CAR_AY,
         "theta": 0.0, "exponent": 4},
        {"name": "parked_right", "cx": slot_x + SLOT_HALF + CAR_AX, "cy": y0 + CAR_AY, "ax": CAR_AX, "ay": CAR_AY,
         "theta": 0.0, "exponent": 4},
    ]


def turn(x, y, th1, th2, delta, ramp_len, heading, direction=+1):
    """Ramp the steering up to `delta`, hold it until the tractor heading is
    close to `heading`, then ramp back to straight."""
    sgn = 1.0 if delta > 0 else -1.0
    st = simulate(x, y, th1, th2, ramp(ramp_len, 0.0, delta, 5), direction)
    # heading change during the ramp down, approximately half the held rate
    target = heading - sgn * 0.5 * abs(math.tan(delta)) * ramp_len / L1
    while sgn * (st[-1][2] - target) < 0:
        st += simulate(*st[-1], [(DT, delta)], direction)[1:]
    st += simulate(*st[-1], ramp(ramp_len, delta, 0.0, 5), direction)[1:]
    return st


def forward_scenario(args):
    # Aisle along +x at y = 0, left turn into a slot opening toward -y at y = fwd_gap.
    st = simulate(0.0, 0.0, 0.0, 0.0, [(args.lead, 0.0)], +1)
    st += turn(*st[-1], args.fwd_delta, args.ramp, math.pi / 2)[1:]
    y0 = args.fwd_gap
    goal_y = y0 + LH + L2 + OH_T + args.slot_rear_gap
    while st[-1][1] < goal_y:
        st += simulate(*st[-1], [(DT, 0.0)], +1)[1:]
    slot_x = st[-1][0]
    return st, slot_x, y0, "forward"


def reverse_scenario(args):
    # Forward exit: start parked facing -y, drive out, turn left to +x; then reverse in time.
    start = (0.0, 0.0, -math.pi / 2, -math.pi / 2)
    st = simulate(*start, [(args.rev_lead, 0.0)], +1)
    st += turn(*st[-1], args.rev_delta, args.ramp, 0.0)[1:]
    st += simulate(*st[-1], [(args.rev_tail, 0.0)], +1)[1:]
    aisle_y = st[-1][1]
    y0 = aisle_y + args.rev_gap
    return st[::-1], 0.0, y0, "backward"


def path_clearance(states, slot_x, y0, discs=None):
    """Exact box clearance, or the disc barrier when `discs` = (n_tractor, n_trailer, margin)."""
    if discs is not None:
        cars = parked_cars(slot_x, y0)
        return min(disc_barrier(s, cars, *discs) for s in states[::10])
    polys = [superellipse(o) for o in parked_cars(slot_x, y0)]
    return min(signed_clearance(s, polys) for s in states[::10])


def best_alternative(args, direction, slot_x, y0, discs=None):
    """Best clearance over steering levels for paths joining the same start pose and slot."""
    best = (-math.inf, None)
    for delta in np.arange(0.30, 0.551, 0.025):
        if direction == "forward":
            probe = turn(0.0, 0.0, 0.0, 0.0, delta, args.ramp, math.pi / 2)
            lead = slot_x - probe[-1][0]
            if lead < 0:
                continue
            alt = argparse.Namespace(**{**vars(args), "lead": lead, "fwd_delta": delta})
            st, _, _, _ = forward_scenario(alt)
        else:
            probe = turn(0.0, 0.0, -math.pi / 2, -math.pi / 2, delta, args.ramp, 0.0)
            ref = turn(0.0, 0.0, -math.pi / 2, -math.pi / 2, args.rev_delta, args.ramp, 0.0)
            lead = args.rev_lead + probe[-1][1] - ref[-1][1]
            tail = args.rev_tail + ref[-1][0] - probe[-1][0]
            if lead < 0 or tail < 0:
                continue
            alt = argparse.Namespace(**{**vars(args), "rev_lead": lead, "rev_delta": delta, "rev_tail": tail})
            st, _, _, _ = reverse_scenario(alt)
        c = path_clearance(st, slot_x, y0, discs)
        if c > best[0]:
            best = (c, round(float(delta), 2))
    return best


def pedestrian(states, frac, speed, offset, t_cross, direction):
    """Pedestrian walking along the aisle offset from the path point at fraction `frac`."""
    i = int(frac * (len(states) - 1))
    x, y = states[i][0], states[i][1] + offset
    motion = [[0.0, x - direction * speed * t_cross, y], [2 * t_cross, x + direction * speed * t_cross, y]]
    return {"name": "pedestrian", "cx": motion[0][1], "cy": y, "ax": 0.5, "ay": 0.5, "theta": 0.0, "exponent": 2,
            "dynamic": True, "motion": motion}


def write(name, states, slot_x, y0, direction, out_dir, ped, max_time, spacing):
    wps = resample(states, spacing)
    obstacles = parked_cars(slot_x, y0) + [ped]
    polys = [superellipse(o) for o in obstacles[:2]]
    clear = [signed_clearance(s, polys) for s in wps]
    csv = out_dir / f"{name}_path.csv"
    with open(csv, "w") as f:
        f.write("x,y,theta1,theta2,direction\n")
        for x, y, t1, t2 in wps:
            f.write(f"{x:.6f},{y:.6f},{t1:.6f},{t2:.6f},{'forward' if direction == 'forward' else 'reverse'}\n")
    x0 = wps[0]
    end = wps[-1]
    doc = {
        "name": name,
        "direction": direction,
        "geometry": {"l1": L1, "l2": L2, "lh": LH, "w_tractor": W1, "w_trailer": W2,
                     "tractor_overhang_front": OH_F, "tractor_overhang_rear": OH_R, "trailer_overhang_rear": OH_T},
        "initial_state": {"px": round(x0[0], 6), "py": round(x0[1], 6), "v": 0.0, "a": 0.0,
                          "theta1": round(x0[2], 6), "theta2": round(x0[3], 6), "delta": 0.0},
        "goal": {"x": round(end[0], 6), "y": round(end[1], 6), "theta1": round(end[2], 6),
                 "theta2": round(end[3], 6), "position_tol": 0.3, "heading_tol": 0.1, "speed_tol": 0.05},
        "obstacles": obstacles,
        "reference": {"file": csv.name},
        "max_episode_time": max_time,
    }
    with open(out_dir / f"{name}.json", "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    length = sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(wps, wps[1:]))
    print(f"{name}: {len(wps)} waypoints, length {length:.2f} m, reference min clearance {min(clear):.3f} m, "
          f"goal ({end[0]:.2f}, {end[1]:.2f}, {end[2]:.3f}, {end[3]:.3f})")


def report(args, st, direction, slot_x, y0):
    discs = (int(args.discs[0]), int(args.discs[1]), args.discs[2])
    print("  reference disc barrier: %.3f" % path_clearance(st, slot_x, y0, discs))
    print("  best alternative, box clearance (m, delta):", best_alternative(args, direction, slot_x, y0))
    print("  best alternative, disc barrier (value, delta):", best_alternative(args, direction, slot_x, y0, discs))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent / "data" / "scenarios"))
    ap.add_argument("--spacing", type=float, default=0.5)
    ap.add_argument("--lead", type=float, default=2.0)
    ap.add_argument("--ramp", type=float, default=1.0)
    ap.add_argument("--fwd-gap", type=float, default=9.0,
                    help="distance between the aisle centerline and the slot mouth, forward case [m]")
    ap.add_argument("--rev-gap", type=float, default=6.0, help="same for the backward case [m]")
    ap.add_argument("--fwd-delta", type=float, default=0.35)
    ap.add_argument("--rev-lead", type=float, default=3.0)
    ap.add_argument("--rev-delta", type=float, default=0.35)
    ap.add_argument("--rev-tail", type=float, default=3.0)
    ap.add_argument("--slot-rear-gap", type=float, default=0.5)
    ap.add_argument("--check", action="store_true", help="report the best collision-free alternative")
    ap.add_argument("--discs", type=float, nargs=3, default=(7, 6, 0.07), metavar=("NT", "NR", "MARGIN"),
                    help="disc layout for the barrier-model check")
    ap.add_argument("--max-time", type=float, default=30.0)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    st, sx, y0, d = forward_scenario(args)
    write("forward_parking", st, sx, y0, d, out, pedestrian(st, 0.15, 0.6, 4.5, 6.0, -1), args.max_time,
          args.spacing)
    if args.check:
        report(args, st, d, sx, y0)
    st, sx, y0, d = reverse_scenario(args)
    write("backward_parking", st, sx, y0, d, out, pedestrian(st, 0.15, 0.6, -4.5, 6.0, +1), args.max_time,
          args.spacing)
    if args.check:
        report(args, st, d, sx, y0)


if __name__ == "__main__":
    main()
