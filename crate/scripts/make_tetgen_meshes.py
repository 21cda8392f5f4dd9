#!/usr/bin/env python3
"""Regenerate the TetGen-format unit-cube meshes under meshes/.

Requires the `tetgen` and `scipy` Python packages. The committed files are
what the test suites read; rerunning this script may produce different
(but equally valid) meshes if the upstream libraries change.

    python3 scripts/make_tetgen_meshes.py
"""
import os

import numpy as np
import tetgen
from scipy.spatial import Delaunay

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "meshes")

# side markers: 1 z=0, 2 z=1, 3 y=0, 4 y=1, 5 x=0, 6 x=1
def side_marker(p, tol=1e-12):
    x, y, z = p
    if abs(z) < tol:
        return 1
    if abs(z - 1) < tol:
        return 2
    if abs(y) < tol:
        return 3
    if abs(y - 1) < tol:
        return 4
    if abs(x) < tol:
        return 5
    if abs(x - 1) < tol:
        return 6
    return 0


def write_tetgen(prefix, nodes, tets, faces, face_markers, first=1):
    with open(prefix + ".node", "w") as f:
        f.write("# unit cube, generated by make_tetgen_meshes.py\n")
        f.write(f"{len(nodes)} 3 0 0\n")
        for i, p in enumerate(nodes):
            f.write(f"{i + first} {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
    with open(prefix + ".ele", "w") as f:
        f.write(f"{len(tets)} 4 0\n")
        for i, t in enumerate(tets):
            f.write(f"{i + first} " + " ".join(str(v + first) for v in t) + "\n")
    with open(prefix + ".face", "w") as f:
        f.write(f"{len(faces)} 1\n")
        for i, (t, m) in enumerate(zip(faces, face_markers)):
            f.write(f"{i + first} " + " ".join(str(v + first) for v in t) + f" {m}\n")


def cube_plc():
    pts = np.array([[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)])
    idx = lambda x, y, z: x * 4 + y * 2 + z
    quads = {
        1: [idx(0, 0, 0), idx(1, 0, 0), idx(1, 1, 0), idx(0, 1, 0)],
        2: [idx(0, 0, 1), idx(1, 0, 1), idx(1, 1, 1), idx(0, 1, 1)],
        3: [idx(0, 0, 0), idx(1, 0, 0), idx(1, 0, 1), idx(0, 0, 1)],
        4: [idx(0, 1, 0), idx(1, 1, 0), idx(1, 1, 1), idx(0, 1, 1)],
        5: [idx(0, 0, 0), idx(0, 1, 0), idx(0, 1, 1), idx(0, 0, 1)],
        6: [idx(1, 0, 0), idx(1, 1, 0), idx(1, 1, 1), idx(1, 0, 1)],
    }
    tris, marks = [], []
    for m, q in quads.items():
        tris += [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
        marks += [m, m]
    return pts, np.array(tris, dtype=np.int32), np.array(marks, dtype=np.int32)


def quality_cube(max_volume):
    pts, tris, marks = cube_plc()
    tg = tetgen.TetGen(pts, tris, marks)
    tg.tetrahedralize(switches=f"pq1.2a{max_volume}feQ")
    # -f writes every face; interior faces carry marker 0
    return tg.node, tg.elem, tg.trifaces, tg.triface_markers


def delaunay_cube_100(seed=7):
    rng = np.random.default_rng(seed)
    corners = np.array([[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)])
    interior = rng.uniform(0.05, 0.95, size=(92, 3))
    pts = np.vstack([corners, interior])
    rng.shuffle(pts)
    tri = Delaunay(pts, qhull_options="Qt Qbb Qc Qz")
    tets = tri.simplices
    vols = np.abs(np.einsum("ij,ij->i", np.cross(pts[tets[:, 1]] - pts[tets[:, 0]],
                                                  pts[tets[:, 2]] - pts[tets[:, 0]]),
                            pts[tets[:, 3]] - pts[tets[:, 0]])) / 6
    tets = tets[vols > 1e-12]
    count = {}
    for t in tets:
        for skip in range(4):
            key = tuple(sorted(v for k, v in enumerate(t) if k != skip))
            count[key] = count.get(key, 0) + 1
    faces = [k for k, c in count.items() if c == 1]
    markers = []
    for fc in faces:
        c = pts[list(fc)].mean(axis=0)
        markers.append(side_marker(c, 1e-9))
    return pts, tets, np.array(faces), markers


def jittered_lattice_cube(n, seed, boundary_jitter=0.1, interior_jitter=0.2):
    """Delaunay mesh of a jittered (n+1)^3 lattice. Boundary nodes only move
    within their side (or along their edge), so the cube is reproduced
    exactly and, for these jitter amounts, every face has a strictly
    positive circumcentric dual edge."""
    rng = np.random.default_rng(seed)
    h = 1.0 / n
    pts = []
    for i in range(n + 1):
        for j in range(n + 1):
            for k in range(n + 1):
                p = np.array([i, j, k], dtype=float) * h
                on_side = [c in (0, n) for c in (i, j, k)]
                amount = boundary_jitter if any(on_side) else interior_jitter
                for ax in range(3):
                    if not on_side[ax]:
                        p[ax] += rng.uniform(-1, 1) * h * amount
                pts.append(p)
    pts = np.array(pts)
    tets = Delaunay(pts).simplices
    count = {}
    for t in tets:
        for skip in range(4):
            key = tuple(sorted(v for k, v in enumerate(t) if k != skip))
            count[key] = count.get(key, 0) + 1
    faces = [k for k, c in count.items() if c == 1]
    markers = [side_marker(pts[list(fc)].mean(axis=0), 1e-9) for fc in faces]
    assert all(m != 0 for m in markers)
    return pts, tets, np.array(faces), markers


def main():
    os.makedirs(OUT, exist_ok=True)
    for vol in ["0.004", "0.002", "0.001", "0.0005", "0.00025"]:
        nodes, tets, faces, markers = quality_cube(vol)
        name = os.path.join(OUT, f"cube_a{vol.replace('.', 'p')}")
        write_tetgen(name, nodes, tets, faces, markers, first=1)
        print(name, len(nodes), len(tets), len(faces))
    pts, tets, faces, markers = delaunay_cube_100()
    name = os.path.join(OUT, "cube_v100")
    write_tetgen(name, pts, tets, faces, markers, first=0)
    print(name, len(pts), len(tets), len(faces))
    for n, seed in [(5, 0), (13, 0)]:
        pts, tets, faces, markers = jittered_lattice_cube(n, seed)
        name = os.path.join(OUT, f"cube_jl{n}")
        write_tetgen(name, pts, tets, faces, markers, first=1)
        print(name, len(pts), len(tets), len(faces))


if __name__ == "__main__":
    main()
