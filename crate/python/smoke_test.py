"""Quick end-to-end check of the Python bindings.

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""
import math
import os
import tempfile

import gsrelight as gs


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    c = [0.0] * 16
    c[0] = 1.0 / (2.0 * math.sqrt(math.pi))
    assert close(gs.sh_eval(c, (0.3, 0.5, -0.2)), 1.0 / (4.0 * math.pi))
    assert len(gs.sh_basis((0.0, 0.0, 1.0))) == 16
    proj = gs.sh_project(lambda x, y, z: 1.0, 64, 32)
    assert close(proj[0], 2.0 * math.sqrt(math.pi), 1e-2)

    f = gs.brdf((0.0, 0.0, 1.0), (0.0, 0.0, 1.0), (0.0, 0.0, 1.0), (0.5, 0.5, 0.5), 0.5, True)
    assert close(f[0], 0.5 / math.pi)

    scene = gs.Scene.two_spheres()
    cam = gs.Camera.demo(64, 48)
    env = gs.EnvMap.sky(32, 16).prefilter(16.0, 32, 16)
    baked = scene.bake_visibility(64)
    ao = baked.ambient_occlusion()
    assert len(ao) == len(scene) and all(0.0 <= a <= 1.0 for a in ao)

    img, alpha = gs.render(baked, cam, "pbr", env, samples=8)
    assert (img.width, img.height, img.channels) == (64, 48, 3)
    assert max(alpha.data()) > 0.5
    assert gs.psnr(img, img) == 99.0
    assert gs.l1(img, img) == 0.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "out.pfm")
        img.save(path)
        back = gs.Image.load(path)
        assert gs.l1(back, img) < 1e-6
        baked.save(os.path.join(d, "s.gsc"))
        assert len(gs.Scene.load(os.path.join(d, "s.gsc"))) == len(scene)

    try:
        gs.Scene.parse("not a scene")
    except ValueError:
        pass
    else:
        raise AssertionError("bad scene text was accepted")
    print("python smoke test ok")


if __name__ == "__main__":
    main()
