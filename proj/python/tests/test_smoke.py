"""End-to-end smoke tests for the python bindings.

These exercise each pipeline stage once on tiny inputs; the C++ test suite
carries the numerical coverage.
"""

import math

import numpy as np
import pytest

import nlmvs


def make_camera(size=32, dist=3.0):
    """Camera on -z looking at the origin, x right, y down, z forward."""
    cam = nlmvs.Camera()
    cam.fx = cam.fy = float(size)
    cam.cx = cam.cy = size / 2.0
    cam.width = cam.height = size
    cam.R = nlmvs.Mat3(np.array([[-1.0, 0, 0], [0, -1.0, 0], [0, 0, 1.0]]))
    cam.t = nlmvs.Vec3(0.0, 0.0, dist)
    return cam


def render_sphere(size=32, dist=3.0, env_seed=7):
    cam = make_camera(size, dist)
    env = nlmvs.make_procedural_env(16, 8, env_seed)
    brdf = nlmvs.LambertianBrdf(nlmvs.Rgb(0.5, 0.4, 0.3))
    shape = nlmvs.Sphere(nlmvs.Vec3(0.0, 0.0, 0.0), 1.0)
    return nlmvs.render_view(shape, brdf, cam, env), cam, env, brdf


def test_import_and_version():
    assert nlmvs.__version__
    assert nlmvs.worker_count() >= 0


def test_vector_matrix_basics():
    v = nlmvs.normalized(nlmvs.Vec3(3.0, 0.0, 4.0))
    assert nlmvs.norm(v) == pytest.approx(1.0)
    rot = nlmvs.Mat3.rotation_axis_angle((0, 1, 0), math.pi / 2)
    assert rot.is_rotation()
    np.testing.assert_allclose((rot @ rot.transposed()).numpy(), np.eye(3), atol=1e-12)
    # sequences convert implicitly wherever a Vec3 is expected
    assert nlmvs.angle_deg((1, 0, 0), (0, 1, 0)) == pytest.approx(90.0)


def test_pfm_roundtrip_is_bitwise(tmp_path):
    rng = np.random.default_rng(3)
    arr = rng.random((6, 9, 3), dtype=np.float32)
    img = nlmvs.HdrImage.from_numpy(arr)
    path = str(tmp_path / "img.pfm")
    nlmvs.write_pfm(img, path)
    back = nlmvs.read_pfm(path)
    np.testing.assert_array_equal(back.numpy(), arr)


def test_mask_roundtrip(tmp_path):
    mask = nlmvs.Mask.from_numpy(np.eye(5, dtype=bool))
    path = str(tmp_path / "mask.pgm")
    nlmvs.write_pgm_mask(mask, path)
    np.testing.assert_array_equal(nlmvs.read_pgm_mask(path).numpy(), np.eye(5, dtype=bool))


def test_constant_env_lambertian_irradiance_matches_albedo():
    env = nlmvs.EnvironmentMap.constant(32, 16, nlmvs.Rgb(1.0))
    brdf = nlmvs.LambertianBrdf(nlmvs.Rgb(0.6, 0.5, 0.4))
    out = nlmvs.render_irradiance(env, brdf, (0, 0, 1), (0, 0, 1))
    for got, want in zip(out, (0.6, 0.5, 0.4)):
        assert got == pytest.approx(want, rel=5e-3)


def test_render_view_geometry():
    result, cam, _, _ = render_sphere()
    assert result.mask.count() > 50
    # the center pixel sees the sphere's near pole at depth dist - radius
    cx, cy = int(cam.cx), int(cam.cy)
    depth = result.depth.numpy()
    assert depth[cy, cx] == pytest.approx(2.0, abs=1e-3)
    hit = cam.backproject_world(cx + 0.5, cy + 0.5, float(depth[cy, cx]))
    assert nlmvs.norm(hit) == pytest.approx(1.0, abs=1e-2)


def test_normal_search_recovers_center_normal():
    result, cam, env, brdf = render_sphere()
    params = nlmvs.SfsParams()
    params.levels = 3
    samples = nlmvs.coarse_to_fine_search(result.image, result.mask, env, brdf, cam, params)
    field = nlmvs.aggregate_density(samples, result.image, nlmvs.AggregateParams())
    cx, cy = int(cam.cx), int(cam.cy)
    best = max(field.at(cx, cy), key=lambda s: s.prob)
    n_world = result.normal.rgb(cx, cy)
    n_cam = cam.R * nlmvs.Vec3(n_world.r, n_world.g, n_world.b)
    n_view = nlmvs.Vec3(n_cam.x, -n_cam.y, -n_cam.z)
    assert nlmvs.angle_deg(best.dir, n_view) < 10.0


def test_two_view_depth_decode():
    size, dist = 24, 3.0
    env = nlmvs.make_procedural_env(16, 8, 11)
    brdf = nlmvs.LambertianBrdf(nlmvs.Rgb(0.5, 0.4, 0.3))
    shape = nlmvs.Sphere(nlmvs.Vec3(0.0, 0.0, 0.0), 1.0)
    params = nlmvs.SfsParams()
    params.levels = 3

    views = []
    for az in (0.0, 0.35):
        rot = nlmvs.Mat3.rotation_axis_angle((0, 1, 0), az)
        cam = make_camera(size, dist)
        cam.R = nlmvs.Mat3(cam.R.numpy() @ rot.transposed().numpy())
        r = nlmvs.render_view(shape, brdf, cam, env)
        samples = nlmvs.coarse_to_fine_search(r.image, r.mask, env, brdf, cam, params)
        v = nlmvs.ViewData()
        v.image, v.mask, v.camera = r.image, r.mask, cam
        v.density = nlmvs.aggregate_density(samples, r.image, nlmvs.AggregateParams())
        views.append((v, r))

    ref, ref_render = views[0]
    src, _ = views[1]
    src.density = nlmvs.rotate_densities(
        src.density, nlmvs.view_frame_rotation(ref.camera, src.camera)
    )
    rng = nlmvs.DepthHypothesisRange(dist - 1.2, dist + 1.2, 24)
    vol = nlmvs.build_cost_volume(ref, [src], rng, nlmvs.CostVolumeParams())
    vol = nlmvs.filter_cost_volume(vol, ref.image, nlmvs.FilterParams())
    maps = nlmvs.decode_depth_normal(vol)

    est = maps.depth.numpy()
    gt = ref_render.depth.numpy()
    joint = maps.mask.numpy() & ref_render.mask.numpy()
    assert joint.sum() > 30
    mae = np.abs(est[joint] - gt[joint]).mean()
    assert mae < 0.2  # scene units; sphere radius is 1
    # probabilities sum to one along the depth axis wherever valid
    prob = vol.prob()
    sums = prob.sum(axis=0)[maps.mask.numpy()]
    np.testing.assert_allclose(sums, 1.0, atol=1e-4)


def test_reflectance_objective_prefers_truth():
    result, cam, env, _ = render_sphere()
    view = nlmvs.ReflectanceView()
    view.image = result.image
    maps = nlmvs.DepthNormalMaps()
    maps.depth, maps.mask = result.depth, result.mask
    # camera-frame normals, as the geometry stage produces them
    n = result.normal.numpy().copy()
    rot = cam.R.numpy()
    maps.normal = nlmvs.HdrImage.from_numpy(
        np.ascontiguousarray(n @ rot.T, dtype=np.float32)
    )
    view.maps = maps
    view.camera = cam

    obj = nlmvs.ObjectiveParams()
    truth = nlmvs.reflectance_objective(
        nlmvs.BrdfParams.lambertian(nlmvs.Rgb(0.5, 0.4, 0.3)), [view], env, obj
    )
    wrong = nlmvs.reflectance_objective(
        nlmvs.BrdfParams.lambertian(nlmvs.Rgb(0.1, 0.7, 0.7)), [view], env, obj
    )
    assert truth < wrong


def test_fusion_and_ply_roundtrip(tmp_path):
    result, cam, _, _ = render_sphere()
    maps = nlmvs.DepthNormalMaps()
    maps.depth, maps.mask = result.depth, result.mask
    n = result.normal.numpy().copy()
    maps.normal = nlmvs.HdrImage.from_numpy(
        np.ascontiguousarray(n @ cam.R.numpy().T, dtype=np.float32)
    )
    cloud = nlmvs.backproject(maps, cam)
    assert len(cloud) == result.mask.count()
    radii = np.linalg.norm(nlmvs.cloud_positions(cloud), axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=2e-2)

    merged = nlmvs.merge_clouds([cloud], 0.05)
    assert 0 < len(merged) <= len(cloud)
    path = str(tmp_path / "cloud.ply")
    nlmvs.write_ply(merged, path)
    back = nlmvs.read_ply(path)
    np.testing.assert_allclose(
        nlmvs.cloud_positions(back), nlmvs.cloud_positions(merged), atol=1e-6
    )


def test_metrics_identity():
    result, cam, _, _ = render_sphere()
    diag = 2.0 * math.sqrt(3.0)
    assert nlmvs.depth_error(result.depth, result.depth, result.mask, diag) == 0.0
    assert nlmvs.normal_error(result.normal, result.normal, result.mask) == pytest.approx(
        0.0, abs=1e-4
    )
    assert nlmvs.depth_below(result.depth, result.depth, result.mask, diag, 2.0) == 1.0


def test_brdf_params_roundtrip(tmp_path):
    params = nlmvs.BrdfParams.microfacet(
        nlmvs.Rgb(0.2, 0.3, 0.4), nlmvs.Rgb(0.5, 0.5, 0.5), 0.25
    )
    path = str(tmp_path / "brdf.txt")
    params.save(path)
    back = nlmvs.BrdfParams.load(path)
    assert back.variant == nlmvs.BrdfParams.Variant.Microfacet
    assert back.values == pytest.approx(params.values)
    brdf = back.make_brdf()
    assert brdf.kind == nlmvs.Brdf.Kind.Microfacet


def test_render_is_deterministic_across_worker_counts():
    nlmvs.set_worker_count(1)
    a, _, _, _ = render_sphere()
    nlmvs.set_worker_count(0)
    b, _, _, _ = render_sphere()
    np.testing.assert_array_equal(a.image.numpy(), b.image.numpy())
    np.testing.assert_array_equal(a.depth.numpy(), b.depth.numpy())


def test_error_type_raised():
    with pytest.raises(nlmvs.NlmvsError):
        nlmvs.read_pfm("/nonexistent/file.pfm")
