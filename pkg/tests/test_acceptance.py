"""The fourteen acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are
printed together at the end of the pytest run.
"""

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hilbertlab.cli import run_config
from hilbertlab.config import parse_config
from hilbertlab.domains import Ellipsoid, HalfspacePolytope, PNormBall
from hilbertlab.experiments import (
    Context,
    busemann_audit,
    crampon_audit,
    metric_axioms,
    run_experiment,
    shadow_sandwich,
    translation_audit,
)
from hilbertlab.groups import orbit_ball
from hilbertlab.presets import group_preset

pytestmark = pytest.mark.slow

DOMAINS = {
    "ellipsoid": Ellipsoid.unit_ball(2),
    "pball-4": PNormBall(4.0),
    "simplex": HalfspacePolytope.simplex(2),
}
SEED = 20240611


def record(n: int, title: str, ok: bool, detail: str):
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"


def rng(salt: int):
    return np.random.default_rng([SEED, salt])


@pytest.fixture(scope="module")
def schottky():
    S = group_preset("schottky-2")
    return Context(scenario=S, seed=SEED)


@pytest.fixture(scope="module")
def surface():
    return Context(scenario=group_preset("surface-genus-2", budget=10_000_000), seed=SEED)


def test_criterion_01_klein_model():
    D = DOMAINS["ellipsoid"]
    res = metric_axioms(D, rng(1), n_pairs=10_000, n_triples=10, n_maps=1)
    err = res.numbers["klein_max_err"]
    ok = err <= 1e-9
    record(1, "Klein-model distance on 1e4 pairs", ok, f"max error {err:.2e} <= 1e-9")
    assert ok


def test_criterion_02_metric_axioms():
    parts, ok = [], True
    for name, D in DOMAINS.items():
        res = metric_axioms(D, rng(2), n_pairs=10_000, n_triples=10_000, n_maps=10, klein=False)
        n = res.numbers
        good = (n["symmetry_max_err"] <= 1e-12 and n["triangle_min_slack"] >= -1e-10
                and n["invariance_max_err"] <= 1e-9)
        ok &= good
        parts.append(f"{name}: sym {n['symmetry_max_err']:.1e}, tri {n['triangle_min_slack']:.1e}, "
                     f"inv {n['invariance_max_err']:.1e}")
    record(2, "metric axioms and projective invariance", ok, "; ".join(parts))
    assert ok


def test_criterion_03_crampon():
    parts, ok = [], True
    for name, D in DOMAINS.items():
        res = crampon_audit(D, rng(3), n_pairs=100, T=5.0)
        ok &= res.numbers["min_slack"] >= -1e-9
        parts.append(f"{name} {res.numbers['min_slack']:.1e}")
    record(3, "Crampon inequality, 100 chord pairs, T=5", ok, "min slack " + ", ".join(parts))
    assert ok


def test_criterion_04_busemann_identities():
    parts, ok = [], True
    for name in ("ellipsoid", "pball-4"):
        res = busemann_audit(DOMAINS[name], rng(4), n=1000)
        ok &= res.verdict == "pass"
        n = res.numbers
        extra = f", closed form {n['closed_form_max_err']:.1e}" if "closed_form_max_err" in n else ""
        parts.append(f"{name}: cocycle {n['cocycle_max']:.1e}, horofoliation {n['horofoliation_max']:.1e}, "
                     f"reported error {n['max_reported_error']:.1e}{extra}")
    record(4, "Busemann cocycle and horofoliation, 1e3 configs", ok, "; ".join(parts))
    assert ok


def test_criterion_05_shadow_sandwich(schottky):
    B = schottky.ball(10.0)
    res = shadow_sandwich(schottky.scenario, B, rng(5), radii=(2.0, 3.0), band=(4.0, 10.0))
    n = res.numbers
    ok = n["violations"] == 0 and n["shadows"] > 0
    record(5, "shadow sandwich, Schottky, r in {2,3}, d in [4,10]", ok,
           f"{n['violations']} violations over {n['shadows']} shadows")
    assert ok


def test_criterion_06_shadow_lemma(schottky):
    res = run_experiment(schottky, "shadow-audit", {"radius": 12.0, "radii": [2.0, 3.0]})
    n = res.numbers
    ok = n["ratio_r2"] <= 1e3 and n["ratio_r3"] <= 1e3 and n["ratio_change"] < 2.0
    record(6, "Sullivan shadow lemma audit", ok,
           f"max/min {n['ratio_r2']:.3g} (r=2), {n['ratio_r3']:.3g} (r=3), change {n['ratio_change']:.3f}x")
    assert ok


def test_criterion_07_parabolic_exponents():
    r1 = run_experiment(Context(scenario=group_preset("parabolic-rank-1")), "critical-exponent", {"radius": 14.0})
    r2 = run_experiment(Context(scenario=group_preset("parabolic-rank-2")), "critical-exponent", {"radius": 10.0})
    d1, d2 = r1.numbers["delta_hat"], r2.numbers["delta_hat"]
    ok = abs(d1 - 0.5) <= 0.05 and abs(d2 - 1.0) <= 0.1
    record(7, "parabolic critical exponents", ok, f"rank 1: {d1:.4f} (R=14), rank 2: {d2:.4f} (R=10)")
    assert ok


def test_criterion_08_lattice_exponent(surface):
    res = run_experiment(surface, "critical-exponent", {"radius": 12.0})
    d = res.numbers["delta_hat"]
    ok = abs(d - 1.0) <= 0.1
    record(8, "surface group exponent", ok, f"delta_hat {d:.4f} at R=12, {res.numbers['ball_size']} elements")
    assert ok


def test_criterion_09_translation_lengths():
    res = translation_audit(group_preset("schottky-2"), rng(9), n_elements=20, Ns=(2, 4, 8, 12))
    c = res.checks
    ok = c["monotone"] and c["power"] and c["conjugation"]
    record(9, "translation lengths", ok,
           f"monotone {c['monotone']}, power error {res.numbers['power_max_err']:.1e}, "
           f"conjugation error {res.numbers['conjugation_max_err']:.1e}")
    assert ok


def test_criterion_10_orbit_count(surface):
    res = run_experiment(surface, "orbit-count", {"radii": [8, 9, 10, 11, 12]})
    drift = res.numbers["drift"]
    ok = drift < 0.25
    record(10, "orbit-count plateau, surface group", ok, f"drift {drift:.3f} < 0.25")
    assert ok


def test_criterion_11_closed_geodesics(schottky):
    res = run_experiment(schottky, "closed-geodesics", {"max_len": 14})
    n = res.numbers
    ok = res.verdict == "pass"
    record(11, "closed-geodesic counting, word length <= 14", ok,
           f"top quartile mean {n['top_quartile_mean']:.3f}, bottom {n['bottom_quartile_mean']:.3f}, "
           f"{n['classes']} classes")
    assert ok


def test_criterion_12_equidistribution(schottky):
    res = run_experiment(schottky, "equidistribution", {"radii": [8, 9, 10, 11, 12]})
    errs = [v for k, v in res.numbers.items() if k.startswith("rel_err")]
    ok = len(errs) == 2 and max(errs) <= 0.3
    record(12, "equidistribution cross-ratios at t=12", ok, "relative errors " + ", ".join(f"{e:.3f}" for e in errs))
    assert ok


def test_criterion_13_ps_measure(schottky):
    res = run_experiment(schottky, "ps-measure", {"radius": 12.0})
    n = res.numbers
    ok = n["conformal_exact_err"] <= 1e-9 and n["equivariance_err"] <= 1e-9 and n["conformal_far_err"] <= 0.05
    record(13, "ps_density conformality and equivariance", ok,
           f"exact {n['conformal_exact_err']:.1e}, equivariance {n['equivariance_err']:.1e}, "
           f"far-atom {n['conformal_far_err']:.2e}")
    assert ok


DETERMINISM_CONFIG = """\
seed: 11
group: {preset: schottky-2}
experiments:
  - {name: orbit-ball, radius: 8}
  - {name: critical-exponent, radius: 10}
  - {name: translation-lengths}
  - {name: ps-measure, radius: 10}
  - {name: shadow-audit, radius: 10}
  - {name: closed-geodesics, max_len: 8, delta_radius: 10}
  - {name: orbit-count, radii: [6, 7, 8, 9, 10]}
  - {name: equidistribution, radii: [8, 9, 10]}
  - {name: shadow-sandwich, radius: 8, band: [4, 8], max_shadows: 50}
"""


def test_criterion_14_determinism(tmp_path):
    cfg = parse_config(DETERMINISM_CONFIG)
    run_config(cfg, tmp_path / "t1", threads=1, stream=open("/dev/null", "w"))
    run_config(cfg, tmp_path / "t8", threads=8, stream=open("/dev/null", "w"))
    names = sorted(p.name for p in (tmp_path / "t1").glob("*.csv"))
    same = [(tmp_path / "t1" / n).read_bytes() == (tmp_path / "t8" / n).read_bytes() for n in names]
    ok = bool(names) and all(same) and names == sorted(p.name for p in (tmp_path / "t8").glob("*.csv"))
    record(14, "CSV bytes, 1 vs 8 threads", ok, f"{sum(same)}/{len(names)} files identical")
    assert ok
