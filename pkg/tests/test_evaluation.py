from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cctext import evaluation as ev
from cctext.errors import DataError
from oracles import enum_metrics

R = ev.Rect


@st.composite
def rects(draw, grid=20):
    x = draw(st.integers(0, grid - 1))
    y = draw(st.integers(0, grid - 1))
    return R(x, y, draw(st.integers(1, grid - x)), draw(st.integers(1, grid - y)))


rect_lists = st.lists(rects(), max_size=4)


def test_intersection_examples():
    a = R(0, 0, 10, 10)
    assert ev.intersection_area(a, a) == 100
    assert ev.intersection_area(a, R(10, 0, 5, 5)) == 0
    assert ev.intersection_area(a, R(5, 0, 10, 10)) == 50


def test_area_ratios():
    g = R(0, 0, 10, 10)
    assert ev.area_recall(g, g) == ev.area_precision(g, g) == 1.0
    half = R(0, 0, 5, 10)
    assert ev.area_recall(g, half) == 0.5 and ev.area_precision(g, half) == 1.0
    far = R(50, 50, 3, 3)
    assert ev.area_recall(g, far) == ev.area_precision(g, far) == 0.0


def test_best_match_examples():
    r = R(0, 0, 10, 10)
    assert ev.best_match(r, [R(30, 30, 2, 2), r]) == 1.0
    assert ev.best_match(r, []) == 0.0
    assert ev.best_match(r, [R(5, 0, 10, 10)]) == 0.5
    assert ev.best_match(r, [r], scale=1.0) == 0.5


def test_icdar_examples():
    gt = [R(0, 0, 10, 10), R(20, 0, 5, 5)]
    assert ev.icdar_metrics(gt, list(gt)) == (1.0, 1.0)
    halves = [R(0, 0, 5, 10), R(5, 0, 5, 10)]
    p, r = ev.icdar_metrics(gt[:1], halves)
    # each half scores 2 * 50 / (100 + 50) = 2/3 against the ground truth
    assert p == pytest.approx(2 / 3, abs=0) and r == pytest.approx(2 / 3, abs=0)
    assert ev.icdar_metrics(gt, []) == (1.0, 0.0)
    assert ev.icdar_metrics([], gt) == (0.0, 1.0)
    assert ev.icdar_metrics([], []) == (1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(rect_lists, rect_lists)
def test_matches_pixel_enumeration(gt, det):
    p, r = enum_metrics(gt, det)
    assert ev.icdar_metrics(gt, det) == (float(p), float(r))


@given(rect_lists, rect_lists, st.randoms())
def test_permutation_invariance(gt, det, rnd):
    g2, d2 = list(gt), list(det)
    rnd.shuffle(g2)
    rnd.shuffle(d2)
    assert ev.icdar_metrics(gt, det) == ev.icdar_metrics(g2, d2)


@given(rect_lists, rect_lists, st.integers(-50, 50), st.integers(-50, 50))
def test_translation_invariance(gt, det, dx, dy):
    moved = ev.icdar_metrics([g.translated(dx, dy) for g in gt], [d.translated(dx, dy) for d in det])
    assert moved == ev.icdar_metrics(gt, det)


@given(rect_lists, rect_lists)
def test_metrics_lie_in_unit_interval(gt, det):
    p, r = ev.icdar_metrics(gt, det)
    assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0


@given(rects(), st.lists(rects(), max_size=5))
def test_perfect_score_iff_identical(r, cands):
    assert (ev.best_match(r, cands) == 1.0) == (r in cands)


def test_unscaled_override_halves_scores():
    gt, det = [R(0, 0, 4, 4)], [R(0, 0, 4, 4), R(2, 2, 4, 4)]
    p2, r2 = ev.icdar_metrics(gt, det)
    p1, r1 = ev.icdar_metrics(gt, det, scale=1.0)
    assert (p1, r1) == (p2 / 2, r2 / 2)
    assert (p1, r1) == tuple(float(v) for v in enum_metrics(gt, det, Fraction(1)))


def test_aggregate_skips_empty_images_and_sorts():
    rep = ev.evaluate_lists({
        "b": ([R(0, 0, 4, 4)], [R(0, 0, 4, 4)]),
        "a": ([R(0, 0, 4, 4)], []),
        "c": ([], []),
    })
    assert [s.image_id for s in rep.per_image] == ["a", "b", "c"]
    assert rep.precision == 1.0 and rep.recall == 0.5
    assert "MEAN" in rep.to_table()
    assert ev.aggregate([]).precision == 1.0


def test_rect_rejects_empty_sides():
    with pytest.raises(ValueError):
        R(0, 0, 0, 3)


def test_ground_truth_parsing(tmp_path):
    p = tmp_path / "gt.txt"
    p.write_text("# header\n\n0,0,9,9\n 3, 4, 5, 6 ,hello, world\n")
    assert ev.parse_ground_truth(p) == [R(0, 0, 10, 10), R(3, 4, 3, 3)]
    p.write_text("# only comments\n")
    assert ev.parse_ground_truth(p) == []


@pytest.mark.parametrize("line", ["5,5,4,9", "1,2,3", "a,b,c,d"])
def test_ground_truth_errors_name_the_line(tmp_path, line):
    p = tmp_path / "gt.txt"
    p.write_text(f"0,0,1,1\n{line}\n")
    with pytest.raises(DataError, match=":2:"):
        ev.parse_ground_truth(p)


def test_ground_truth_roundtrip(tmp_path):
    rs = [R(1, 2, 3, 4), R(10, 10, 1, 1)]
    p = tmp_path / "gt.txt"
    p.write_text(ev.format_ground_truth(rs, ["ab", "c"]))
    assert ev.parse_ground_truth(p) == rs
    with pytest.raises(DataError):
        ev.parse_ground_truth(tmp_path / "missing.txt")
