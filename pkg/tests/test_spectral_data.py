import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from solitonspheres.errors import ParameterError, SpectralParseError, StructuralError
from solitonspheres.spectral_data import (HalfIntegerLevel, ReflectionTable, SpectralData, load,
                                          mkdv_deform, save, validate)


def test_valid_examples():
    assert validate(SpectralData((0.5j,), (1.0,))).valid
    assert validate(SpectralData((0.5j, 1.5j), (2.0, 6.0))).valid


def test_imaginary_norming_on_axis_violates_r1():
    rep = validate(SpectralData((0.5j,), (1j,)))
    assert not rep.valid
    v = rep.violations[0]
    assert v.rule == "R1" and v.index == 0
    assert "requires lambda real" in v.message
    assert v.residual == pytest.approx(1.0)


def test_lower_half_plane_pole_reported():
    rep = validate(SpectralData((-0.5j,), (1.0,)))
    assert [v.rule for v in rep.violations] == ["upper-half-plane"]


def test_asymmetric_pole_set():
    rep = validate(SpectralData((0.3 + 0.5j,), (1.0,)))
    assert rep.violations[0].rule == "R1"


def test_mirror_pair_needs_conjugate_normings():
    good = SpectralData((0.4 + 0.7j, -0.4 + 0.7j), (1 + 2j, 1 - 2j))
    bad = SpectralData((0.4 + 0.7j, -0.4 + 0.7j), (1 + 2j, 1 + 2j))
    assert validate(good).valid
    assert not validate(bad).valid


def test_structural_error_is_distinct():
    with pytest.raises(StructuralError):
        SpectralData((0.5j, 1.5j), (1.0,))


def test_coincident_and_zero_normings():
    rep = validate(SpectralData((0.5j, 0.5j + 1e-12), (1.0, 2.0)))
    assert "simple-poles" in [v.rule for v in rep.violations]
    rep = validate(SpectralData((0.5j,), (0.0,)))
    assert "nonzero-norming" in [v.rule for v in rep.violations]


def test_eps_real_profiles():
    d = SpectralData((0.5j,), (1 + 1e-10j,))
    assert not validate(d).valid
    assert validate(d, 1e-8).valid


def test_half_integer_level():
    assert HalfIntegerLevel(2).kappa == 2.5j
    assert HalfIntegerLevel.from_pole(1.5j) == HalfIntegerLevel(1)
    assert HalfIntegerLevel.from_pole(1j) is None
    assert HalfIntegerLevel.from_pole(0.1 + 0.5j) is None
    with pytest.raises(ParameterError):
        HalfIntegerLevel(-1)


def test_mkdv_identity_and_one_soliton():
    d = SpectralData((0.5j,), (1.0,))
    assert mkdv_deform(d, 1, 0.0) == d
    tau = 0.73
    assert mkdv_deform(d, 1, tau).lam[0] == pytest.approx(np.exp(-tau), rel=1e-15)


def test_mkdv_bad_index():
    with pytest.raises(ParameterError):
        mkdv_deform(SpectralData((0.5j,), (1.0,)), 0, 1.0)


def test_mkdv_reflection_phase():
    k = np.array([-1.0, -0.5, 0.5, 1.0])
    r = np.array([0.1 - 0.2j, 0.3j, -0.3j, 0.1 + 0.2j])
    d = SpectralData((0.5j,), (1.0,), ReflectionTable(k, r))
    out = mkdv_deform(d, 2, 0.4)
    assert np.allclose(out.reflection.values, r * np.exp(1j * 8 * 0.4 * k))
    assert validate(out).valid


# ---------------------------------------------------------------- properties

@st.composite
def symmetric_data(draw):
    """Random valid data: axis poles with real lambda plus mirror pairs."""
    n_axis = draw(st.integers(0, 3))
    n_pair = draw(st.integers(0 if n_axis else 1, 2))
    ims = draw(st.lists(st.floats(0.1, 3.0), min_size=n_axis + n_pair, max_size=n_axis + n_pair,
                        unique=True))
    poles, lams = [], []
    for j in range(n_axis):
        poles.append(1j * ims[j])
        lams.append(draw(st.floats(0.1, 5.0)) * draw(st.sampled_from([-1, 1])))
    for j in range(n_pair):
        re = draw(st.floats(0.1, 2.0))
        lam = complex(draw(st.floats(-3, 3)), draw(st.floats(-3, 3)))
        if lam == 0:
            lam = 1.0
        im = ims[n_axis + j]
        poles += [re + 1j * im, -re + 1j * im]
        lams += [lam, lam.conjugate()]
    return SpectralData(tuple(poles), tuple(lams))


def _representable(d, m, t):
    c = 2.0 ** (2 * m - 1) * abs(t)
    return np.all(c * d.kappa.imag + np.log(np.maximum(np.abs(d.lam), 1.0)) < 700) and \
        np.all(-c * d.kappa.imag + np.log(np.abs(d.lam)) > -700)


@settings(max_examples=80, deadline=None)
@given(symmetric_data(), st.integers(1, 4), st.floats(-10, 10))
def test_deform_preserves_validity(d, m, t):
    assert validate(d).valid
    try:
        out = mkdv_deform(d, m, t)
    except ParameterError:
        # only when exp(2^(2m-1) t Im kappa) leaves double precision
        assert not _representable(d, m, t)
        return
    assert out.poles == d.poles
    assert validate(out, 1e-9).valid


@settings(max_examples=60, deadline=None)
@given(symmetric_data(), st.integers(1, 4), st.floats(-10, 10))
def test_deform_representable_range_always_succeeds(d, m, t):
    if _representable(d, m, t):
        assert validate(mkdv_deform(d, m, t), 1e-9).valid


@settings(max_examples=60, deadline=None)
@given(symmetric_data(), st.integers(1, 4), st.floats(-3, 3), st.floats(-3, 3))
def test_flow_additivity(d, m, t1, t2):
    assume(all(_representable(d, m, t) for t in (t1, t1 + t2)))
    assume(_representable(mkdv_deform(d, m, t1), m, t2))
    a = mkdv_deform(mkdv_deform(d, m, t1), m, t2).lam
    b = mkdv_deform(d, m, t1 + t2).lam
    assert np.allclose(a, b, rtol=1e-9, atol=0)


@settings(max_examples=40, deadline=None)
@given(symmetric_data())
def test_save_load_roundtrip(tmp_path_factory, d):
    p = tmp_path_factory.mktemp("spec") / "d.spec"
    save(d, p)
    assert load(p) == d


# ---------------------------------------------------------------- file I/O

def test_roundtrip_bitwise(tmp_path):
    d = SpectralData((0.5j, 1.5j), (2.0, 6.0))
    save(d, tmp_path / "n2.spec")
    e = load(tmp_path / "n2.spec")
    assert e.poles == d.poles and e.normings == d.normings


def test_negative_imaginary_pole_rejected(tmp_path):
    p = tmp_path / "bad.spec"
    p.write_text("solitonspec v1\npole 0.0 -0.5 lambda 1.0 0.0\nreflection none\n")
    with pytest.raises(SpectralParseError, match="Im kappa must be positive") as e:
        load(p)
    assert e.value.line == 2


def test_reflection_table_violating_r2(tmp_path):
    (tmp_path / "r.csv").write_text("k,re,im\n-1,0.1,0.2\n0.5,0.0,0.0\n1,0.1,0.2\n")
    (tmp_path / "d.spec").write_text("solitonspec v1\npole 0 0.5 lambda 1 0\nreflection table r.csv\n")
    d = load(tmp_path / "d.spec")
    assert not validate(d).valid


def test_reflection_roundtrip(tmp_path):
    k = np.array([-1.0, 1.0])
    d = SpectralData((0.5j,), (1.0,), ReflectionTable(k, np.array([0.1 - 0.2j, 0.1 + 0.2j])))
    save(d, tmp_path / "d.spec")
    assert load(tmp_path / "d.spec") == d


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("nonsense\n", 1),
    ("solitonspec v1\npole 0 x lambda 1 0\nreflection none\n", 2),
    ("solitonspec v1\npole 0 0.5 lambda 1 0\n", 2),
    ("solitonspec v1\nreflection none\npole 0 0.5 lambda 1 0\n", 3),
    ("solitonspec v1\nbogus 1\nreflection none\n", 2),
])
def test_parse_errors(tmp_path, text, line):
    p = tmp_path / "x.spec"
    p.write_text(text)
    with pytest.raises(SpectralParseError) as e:
        load(p)
    assert e.value.line == line


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load(tmp_path / "none.spec")
