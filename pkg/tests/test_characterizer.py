import json
from fractions import Fraction as F

import pytest

from charsets.characterizer import (Budget, CertificateError, CoveringCertificate, Tower,
                                    build_tower, characterize, complement_arcs, covering,
                                    epsilons, lift_charset, seq_set_convert, verify_certificate,
                                    verify_certificates)
from charsets.charset import CharSet
from charsets.lattice import subgroup_from_perp
from charsets.quasiconvex import char_window
from charsets.torus import parse_circle
from charsets.verifier import tail_profile
from oracles import nrm, rationals

Z = (F(0),)


def good(phi, x):
    return nrm(phi * x) > F(1, 4)


def test_covering_single_point():
    c = covering([Z], F(1, 8), char_window([Z], 0))
    assert c.B == ((1,), (2,), (3,))
    verify_certificate(c)
    # every point of [1/8, 7/8] on a 1/96 grid lies in some G_phi
    for j in range(12, 85):
        x = F(j, 96)
        assert any(good(p[0], x) for p in c.B)


def test_covering_two_points_even_window():
    w = char_window([(F(1, 2),)], 0)
    c = covering([Z, (F(1, 2),)], F(1, 8), w)
    verify_certificate(c)
    assert all(p[0] % 2 == 0 for p in c.B)
    # the closed arcs end exactly where G_2 opens, so 2 alone cannot do it
    assert c.B != ((2,),) and (2,) in c.B


def test_covering_nothing_to_cover():
    c = covering([Z], F(3, 4), char_window([Z], 0))
    assert c.B == ()
    verify_certificate(c)
    # neighbourhoods are open: radius 1/2 still misses the antipode
    c = covering([Z], F(1, 2), char_window([Z], 0))
    assert c.B == ((1,),)


def test_epsilon_examples():
    s = epsilons([[Z], [Z, (F(1, 5),), (F(4, 5),)]])
    assert s.deltas[0] == F(1, 5) and s[0] == F(1, 20)
    s = epsilons([[Z], [Z, (F(1, 2),)]])
    assert s[0] == F(1, 8)
    s = epsilons([[Z]] * 5)
    assert list(s.eps) == [F(1, 8) / 2 ** n for n in range(4)]


def test_build_tower_modes():
    t = build_tower([(F(1, 2),)], levels=3, refine=2)
    assert [len(s) for s in t.stages] == [2, 4, 8, 16]
    t = build_tower([(F(1, 3),)], levels=3)
    assert t.finite and all(len(s) == 3 for s in t.stages[1:])
    r2 = parse_circle("sqrt(2):0,1,1")
    t = build_tower([(r2,)], levels=2)
    assert not t.finite and t.perp == ()
    assert len(t.stages[2]) == 5
    with pytest.raises(ValueError):
        build_tower(stages=[[(F(1, 2),)], [(F(1, 3),)]])


def test_tower_json_round_trip():
    t = build_tower([(F(1, 2),)], levels=3, refine=2)
    again = Tower.from_json(json.loads(json.dumps(t.to_json())))
    assert again.stages == t.stages


def test_closed_case_third():
    r = characterize(build_tower([(F(1, 3),)], levels=3), 3)
    assert r.mode == "closed"
    assert all(p[0] % 3 == 0 for p in r.charset)
    r = characterize(build_tower([(F(1, 3),)], levels=60), 60)
    for x in rationals(50):
        prof = tail_profile((x,), r.charset)
        if (3 * x).denominator == 1:
            assert all(v == 0 for v in prof.values)
        else:
            # B is 3Z minus 0: the values return to ||3x|| > 0 periodically
            assert max(prof.values[-x.denominator:]) > 0
            assert prof.witnesses or x.denominator > 12


def test_dyadic_characterization_verifies():
    r = characterize(build_tower([(F(1, 2),)], levels=6, refine=2), 6)
    assert r.mode == "dense" and r.complete
    for cert in r.certificates:
        verify_certificate(cert, deep=True)
        again = CoveringCertificate.from_json(json.loads(json.dumps(cert.to_json())))
        verify_certificate(again)
    assert list(r.schedule.eps) == [F(1, 2 ** (n + 4)) for n in range(6)]


def test_tampered_certificate_rejected():
    r = characterize(build_tower([(F(1, 2),)], levels=3, refine=2), 3)
    obj = r.certificates[1].to_json()
    obj["arcs"][0][1] = obj["arcs"][0][0]
    with pytest.raises(CertificateError, match="arc"):
        verify_certificate(CoveringCertificate.from_json(obj))
    obj = r.certificates[1].to_json()
    obj["B"] = obj["B"] + [3]
    with pytest.raises(CertificateError, match="phi=3"):
        verify_certificate(CoveringCertificate.from_json(obj))
    obj = r.certificates[1].to_json()
    obj["eps"] = "1/2"
    with pytest.raises(CertificateError, match="eps"):
        verify_certificates([CoveringCertificate.from_json(obj)])


def test_certificate_chain_checks():
    r = characterize(build_tower([(F(1, 2),)], levels=4, refine=2), 4)
    certs = list(r.certificates)
    verify_certificates(certs)
    with pytest.raises(CertificateError, match="level"):
        verify_certificates([certs[0], certs[2]])
    with pytest.raises(CertificateError):
        verify_certificates([certs[1], certs[0]])


def test_lifted_tower():
    t = build_tower([(F(1, 2), F(0))], levels=3, refine=2)
    r = characterize(t, 3)
    assert r.mode == "lifted"
    B = r.charset
    assert (0, 1) in B or (0, -1) in B
    for x in [(F(1, 4), F(0)), (F(3, 8), F(0))]:
        assert tail_profile(x, B, windowed=True).quiet_from is not None
    assert tail_profile((F(1, 4), F(1, 3)), B).witnesses


def test_two_dimensional_point_cover():
    c = covering([(F(0), F(0))], F(1, 8), char_window([(F(0), F(0))], 0))
    verify_certificate(c)
    assert c.cells


def test_lift_examples():
    B = CharSet((((1,),), ((2,),)), 1)
    D = lift_charset(B, subgroup_from_perp([(0, 1)], 2))
    assert (1, 0) in D and (2, 0) in D and (0, 1) in D
    assert lift_charset(B, subgroup_from_perp([], 1)).levels == B.levels


def test_seq_set_convert():
    B = CharSet(tuple(((v,),) for v in (1, 2, 4, 8)), 1)
    assert seq_set_convert(B).sequence == ((1,), (2,), (4,), (8,))
    c = seq_set_convert([3, 3, 3, 3, 3])
    assert c.closed_case and c.kernel_of == (3,)
    c = seq_set_convert([1, 1, 2, 1, 2, 4])
    assert [p[0] for p in c.charset] == [1, 2, 4]


def test_budget_exhaustion_is_reported():
    from charsets.characterizer import CoveringFailure
    w = char_window([Z], 0)
    with pytest.raises(CoveringFailure):
        covering([Z], F(1, 10 ** 6), w, Budget(pool=1, max_pool=1, max_coef=2))
