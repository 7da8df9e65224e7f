import json
import math
from itertools import combinations

import numpy as np
import pytest

from dgframes.field import UnsupportedFieldError
from dgframes.frame import (ColumnIndex, Frame, FrameFormatError,
                            MaterializationError, build_dg_set, form_matrix,
                            frame_from_dict, frame_to_dict, load_frame,
                            save_frame, synthesize_frame, write_frame_csv)
from dgframes.gf2 import BitVector, rank_f2, rank_f2_batch


def oracle_exponents(frame):
    """Entries straight from wt(d_P) + 2 wt(b) + t P t^T + 2 b.t, with P
    built entry by entry from the trace form."""
    m = frame.m
    bits = np.array([[(t >> u) & 1 for u in range(m)] for t in range(1 << m)])
    n_p = 1 << ((frame.r + 1) * m)
    out = np.zeros(frame.shape, dtype=np.int64)
    for p in range(n_p):
        P = form_matrix(frame.dg_set.coefficients(p)).to_array()
        wd = int(np.trace(P))
        quad = np.einsum("tu,uv,tv->t", bits, P, bits)
        for b in range(1 << m):
            bb = bits[b]
            out[:, (p << m) | b] = (wd + 2 * bb.sum() + quad + 2 * bits @ bb) % 4
    return out


@pytest.mark.parametrize("m,r", [(3, 0), (3, 1), (5, 0)])
def test_entries_match_direct_formula(m, r):
    frame = Frame(m, r)
    assert np.array_equal(frame.exponents(), oracle_exponents(frame))


def test_generator_build_matches_form_matrix(g51):
    dg = g51.dg_set
    rng = np.random.default_rng(0)
    for p in rng.integers(0, len(dg), 40):
        assert dg.matrix(int(p)) == form_matrix(dg.coefficients(int(p)))
        assert dg.index_of(dg.coefficients(int(p))) == p


@pytest.mark.parametrize("m", [3, 5])
def test_kerdock_differences_full_rank(m):
    dg = build_dg_set(m, 0)
    ranks = rank_f2_batch(dg.rows[1:])
    assert ranks.min() == m and ranks.max() == m   # linear set: differences are members


def test_dg51_rank_bound_pairwise():
    dg = build_dg_set(5, 1)
    # the set is closed under xor, so a difference of a pair is a member;
    # a spot check on explicit pairs confirms it
    rng = np.random.default_rng(3)
    for a, b in rng.integers(0, len(dg), size=(200, 2)):
        if a != b:
            assert rank_f2(dg.matrix(int(a)) ^ dg.matrix(int(b))) >= 3
    assert rank_f2_batch(dg.rows[1:]).min() == 3


def test_dg_set_is_symmetric_and_linear(g51):
    dg = g51.dg_set
    for p, q in [(3, 700), (1, 1023), (512, 31)]:
        assert dg.matrix(p).is_symmetric()
        assert dg.matrix(p) ^ dg.matrix(q) == dg.matrix(p ^ q)


def test_group_law_exhaustive_g30(g30):
    E = g30.exponents().astype(np.int64)
    m = g30.m
    diag = g30.dg_set.diagonals
    for ja in range(g30.num_cols):
        a = g30.column_index(ja)
        for jb in range(g30.num_cols):
            b = g30.column_index(jb)
            target = ColumnIndex(a.p ^ b.p, a.b ^ b.b ^ int(diag[a.p] & diag[b.p]))
            assert g30.group_product(a, b) == target
            jt = (target.p << m) | target.b
            assert np.array_equal((E[:, ja] + E[:, jb]) % 4, E[:, jt])


def test_group_identity_and_self_product(g50):
    e = ColumnIndex(0, 0)
    for j in (1, 77, 1000):
        c = g50.column_index(j)
        assert g50.group_product(c, e) == c
        d = int(g50.dg_set.diagonals[c.p])
        assert g50.group_product(c, c) == ColumnIndex(0, d)


def test_all_ones_column_and_norms(g50):
    G = g50.matrix()
    assert np.allclose(G[:, 0], g50.normalization)
    assert np.allclose(np.linalg.norm(G, axis=0), 1.0, atol=1e-12)
    assert g50.normalization == 2 ** -2.5


def test_tight_frame_g30(g30):
    G = g30.matrix() / g30.normalization
    assert np.abs(G @ G.conj().T - 64 * np.eye(8)).max() <= 1e-12


def test_accessor_matches_materialized_g51(g51):
    lazy = Frame(5, 1, column_limit=16)
    assert not lazy.is_materialized
    with pytest.raises(MaterializationError):
        lazy.exponents()
    E = g51.exponents()
    rng = np.random.default_rng(5)
    for j, t in zip(rng.integers(0, g51.num_cols, 60), rng.integers(0, 32, 60)):
        col = g51.column_index(int(j))
        assert lazy.entry_exponent(col, int(t)) == E[t, j]
        assert lazy.entry_exponent(col, BitVector(int(t), 5)) == E[t, j]
    js = rng.integers(0, g51.num_cols, 10)
    assert np.allclose(lazy.columns(js), g51.matrix()[:, js])


def test_entry_examples(g30):
    assert g30.entry(ColumnIndex(0, 0), 5) == pytest.approx(1 / math.sqrt(8))
    # P = 0, b = 1: entry is i^(2 wt(b) + 2 b.t) = (-1)^(1 + t_0)
    assert g30.entry(ColumnIndex(0, 1), 0) == pytest.approx(-1 / math.sqrt(8))
    assert g30.entry(ColumnIndex(0, 1), 1) == pytest.approx(1 / math.sqrt(8))


def test_index_errors(g30):
    with pytest.raises(IndexError):
        g30.column_index(64)
    with pytest.raises(IndexError):
        g30.entry_exponent(ColumnIndex(8, 0), 0)
    with pytest.raises(IndexError):
        g30.entry_exponent(ColumnIndex(0, 0), 8)
    with pytest.raises(ValueError):
        g30.entry_exponent(ColumnIndex(0, 0), BitVector(0, 4))


@pytest.mark.parametrize("m,r", [(9, 0), (4, 0), (3, 2), (5, -1)])
def test_bad_parameters(m, r):
    with pytest.raises(ValueError):
        synthesize_frame(m, r)


def test_unsupported_m_error_type():
    with pytest.raises(UnsupportedFieldError):
        Frame(9, 0)


def test_round_trip(tmp_path, g30):
    path = tmp_path / "f.json"
    save_frame(g30, path)
    back = load_frame(path)
    assert back.is_explicit
    assert np.array_equal(back.exponents(), g30.exponents())
    header_only = frame_from_dict(frame_to_dict(g30, include_body=False))
    assert not header_only.is_materialized
    assert np.array_equal(header_only.exponents(), g30.exponents())


def test_format_errors(tmp_path, g30):
    doc = frame_to_dict(g30)
    bad = json.loads(json.dumps(doc))
    bad["header"]["num_cols"] = 63
    with pytest.raises(FrameFormatError):
        frame_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["exponents"][0] = bad["exponents"][0][:-1]
    with pytest.raises(FrameFormatError):
        frame_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["exponents"][0] = "4" + bad["exponents"][0][1:]
    with pytest.raises(ValueError):
        frame_from_dict(bad)
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    with pytest.raises(FrameFormatError):
        load_frame(p)


def test_csv_export(tmp_path, g30):
    p = tmp_path / "f.csv"
    write_frame_csv(g30, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "row,col,real,imag"
    assert len(lines) == 1 + 8 * 64


def test_columns_distinct(g30):
    E = g30.exponents()
    assert len({E[:, j].tobytes() for j in range(64)}) == 64
    G = g30.matrix()
    coh = max(abs(np.vdot(G[:, a], G[:, b]))
              for a, b in combinations(range(64), 2))
    assert coh == pytest.approx(1 / math.sqrt(8))
