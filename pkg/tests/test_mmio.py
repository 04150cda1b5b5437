"""Matrix Market round-trips and parse diagnostics."""

import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from hinfmor.errors import ParseError
from hinfmor.mmio import read_matrix, write_matrix


def test_dense_round_trip(tmp_path, rng):
    M = rng.standard_normal((4, 3))
    p = tmp_path / "m.mtx"
    write_matrix(p, M, comment="round trip")
    back = read_matrix(p)
    assert isinstance(back, np.ndarray)
    np.testing.assert_array_equal(back, M)


def test_sparse_round_trip(tmp_path, rng):
    M = sp.random_array((12, 12), density=0.15, rng=rng, format="csr")
    p = tmp_path / "s.mtx"
    write_matrix(p, M)
    back = read_matrix(p)
    assert sp.issparse(back)
    assert (back != M).nnz == 0


def test_vector_and_scalar_round_trip(tmp_path):
    v = np.array([1.0, -2.5, 3.25])
    p = tmp_path / "v.mtx"
    write_matrix(p, v)
    back = read_matrix(p)
    assert back.shape == (3, 1)
    np.testing.assert_array_equal(back.ravel(), v)
    q = tmp_path / "d.mtx"
    write_matrix(q, np.array([[0.125]]))
    np.testing.assert_array_equal(read_matrix(q), [[0.125]])


def test_writer_output_readable_by_scipy(tmp_path, rng):
    M = rng.standard_normal((5, 2))
    p = tmp_path / "m.mtx"
    write_matrix(p, M)
    np.testing.assert_allclose(scipy.io.mmread(p), M, rtol=0, atol=0)
    S = sp.random_array((7, 7), density=0.2, rng=rng)
    q = tmp_path / "s.mtx"
    write_matrix(q, S.tocsr())
    assert (scipy.io.mmread(q).tocsr() != S.tocsr()).nnz == 0


def test_reader_accepts_scipy_output(tmp_path, rng):
    M = rng.standard_normal((3, 4))
    p = tmp_path / "m.mtx"
    scipy.io.mmwrite(p, M)
    np.testing.assert_allclose(read_matrix(p), M, rtol=0, atol=1e-15)
    S = sp.random_array((6, 6), density=0.25, rng=rng).tocsr()
    q = tmp_path / "s.mtx"
    scipy.io.mmwrite(q, S)
    assert (read_matrix(q) != S).nnz == 0


def test_symmetric_dense_and_coordinate(tmp_path):
    p = tmp_path / "sym.mtx"
    p.write_text(
        "%%MatrixMarket matrix array real symmetric\n"
        "2 2\n1\n5\n9\n"
    )
    np.testing.assert_array_equal(read_matrix(p), [[1.0, 5.0], [5.0, 9.0]])
    q = tmp_path / "symc.mtx"
    q.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "3 3 2\n1 1 2\n3 1 7\n"
    )
    S = read_matrix(q).toarray()
    np.testing.assert_array_equal(
        S, [[2.0, 0.0, 7.0], [0.0, 0.0, 0.0], [7.0, 0.0, 0.0]]
    )
    # scipy detects symmetry on write; make sure we ingest that layout too
    B = np.array([[2.0, -1.0], [-1.0, 4.0]])
    r = tmp_path / "syms.mtx"
    scipy.io.mmwrite(r, B)
    np.testing.assert_allclose(read_matrix(r), B, rtol=0, atol=1e-15)


def test_write_matrix_is_byte_stable(tmp_path, rng):
    S = sp.random_array((9, 9), density=0.3, rng=rng).tocsr()
    p1, p2 = tmp_path / "a.mtx", tmp_path / "b.mtx"
    write_matrix(p1, S)
    write_matrix(p2, S.tocoo().tocsr())
    assert p1.read_bytes() == p2.read_bytes()


def bad_file(tmp_path, text):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    return p


@pytest.mark.parametrize(
    "text,lineno,fragment",
    [
        ("", 1, "empty"),
        ("%%MatrixMarket vector array real general\n1 1\n0\n", 1, "expected"),
        ("%%MatrixMarket matrix array complex general\n1 1\n0\n", 1, "field"),
        ("%%MatrixMarket matrix array real skew-symmetric\n1 1\n0\n", 1, "symmetry"),
        ("%%MatrixMarket matrix array real general\n% c\n", 2, "missing size"),
        ("%%MatrixMarket matrix array real general\n2 2 4\n", 2, "2 integers"),
        ("%%MatrixMarket matrix coordinate real general\nx y z\n", 2, "integers"),
        ("%%MatrixMarket matrix array real general\n1 2\n1.5\noops\n", 4, "bad numeric"),
        ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", 5, "expected 4"),
        (
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n",
            3,
            "outside",
        ),
        (
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 5.0\n",
            3,
            "expected 2 coordinate",
        ),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n", 3, "row col"),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, text, lineno, fragment):
    p = bad_file(tmp_path, text)
    with pytest.raises(ParseError) as exc:
        read_matrix(p)
    msg = str(exc.value)
    assert f"{p}:{lineno}:" in msg
    assert fragment in msg
