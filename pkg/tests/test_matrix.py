import numpy as np
import pytest

from gridmm import (
    COL_MAJOR,
    ROW_MAJOR,
    Matrix,
    ModelError,
    block_view,
    load_binary,
    load_csv,
    oracle_matmul,
    relayout,
    save_binary,
    save_csv,
    transpose,
)


def scalar_matmul_kij(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Independent route: pure-scalar float32 triple loop in (k, i, j) order."""
    m, kk = a.shape
    n = b.shape[1]
    c = np.zeros((m, n), dtype=np.float32)
    for k in range(kk):
        for i in range(m):
            for j in range(n):
                c[i, j] = np.float32(c[i, j] + np.float32(a[i, k] * b[k, j]))
    return c


class TestMatrix:
    def test_layouts_agree_logically(self):
        arr = np.arange(12, dtype=np.float32).reshape(3, 4)
        rm = Matrix.from_array(arr, ROW_MAJOR)
        cm = Matrix.from_array(arr, COL_MAJOR)
        for i in range(3):
            for j in range(4):
                assert rm.at(i, j) == cm.at(i, j) == arr[i, j]
        # storage differs even though logical content is identical
        assert not np.array_equal(rm.data, cm.data)

    def test_immutable(self):
        m = Matrix.from_array(np.eye(2, dtype=np.float32))
        with pytest.raises((ValueError, AttributeError)):
            m.data[0] = 5.0
        with pytest.raises(AttributeError):
            m.rows = 3

    def test_bad_length(self):
        with pytest.raises(ModelError):
            Matrix(2, 3, [1.0, 2.0])

    def test_relayout_preserves_elements(self):
        rng = np.random.default_rng(1)
        arr = rng.standard_normal((5, 7)).astype(np.float32)
        m = Matrix.from_array(arr, ROW_MAJOR)
        back = relayout(relayout(m, COL_MAJOR), ROW_MAJOR)
        assert m.same_values(back)
        assert relayout(m, COL_MAJOR).same_values(m)

    def test_transpose_involution(self):
        rng = np.random.default_rng(2)
        m = Matrix.from_array(rng.standard_normal((4, 6)).astype(np.float32), COL_MAJOR)
        tt = transpose(transpose(m))
        assert tt.rows == m.rows and tt.cols == m.cols and tt.layout == m.layout
        assert tt.same_values(m)
        t = transpose(m)
        assert t.at(2, 3) == m.at(3, 2)


class TestOracle:
    def test_identity(self):
        i2 = Matrix.from_array(np.eye(2, dtype=np.float32))
        assert oracle_matmul(i2, i2).same_values(i2)

    def test_hand_arithmetic(self):
        a = Matrix.from_array([[1, 2], [3, 4]])
        b = Matrix.from_array([[5, 6], [7, 8]])
        expected = np.array([[19, 22], [43, 50]], dtype=np.float32)
        assert np.array_equal(oracle_matmul(a, b).to_array(), expected)

    def test_dual_oracle_cross_check(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((64, 48)).astype(np.float32)
        b = rng.standard_normal((48, 32)).astype(np.float32)
        got = oracle_matmul(Matrix.from_array(a), Matrix.from_array(b)).to_array()
        ref = scalar_matmul_kij(a, b)
        assert np.allclose(got, ref, rtol=1e-5, atol=0)

    def test_k1_is_outer_product(self):
        rng = np.random.default_rng(4)
        col = rng.standard_normal((5, 1)).astype(np.float32)
        row = rng.standard_normal((1, 7)).astype(np.float32)
        got = oracle_matmul(Matrix.from_array(col), Matrix.from_array(row)).to_array()
        assert np.array_equal(got, col * row)

    def test_dimension_mismatch(self):
        with pytest.raises(ModelError):
            oracle_matmul(
                Matrix.from_array(np.zeros((2, 3), np.float32)),
                Matrix.from_array(np.zeros((2, 3), np.float32)),
            )


class TestBlockView:
    def test_index_arithmetic(self):
        m = Matrix.from_array(np.arange(16, dtype=np.float32).reshape(4, 4))
        view = block_view(m, 2, 2)
        assert view.block(1, 1)[0, 0] == m.at(2, 2)
        assert view.at(1, 0, 1, 1) == m.at(3, 1)

    def test_reassembly(self):
        rng = np.random.default_rng(5)
        arr = rng.standard_normal((6, 8)).astype(np.float32)
        m = Matrix.from_array(arr, COL_MAJOR)
        view = block_view(m, 2, 4)
        rebuilt = np.zeros_like(arr)
        for I, J, blk in view.blocks():
            rebuilt[2 * I : 2 * I + 2, 4 * J : 4 * J + 4] = blk
        assert np.array_equal(rebuilt, arr)

    def test_indivisible(self):
        m = Matrix.from_array(np.zeros((4, 4), np.float32))
        with pytest.raises(ModelError):
            block_view(m, 3, 2)


class TestFileFormats:
    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        m = Matrix.from_array(rng.standard_normal((9, 5)).astype(np.float32), COL_MAJOR)
        path = tmp_path / "m.bin"
        save_binary(m, path)
        back = load_binary(path, COL_MAJOR)
        assert back.rows == 9 and back.cols == 5
        assert back.same_values(m)
        # header is two little-endian u64 dims, payload row-major f32
        raw = path.read_bytes()
        assert len(raw) == 16 + 9 * 5 * 4
        assert int.from_bytes(raw[:8], "little") == 9
        assert int.from_bytes(raw[8:16], "little") == 5

    def test_binary_truncation_detected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x02" + b"\x00" * 14)
        with pytest.raises(ModelError):
            load_binary(path)

    def test_csv_round_trip(self, tmp_path):
        m = Matrix.from_array(np.array([[1.5, -2.0], [0.25, 4.0]], np.float32))
        path = tmp_path / "m.csv"
        save_csv(m, path)
        assert load_csv(path).same_values(m)
