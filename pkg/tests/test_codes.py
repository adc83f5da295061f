import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adsq.codes import (PackedCodes, distances_to_all, encode_query, encode_matrix,
                        hamming_distance, load_codes, pack, quantize_sign,
                        search_topk, unpack, write_codes)
from adsq.encoder import forward, init_params
from adsq.errors import FormatError


def random_codes(seed, n, k):
    rng = np.random.default_rng(seed)
    return np.where(rng.random((n, k)) < 0.5, -1.0, 1.0)


class TestQuantize:
    def test_zero_maps_to_plus_one(self):
        np.testing.assert_array_equal(quantize_sign([0.0, -0.2, 0.7]), [1.0, -1.0, 1.0])

    def test_all_negative(self):
        assert np.all(quantize_sign(-np.random.default_rng(0).random(10)) == -1.0)

    def test_idempotent_on_signs(self):
        c = random_codes(1, 4, 6)
        np.testing.assert_array_equal(quantize_sign(c), c)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            quantize_sign([np.nan])


class TestEncode:
    def setup_method(self):
        self.px = init_params([5, 4, 3, 2], seed=10)
        self.py = init_params([5, 4, 3, 2], seed=11)

    def test_x_half_comes_first(self):
        x = np.random.default_rng(2).normal(size=5)
        code = encode_query(x, self.px, self.py)
        hx = quantize_sign(forward(self.px, x[None, :]).u[0])
        hy = quantize_sign(forward(self.py, x[None, :]).u[0])
        np.testing.assert_array_equal(code[:2], hx)
        np.testing.assert_array_equal(code[2:], hy)

    def test_length_is_twice_k_half(self):
        x = np.zeros(5)
        assert encode_query(x, self.px, self.py).shape == (4,)

    def test_shared_params_give_identical_halves(self):
        x = np.random.default_rng(3).normal(size=(6, 5))
        codes = encode_matrix(x, self.px, self.px)
        np.testing.assert_array_equal(codes[:, :2], codes[:, 2:])


class TestPack:
    def test_known_byte(self):
        # bits 1,0,1,1,0,0,0,0 MSB-first = 0xB0
        packed = pack(np.array([[1.0, -1, 1, 1, -1, -1, -1, -1]]))
        assert packed.payload[0, 0] == 0xB0

    def test_row_padding_is_zero(self):
        packed = pack(np.array([[1.0, 1.0, 1.0]]))
        assert packed.payload.shape == (1, 1)
        assert packed.payload[0, 0] & 0b00011111 == 0

    def test_rejects_non_sign_entries(self):
        with pytest.raises(ValueError):
            pack(np.array([[0.5, 1.0]]))

    @settings(max_examples=50)
    @given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 20), k=st.integers(1, 40))
    def test_round_trip(self, seed, n, k):
        codes = random_codes(seed, n, k)
        np.testing.assert_array_equal(unpack(pack(codes)), codes)


class TestHamming:
    def test_identical_is_zero(self):
        p = pack(random_codes(0, 1, 16))
        assert hamming_distance(p.row(0), p.row(0)) == 0

    def test_complement_is_k(self):
        c = random_codes(1, 1, 12)
        assert hamming_distance(pack(c).row(0), pack(-c).row(0)) == 12

    def test_half_mismatch(self):
        a = pack(np.array([[1.0, 1, 1, 1]])).row(0)
        b = pack(np.array([[1.0, 1, -1, -1]])).row(0)
        assert hamming_distance(a, b) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming_distance(np.zeros(2, dtype=np.uint8), np.zeros(3, dtype=np.uint8))

    @settings(max_examples=60)
    @given(seed=st.integers(0, 2**31 - 1), k=st.sampled_from([8, 16, 48]))
    def test_inner_product_identity(self, seed, k):
        """popcount distance = (k - <a, b>) / 2 exactly."""
        pair = random_codes(seed, 2, k)
        dist = hamming_distance(pack(pair).row(0), pack(pair).row(1))
        assert dist == (k - int(pair[0] @ pair[1])) // 2


class TestSearch:
    def test_self_is_nearest(self):
        codes = random_codes(2, 20, 16)
        db = pack(codes)
        assert search_topk(db.row(7), db, 1)[0] == 7

    def test_ties_break_by_index(self):
        codes = np.array([[1.0, 1, 1, 1], [1.0, 1, 1, 1], [-1.0, -1, -1, -1]])
        db = pack(codes)
        np.testing.assert_array_equal(search_topk(db.row(1), db, 3), [0, 1, 2])

    def test_k_too_large(self):
        db = pack(random_codes(3, 5, 8))
        with pytest.raises(ValueError):
            search_topk(db.row(0), db, 6)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_sort(self, seed):
        codes = random_codes(seed, 50, 12)
        query = random_codes(seed + 100, 1, 12)
        db = pack(codes)
        qrow = pack(query).row(0)
        got = search_topk(qrow, db, 50)
        dist = [int((query[0] != codes[j]).sum()) for j in range(50)]
        expect = sorted(range(50), key=lambda j: (dist[j], j))
        np.testing.assert_array_equal(got, expect)

    def test_distances_match_rowwise_calls(self):
        codes = random_codes(9, 30, 24)
        db = pack(codes)
        q = db.row(4)
        all_d = distances_to_all(q, db)
        assert all(all_d[j] == hamming_distance(q, db.row(j)) for j in range(30))


class TestCodesFile:
    def test_round_trip(self, tmp_path):
        packed = pack(random_codes(4, 10, 11))
        path = tmp_path / "c.adsqb"
        write_codes(path, packed)
        loaded = load_codes(path)
        assert loaded.n == 10 and loaded.k_total == 11
        np.testing.assert_array_equal(loaded.payload, packed.payload)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.adsqb"
        path.write_bytes(b"XXXXXXXX" + b"\x00" * 8)
        with pytest.raises(FormatError):
            load_codes(path)

    def test_truncated(self, tmp_path):
        packed = pack(random_codes(5, 4, 16))
        path = tmp_path / "t.adsqb"
        write_codes(path, packed)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(FormatError):
            load_codes(path)

    def test_nonzero_padding_rejected(self, tmp_path):
        path = tmp_path / "p.adsqb"
        blob = b"ADSQB001" + np.array([1, 3], dtype="<u4").tobytes() + bytes([0b10100001])
        path.write_bytes(blob)
        with pytest.raises(FormatError, match="padding"):
            load_codes(path)
