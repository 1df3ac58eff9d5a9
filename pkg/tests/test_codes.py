import itertools

import numpy as np
import pytest

from codedgrad import (
    ErasurePattern,
    LinearCode,
    ParameterError,
    UnrecoverableErasureError,
    UnsupportedSizeError,
    code_from_json,
    code_to_json,
    condition_number,
    erasure_solve,
    make_gaussian_code,
    make_repetition_code,
    make_systematic_mds,
    make_vandermonde_code,
    min_distance,
)

from helpers import EXAMPLE_G, example_code, oracle_min_distance


class TestConstructors:
    def test_gaussian_deterministic(self):
        a = make_gaussian_code(4, 2, seed=7)
        b = make_gaussian_code(4, 2, seed=7)
        assert a.generator.shape == (2, 4)
        assert np.array_equal(a.generator, b.generator)
        assert not np.array_equal(a.generator, make_gaussian_code(4, 2, seed=8).generator)
        assert a.min_distance is None

    @pytest.mark.parametrize("seed", range(5))
    def test_gaussian_is_mds_almost_surely(self, seed):
        code = make_gaussian_code(4, 2, seed=seed)
        assert min_distance(code) == 3
        assert oracle_min_distance(code.generator) == 3

    def test_gaussian_square(self):
        code = make_gaussian_code(3, 3, seed=0)
        assert min_distance(code) == 1

    def test_gaussian_bad_dims(self):
        with pytest.raises(ParameterError):
            make_gaussian_code(2, 3, seed=0)
        with pytest.raises(ParameterError):
            make_gaussian_code(3, 0, seed=0)

    def test_systematic_mds(self):
        code = make_systematic_mds(4, 2, seed=3)
        assert np.array_equal(code.generator[:, :2], np.eye(2))
        assert code.systematic_positions == (1, 2)
        assert code.min_distance == 3
        assert oracle_min_distance(code.generator) == 3

    def test_systematic_mds_full_rate(self):
        code = make_systematic_mds(5, 5, seed=1)
        assert np.array_equal(code.generator, np.eye(5))

    def test_systematic_mds_single_row(self):
        code = make_systematic_mds(3, 1, seed=2)
        assert code.min_distance == 3
        assert oracle_min_distance(code.generator) == 3

    def test_repetition(self):
        code = make_repetition_code(4)
        assert np.array_equal(code.generator, np.ones((1, 4)))
        assert code.min_distance == 4
        assert make_repetition_code(1).min_distance == 1
        with pytest.raises(ParameterError):
            make_repetition_code(0)

    def test_repetition_single_column_decode(self):
        code = make_repetition_code(3)
        message = np.array([[7.0], [-2.5]])
        for j in (1, 2, 3):
            got = erasure_solve(code, ErasurePattern([j]), message.copy())
            assert np.allclose(got, message)

    def test_vandermonde_explicit(self):
        code = make_vandermonde_code(4, 2, [0.0, 1.0, 2.0, 3.0])
        assert np.array_equal(
            code.generator, np.array([[1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 2.0, 3.0]])
        )
        assert code.min_distance == 3

    def test_vandermonde_defaults_and_square(self):
        code = make_vandermonde_code(3, 3, [1.0, 2.0, 3.0])
        assert abs(np.linalg.det(code.generator)) > 1e-9
        default = make_vandermonde_code(4, 2)
        assert np.allclose(default.generator[1], [0.0, 1.0, 2.0, 3.0])

    def test_vandermonde_pairs_nonsingular(self):
        code = make_vandermonde_code(5, 2, [1.0, 2.0, 3.0, 4.0, 5.0])
        for pair in itertools.combinations(range(5), 2):
            assert abs(np.linalg.det(code.generator[:, pair])) > 1e-9

    def test_vandermonde_duplicate_points(self):
        with pytest.raises(ParameterError):
            make_vandermonde_code(3, 2, [1.0, 1.0, 2.0])

    def test_systematic_positions_validated(self):
        with pytest.raises(ParameterError):
            LinearCode(N=4, K=2, generator=EXAMPLE_G, systematic_positions=(2, 3))


class TestMinDistance:
    def test_worked_example(self):
        assert min_distance(example_code()) == 3

    def test_identity(self):
        assert min_distance(LinearCode(N=3, K=3, generator=np.eye(3))) == 1

    def test_all_ones_row(self):
        assert min_distance(LinearCode(N=3, K=1, generator=np.ones((1, 3)))) == 3

    def test_caches(self):
        code = example_code()
        assert code.min_distance is None
        min_distance(code)
        assert code.min_distance == 3

    def test_size_budget(self):
        code = make_gaussian_code(21, 2, seed=0)
        with pytest.raises(UnsupportedSizeError):
            min_distance(code)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_oracle_on_random_codes(self, seed):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(2, 8))
        K = int(rng.integers(1, N + 1))
        code = make_gaussian_code(N, K, seed=seed + 100)
        assert min_distance(code) == oracle_min_distance(code.generator)


class TestErasureSolve:
    def test_worked_example(self):
        # Encoding [[1, 3], [2, 4]] with the example generator and keeping
        # columns 3 and 4 yields [[4, 7], [6, 10]]; solving must invert it.
        got = erasure_solve(
            example_code(), ErasurePattern([3, 4]), np.array([[4.0, 7.0], [6.0, 10.0]])
        )
        assert np.allclose(got, [[1.0, 3.0], [2.0, 4.0]], atol=1e-10)

    def test_systematic_read_off(self):
        code = make_systematic_mds(5, 3, seed=0)
        message = np.arange(6.0).reshape(2, 3)
        coded = message @ code.generator[:, :3]
        got = erasure_solve(code, ErasurePattern([1, 2, 3]), coded)
        assert np.allclose(got, message)

    def test_rank_deficient(self):
        G = np.array([[1.0, 0.0, 1.0, 2.0], [0.0, 1.0, 1.0, 2.0]])
        code = LinearCode(N=4, K=2, generator=G)
        with pytest.raises(UnrecoverableErasureError) as err:
            erasure_solve(code, ErasurePattern([3, 4]), np.zeros((1, 2)))
        assert err.value.rank == 1

    def test_overdetermined_uses_all_columns(self):
        code = make_gaussian_code(6, 2, seed=5)
        message = np.array([[1.0, -2.0]])
        coded = message @ code.generator
        got = erasure_solve(code, ErasurePattern(range(1, 7)), coded)
        assert np.allclose(got, message, atol=1e-10)

    @pytest.mark.parametrize("seed", range(8))
    def test_roundtrip_property(self, seed):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(2, 9))
        K = int(rng.integers(1, N + 1))
        maker = [make_gaussian_code, make_systematic_mds][seed % 2]
        code = maker(N, K, seed)
        rows = int(rng.integers(1, 5))
        message = rng.standard_normal((rows, K))
        t = int(rng.integers(K, N + 1))
        received = sorted(rng.choice(N, size=t, replace=False) + 1)
        coded = message @ code.generator[:, [i - 1 for i in received]]
        got = erasure_solve(code, ErasurePattern(received), coded)
        assert np.allclose(got, message, rtol=1e-8, atol=1e-10)

    def test_pattern_validation(self):
        with pytest.raises(ParameterError):
            ErasurePattern([1, 1, 2])
        with pytest.raises(ParameterError):
            ErasurePattern([0, 1])
        with pytest.raises(ParameterError):
            erasure_solve(example_code(), ErasurePattern([5]), np.zeros((1, 1)))


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(3)) == 1.0

    def test_diagonal(self):
        assert condition_number(np.diag([10.0, 1.0])) == pytest.approx(10.0)

    def test_near_singular(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-6]])
        assert condition_number(m) == pytest.approx(np.linalg.cond(m), rel=1e-9)
        assert condition_number(m) == pytest.approx(4.0e6, rel=0.01)

    def test_singular_is_infinite(self):
        assert condition_number(np.ones((2, 2))) == float("inf")

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            condition_number(np.zeros((0, 3)))


class TestInvariants:
    @pytest.mark.parametrize("seed", range(6))
    def test_singleton_bound_and_rank(self, seed):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(2, 9))
        K = int(rng.integers(1, N + 1))
        for maker in (make_gaussian_code, make_systematic_mds):
            code = maker(N, K, seed)
            assert np.linalg.matrix_rank(code.generator) == K
            assert min_distance(code) <= N - K + 1

    @pytest.mark.parametrize("N,K", [(4, 2), (5, 3), (6, 2), (7, 4), (10, 5)])
    def test_mds_witness_every_k_subset(self, N, K):
        for code in (make_systematic_mds(N, K, seed=1), make_vandermonde_code(N, K)):
            for cols in itertools.combinations(range(N), K):
                sub = code.generator[:, cols]
                sv = np.linalg.svd(sub, compute_uv=False)
                assert sv.min() > 1e-9 * sv.max()


class TestJson:
    def test_roundtrip(self):
        code = make_systematic_mds(5, 2, seed=9)
        doc = code_to_json(code)
        assert doc["kind"] == "systematic-mds"
        assert doc["delta"] == 4
        assert doc["systematic_positions"] == [1, 2]
        back = code_from_json(doc)
        assert back.N == code.N and back.K == code.K
        assert np.array_equal(back.generator, code.generator)
        assert back.min_distance == code.min_distance
        assert back.systematic_positions == code.systematic_positions

    def test_missing_field(self):
        with pytest.raises(ParameterError):
            code_from_json({"kind": "custom", "N": 2, "K": 1})
