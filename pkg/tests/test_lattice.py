from fractions import Fraction

import numpy as np
import pytest

from isinglab.lattice import (
    FULL,
    SpinConfig,
    SublatticeSpec,
    TorusCompatibilityError,
    apply_symmetry,
    block_magnetization,
    coset_index_map,
    enumerate_cosets,
)


def vertical_stripes(side):
    spins = np.ones((side, side), dtype=np.int8)
    spins[1::2, :] = -1
    return SpinConfig(spins)


def checkerboard(side):
    x, y = np.indices((side, side))
    return SpinConfig(np.where((x + y) % 2 == 0, 1, -1).astype(np.int8))


class TestSpinConfig:
    def test_validates_values(self):
        with pytest.raises(ValueError):
            SpinConfig(np.zeros((3, 3), dtype=np.int8))
        with pytest.raises(ValueError):
            SpinConfig(np.ones((3, 4), dtype=np.int8))

    def test_immutable(self):
        config = SpinConfig.all_plus(4)
        with pytest.raises(ValueError):
            config.spins[0, 0] = -1

    def test_equality_and_hash(self, random_config):
        a = random_config(6, seed=3)
        b = SpinConfig(a.spins.copy())
        assert a == b
        assert hash(a) == hash(b)
        assert a != a.flipped()

    def test_text_round_trip(self, random_config):
        for seed in range(5):
            config = random_config(5, seed=seed)
            assert SpinConfig.from_text(config.to_text()) == config

    def test_text_layout(self):
        # first line is the side; row y=0 comes first with x increasing
        spins = -np.ones((2, 2), dtype=np.int8)
        spins[1, 0] = 1
        text = SpinConfig(spins).to_text()
        assert text.splitlines() == ["2", "-+", "--"]


class TestApplySymmetry:
    def test_all_plus_translation(self):
        config = SpinConfig.all_plus(5)
        assert apply_symmetry(config, (3, 1), flip=False) == config

    def test_all_plus_flip(self):
        config = SpinConfig.all_plus(5)
        assert apply_symmetry(config, (0, 0), flip=True) == SpinConfig.all_minus(5)

    def test_stripes_shift_equals_flip(self):
        config = vertical_stripes(4)
        shifted = apply_symmetry(config, (1, 0), flip=False)
        assert shifted == config.flipped()

    def test_group_inverse(self, random_config):
        rng = np.random.default_rng(11)
        for _ in range(20):
            config = random_config(6, seed=int(rng.integers(1 << 30)))
            v = (int(rng.integers(-7, 8)), int(rng.integers(-7, 8)))
            flip = bool(rng.integers(2))
            forward = apply_symmetry(config, v, flip)
            assert apply_symmetry(forward, (-v[0], -v[1]), flip) == config

    def test_translation_commutes_with_flip(self, random_config):
        config = random_config(5, seed=7)
        v = (2, 3)
        a = apply_symmetry(apply_symmetry(config, v, False), (0, 0), True)
        b = apply_symmetry(apply_symmetry(config, (0, 0), True), v, False)
        assert a == b

    def test_indexing_convention(self):
        # result_i = config_{i-v}: the spin at the origin moves to v
        spins = np.ones((4, 4), dtype=np.int8)
        spins[0, 0] = -1
        moved = apply_symmetry(SpinConfig(spins), (1, 2), flip=False)
        assert moved.spins[1, 2] == -1
        assert moved.spins.sum() == 14


class TestBlockMagnetization:
    def test_all_plus(self):
        config = SpinConfig.all_plus(7)
        for n in (0, 1, 3, FULL):
            assert block_magnetization(config, n) == 1

    def test_checkerboard_center_block(self):
        config = checkerboard(5)
        # 3x3 block around origin holds 5 plus and 4 minus spins
        assert block_magnetization(config, 1) == Fraction(1, 9)

    def test_single_defect(self):
        spins = np.ones((5, 5), dtype=np.int8)
        spins[0, 0] = -1
        assert block_magnetization(SpinConfig(spins), 1) == Fraction(7, 9)

    def test_full_torus_sentinel(self):
        spins = np.ones((4, 4), dtype=np.int8)
        spins[2, 3] = -1
        assert block_magnetization(SpinConfig(spins), FULL) == Fraction(14, 16)

    def test_block_too_large(self):
        with pytest.raises(ValueError):
            block_magnetization(SpinConfig.all_plus(4), 2)

    def test_flip_antisymmetry(self, random_config):
        for seed in range(10):
            config = random_config(7, seed=seed)
            for n in (0, 2, FULL):
                assert block_magnetization(config.flipped(), n) == -block_magnetization(config, n)

    def test_value_lattice(self, random_config):
        # achievable values step by 2/(2n+1)^2
        for seed in range(10):
            value = block_magnetization(random_config(5, seed=seed), 1)
            assert (value + 1) % Fraction(2, 9) == 0


class TestSublatticeSpec:
    def test_index_from_determinant(self):
        assert SublatticeSpec(((2, 0), (0, 1))).index == 2
        assert SublatticeSpec(((1, -1), (1, 1))).index == 2
        assert SublatticeSpec(((2, 0), (0, 2))).index == 4

    def test_singular_basis_rejected(self):
        with pytest.raises(ValueError):
            SublatticeSpec(((2, 4), (1, 2)))

    def test_membership(self):
        lat = SublatticeSpec(((2, 0), (0, 1)))
        assert lat.contains((2, 0))
        assert lat.contains((4, -3))
        assert not lat.contains((1, 0))

    @pytest.mark.parametrize(
        "basis,expected",
        [
            (((2, 0), (0, 1)), 2),
            (((1, -1), (1, 1)), 2),
            (((4, 0), (0, 6)), 12),
        ],
    )
    def test_minimal_torus_side(self, basis, expected):
        assert SublatticeSpec(basis).minimal_torus_side == expected

    def test_compatibility(self):
        lat = SublatticeSpec(((4, 0), (0, 6)))
        assert lat.torus_compatible(12)
        assert lat.torus_compatible(24)
        assert not lat.torus_compatible(8)

    def test_canonical_representatives_stable_across_tori(self):
        lat = SublatticeSpec(((1, -1), (1, 1)))
        reps = lat.canonical_representatives()
        assert len(reps) == 2
        for side in (2, 4, 8):
            index_map, torus_reps = coset_index_map(lat, side)
            assert torus_reps == reps


class TestEnumerateCosets:
    def test_even_odd_columns(self):
        cosets = enumerate_cosets(SublatticeSpec(((2, 0), (0, 1))), 4)
        assert len(cosets) == 2
        sizes = sorted(len(c) for c in cosets)
        assert sizes == [8, 8]
        for coset in cosets:
            assert len({x % 2 for x, _ in coset}) == 1

    def test_checkerboard_parity(self):
        cosets = enumerate_cosets(SublatticeSpec(((1, -1), (1, 1))), 4)
        assert len(cosets) == 2
        for coset in cosets:
            assert len({(x + y) % 2 for x, y in coset}) == 1

    def test_two_by_two(self):
        cosets = enumerate_cosets(SublatticeSpec(((2, 0), (0, 2))), 4)
        assert len(cosets) == 4
        assert all(len(c) == 4 for c in cosets)

    def test_incompatible_torus(self):
        with pytest.raises(TorusCompatibilityError):
            enumerate_cosets(SublatticeSpec(((2, 0), (0, 1))), 3)

    def test_partition_exhaustive(self):
        rng = np.random.default_rng(5)
        bases = [
            ((2, 0), (0, 1)),
            ((1, -1), (1, 1)),
            ((2, 0), (0, 2)),
            ((2, 1), (0, 3)),
            ((4, 0), (0, 2)),
            ((3, 1), (1, 3)),
        ]
        for basis in bases:
            lat = SublatticeSpec(basis)
            side = lat.minimal_torus_side
            if side > 16 or lat.index > 8:
                continue
            for mult in (1, 2):
                n = side * mult
                cosets = enumerate_cosets(lat, n)
                assert len(cosets) == lat.index
                flat = [site for coset in cosets for site in coset]
                assert len(flat) == n * n
                assert len(set(flat)) == n * n
                # same coset iff the difference lies in the sublattice
                for coset in cosets:
                    anchor = coset[0]
                    picks = rng.choice(len(coset), size=min(4, len(coset)), replace=False)
                    for k in picks:
                        site = coset[int(k)]
                        assert lat.contains((site[0] - anchor[0], site[1] - anchor[1]))
