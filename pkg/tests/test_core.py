"""Tests for seeding, parameter records and the flat config format."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvot import core
from cvot.core import (
    DiscretizationScheme,
    EpsilonBudget,
    InvalidParams,
    MemoryAssumption,
    SeededRng,
    seed_from_env,
    validate_params,
)


def test_unit_constants():
    # vacuum variance 1/2 per quadrature; shot-noise-unit conversions square up
    assert core.HBAR == 1.0
    assert core.VACUUM_VAR == 0.5
    assert core.SNU_QUAD_SCALE == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-15)
    assert core.SNU_QUAD_SCALE ** 2 == pytest.approx(core.SNU_VAR_SCALE, rel=1e-15)


class TestSeededRng:
    def test_determinism(self):
        a = SeededRng(12345, stream=7).bytes(64)
        b = SeededRng(12345, stream=7).bytes(64)
        assert a == b

    def test_streams_differ(self):
        a = SeededRng(12345, stream=0).bytes(64)
        b = SeededRng(12345, stream=1).bytes(64)
        assert a != b

    def test_seeds_differ(self):
        assert SeededRng(1).bytes(32) != SeededRng(2).bytes(32)

    def test_child_is_stream(self):
        root = SeededRng(99, stream=5)
        assert root.child(3).bytes(16) == SeededRng(99, stream=3).bytes(16)

    def test_generator_reproducible(self):
        x = SeededRng(42).generator().normal(size=10)
        y = SeededRng(42).generator().normal(size=10)
        assert np.array_equal(x, y)

    def test_bad_seed_rejected(self):
        with pytest.raises(InvalidParams):
            SeededRng(-1)
        with pytest.raises(InvalidParams):
            SeededRng(2 ** 64)
        with pytest.raises(InvalidParams):
            SeededRng(0, stream=2 ** 32)


def test_seed_from_env(monkeypatch):
    monkeypatch.delenv(core.ENV_SEED, raising=False)
    assert seed_from_env(777) == 777
    monkeypatch.setenv(core.ENV_SEED, "123")
    assert seed_from_env(777) == 123
    monkeypatch.setenv(core.ENV_SEED, "0x10")
    assert seed_from_env(777) == 16
    monkeypatch.setenv(core.ENV_SEED, "  ")
    assert seed_from_env(777) == 777


class TestDiscretizationScheme:
    def test_n_bins(self):
        assert DiscretizationScheme(0.1, 51.2, 10).n_bins == 1024
        assert DiscretizationScheme(0.5, 2.0, 3).n_bins == 8

    def test_valid_scheme_has_no_issues(self):
        assert DiscretizationScheme(0.1, 51.2, 10).issues() == []

    def test_asymmetric_grid_flagged(self):
        bad = DiscretizationScheme(0.1, 50.0, 10)
        assert any(code == "InvalidScheme" for code, _ in bad.issues())

    def test_nonpositive_delta_flagged(self):
        assert DiscretizationScheme(0.0, 0.0, 10).issues()
        assert DiscretizationScheme(-1.0, -512.0, 10).issues()

    def test_scaled_preserves_validity(self):
        s = DiscretizationScheme(0.1, 51.2, 10).scaled(1.0 / math.sqrt(2.0))
        assert s.issues() == []
        assert s.delta == pytest.approx(0.1 / math.sqrt(2.0), rel=1e-15)

    def test_edges_and_centers(self):
        s = DiscretizationScheme(0.5, 2.0, 3)
        edges = s.bin_edges()
        centers = s.bin_centers()
        assert edges[0] == -2.0 and edges[-1] == 2.0
        assert len(edges) == 9 and len(centers) == 8
        assert np.allclose(centers, (edges[:-1] + edges[1:]) / 2.0)


class TestEpsilonBudget:
    def test_valid_chain(self):
        b = EpsilonBudget(eps_a=1e-7, eps_1=1e-8, eps_2=1e-9, eps_cut=1e-10)
        assert b.issues() == []

    def test_partial_budget_ok(self):
        assert EpsilonBudget(eps_a=1e-7).issues() == []
        assert EpsilonBudget(eps_a=1e-7, eps_2=1e-9).issues() == []

    def test_chain_weights(self):
        # eps_a > 4 eps_1 is required: equality fails, slack passes
        assert EpsilonBudget(eps_a=4e-8, eps_1=1e-8).issues()
        assert EpsilonBudget(eps_a=4.1e-8, eps_1=1e-8).issues() == []
        # between subordinate epsilons the weights cancel
        assert EpsilonBudget(eps_a=1e-6, eps_1=1e-8, eps_2=1e-8).issues()

    def test_out_of_range(self):
        assert EpsilonBudget(eps_a=0.0).issues()
        assert EpsilonBudget(eps_a=1.5).issues()
        assert EpsilonBudget(eps_a=1e-7, eps_1=-1e-8).issues()


class TestMemoryAssumption:
    def test_default_is_valid(self):
        assert MemoryAssumption().issues() == []

    def test_bad_encoding(self):
        assert MemoryAssumption(encoding="classical").issues()

    def test_ranges(self):
        assert MemoryAssumption(nu=-0.1).issues()
        assert MemoryAssumption(eta=1.5).issues()
        assert MemoryAssumption(xi=0.0).issues()
        assert MemoryAssumption(encoding="iid", iid_block=0).issues()
        assert MemoryAssumption(encoding="gaussian", iid_block=0).issues() == []


def test_validate_params_collects_all():
    with pytest.raises(InvalidParams) as exc:
        validate_params(DiscretizationScheme(-1.0, 51.2, 10),
                        EpsilonBudget(eps_a=2.0),
                        MemoryAssumption(eta=-1.0))
    assert len(exc.value.issues) >= 3


class TestConfig:
    def test_parse_basics(self):
        cfg = core.parse_config("a = 1\nb = 2.5\nc = true\nd = text\n# comment\n\ne = 0x10\n")
        assert cfg == {"a": 1, "b": 2.5, "c": True, "d": "text", "e": 16}

    def test_parse_rejects_garbage(self):
        with pytest.raises(InvalidParams):
            core.parse_config("just words\n")
        with pytest.raises(InvalidParams):
            core.parse_config("= 3\n")

    def test_file_round_trip(self, tmp_path):
        cfg = {"sigma_a": 4.838, "rho": 0.996, "bits": 10, "snu": True, "tag": "run1"}
        path = tmp_path / "run.cfg"
        core.save_config(cfg, str(path))
        assert core.load_config(str(path)) == cfg

    @given(st.dictionaries(
        st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True),
        st.one_of(st.booleans(),
                  st.integers(min_value=-10 ** 12, max_value=10 ** 12),
                  st.floats(allow_nan=False, allow_infinity=False, width=64)),
        max_size=8))
    def test_round_trip_any_scalars(self, cfg):
        assert core.parse_config(core.dump_config(cfg)) == cfg
