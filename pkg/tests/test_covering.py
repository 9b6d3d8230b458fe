import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdedim.covering import (NormSpec, build_net, covering_bound, net_to_csv,
                             verify_covering)
from fdedim.errors import ConfigError


class TestNormSpec:
    def test_validation(self):
        with pytest.raises(ConfigError):
            NormSpec(0, "sup")
        with pytest.raises(ConfigError):
            NormSpec(2, "manhattan")
        with pytest.raises(ConfigError):
            NormSpec(2, "weighted-sup", (1.0,))
        with pytest.raises(ConfigError):
            NormSpec(2, "weighted-sup", (1.0, -1.0))
        with pytest.raises(ConfigError):
            NormSpec(2, "sup", (1.0, 1.0))

    def test_norms(self):
        v = np.array([3.0, -4.0])
        assert NormSpec(2, "sup").norm(v) == 4.0
        assert NormSpec(2, "euclidean").norm(v) == 5.0
        assert NormSpec(2, "weighted-sup", (2.0, 0.5)).norm(v) == 6.0


class TestCoveringBound:
    def test_arithmetic_examples(self):
        assert covering_bound(1, 3.0, 1.0) == 8.0
        assert covering_bound(2, 2.0, 1.0) == 72.0

    def test_increasing_in_m(self):
        for ratio in (1.5, 4.0, 10.0):
            vals = [covering_bound(m, ratio, 1.0) for m in range(1, 7)]
            assert all(v2 > v1 for v1, v2 in zip(vals, vals[1:]))

    def test_preconditions(self):
        with pytest.raises(ConfigError):
            covering_bound(2, 1.0, 1.0)
        with pytest.raises(ConfigError):
            covering_bound(2, 1.0, 2.0)


class TestBuildNet:
    def test_1d_interval(self):
        net = build_net(NormSpec(1, "sup"), 3.0, 1.0)
        assert len(net) <= 8  # the combinatorial bound
        rep = verify_covering(net, NormSpec(1, "sup"), 3.0, 1.0)
        assert rep["passed"]

    def test_near_equal_radii(self):
        net = build_net(NormSpec(1, "sup"), 1.0 + 1e-9, 1.0)
        assert len(net) == 1
        assert np.allclose(net[0], 0.0)

    def test_2d_euclidean(self):
        norm = NormSpec(2, "euclidean")
        net = build_net(norm, 2.0, 1.0)
        assert len(net) <= 72
        assert verify_covering(net, norm, 2.0, 1.0)["passed"]

    def test_scale_invariance(self):
        norm = NormSpec(2, "euclidean")
        a = build_net(norm, 2.0, 1.0)
        b = build_net(norm, 20.0, 10.0)
        assert len(a) == len(b)
        assert np.allclose(b, 10.0 * a)

    def test_weighted_sup(self):
        norm = NormSpec(2, "weighted-sup", (1.0, 2.0))
        net = build_net(norm, 2.0, 1.0)
        assert verify_covering(net, norm, 2.0, 1.0)["passed"]

    def test_randomized_below_bound(self):
        # joint (m, ratio) sampling keeps the greedy construction at desk
        # scale; the full 1000-trial sweep lives in the acceptance suite
        rng = np.random.default_rng(20)
        for _ in range(40):
            m = int(rng.integers(1, 5))
            ratio_cap = {1: 16.0, 2: 10.0, 3: 5.0, 4: 3.0}[m]
            ratio = rng.uniform(1.01, ratio_cap)
            kind = rng.choice(["sup", "euclidean"])
            norm = NormSpec(m, kind)
            net = build_net(norm, ratio, 1.0, random_probes=20_000)
            assert len(net) <= covering_bound(m, ratio, 1.0)
            assert verify_covering(net, norm, ratio, 1.0,
                                   probes=20_000)["passed"]


class TestVerifyCovering:
    def test_missing_center_detected(self):
        norm = NormSpec(1, "sup")
        net = build_net(norm, 3.0, 1.0)
        # drop the center covering the right edge
        edge = net[np.argmax(net[:, 0])]
        bad = net[net[:, 0] < edge[0]]
        rep = verify_covering(bad, norm, 3.0, 1.0)
        assert not rep["passed"]
        assert "witness_probe" in rep
        assert abs(rep["witness_probe"][0]) > 1.0

    def test_probe_scaling_stable(self):
        norm = NormSpec(2, "sup")
        net = build_net(norm, 2.0, 1.0)
        small = verify_covering(net, norm, 2.0, 1.0, probes=10_000)
        large = verify_covering(net, norm, 2.0, 1.0, probes=100_000)
        assert small["passed"] and large["passed"]

    def test_empty_centers_rejected(self):
        with pytest.raises(ConfigError):
            verify_covering(np.zeros((0, 2)), NormSpec(2, "sup"), 2.0, 1.0)


def test_net_csv():
    net = build_net(NormSpec(2, "sup"), 1.5, 1.0)
    buf = io.StringIO()
    net_to_csv(net, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == len(net) + 1


@given(st.integers(min_value=1, max_value=3),
       st.floats(min_value=1.05, max_value=4.0))
@settings(max_examples=15, deadline=None)
def test_net_size_never_exceeds_bound(m, ratio):
    norm = NormSpec(m, "sup")
    net = build_net(norm, ratio, 1.0, random_probes=5_000)
    assert len(net) <= covering_bound(m, ratio, 1.0)
