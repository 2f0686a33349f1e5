import numpy as np
import pytest
from hypothesis import given, strategies as st

from allpaysearch.auction import AuctionScene, allpay_profile, firstprice_high_cdf
from allpaysearch.bids import Atom, BidDistribution, PowerSegment, ks_distance

scenes = st.builds(
    AuctionScene,
    st.integers(2, 6),
    st.floats(0.01, 0.99),
    st.floats(0.01, 0.99),
)


def test_point_mass():
    d = BidDistribution.point_mass(0.3)
    assert d.eval(0.2999) == 0.0
    assert d.eval(0.3) == 1.0
    assert d.eval_left(0.3) == 0.0
    assert d.mean() == 0.3
    assert d.inverse(0.0) == 0.3
    assert d.inverse(0.999) == 0.3


def test_uniform_segment():
    d = BidDistribution(segments=(PowerSegment(0.0, 1.0, 1),))
    assert d.eval(0.25) == 0.25
    assert d.inverse(0.75) == 0.75
    assert d.mean() == pytest.approx(0.5)


def test_atom_then_segment():
    # half the mass at 0, then uniform on [0, 0.5] with density 1
    d = BidDistribution(
        segments=(PowerSegment(0.0, 0.5, 1, shift=0.5),),
        atoms=(Atom(0.0, 0.5),),
    )
    assert d.eval(0.0) == 0.5
    assert d.eval_left(0.0) == 0.0
    assert d.eval(0.25) == pytest.approx(0.75)
    assert d.inverse(0.25) == 0.0
    assert d.inverse(0.75) == pytest.approx(0.25)
    assert d.mean() == pytest.approx(0.5 * 0.25)


def test_overlap_rejected():
    with pytest.raises(ValueError, match="overlap"):
        BidDistribution(segments=(PowerSegment(0.0, 0.6, 1), PowerSegment(0.5, 1.0, 1)))


def test_mass_must_be_one():
    with pytest.raises(ValueError, match="total mass"):
        BidDistribution(segments=(PowerSegment(0.0, 0.5, 1),))


def test_interior_atom_rejected():
    with pytest.raises(ValueError, match="interior"):
        BidDistribution(segments=(PowerSegment(0.0, 0.5, 1, shift=0.5),), atoms=(Atom(0.2, 0.5),))


def test_inverse_rejects_one():
    with pytest.raises(ValueError):
        BidDistribution.point_mass(0.0).inverse(1.0)


def test_ks_exact_quantiles_small():
    d = BidDistribution(segments=(PowerSegment(0.0, 1.0, 1),))
    u = (np.arange(10_000) + 0.5) / 10_000
    assert ks_distance(d.inverse(u), d) <= 0.5 / 10_000 + 1e-12


def test_ks_with_atom_detects_missing_mass():
    d = BidDistribution.point_mass(0.5)
    assert ks_distance(np.full(100, 0.5), d) == 0.0
    assert ks_distance(np.full(100, 0.4), d) == 1.0


@given(scenes)
def test_equilibrium_cdfs_are_distributions(scene):
    for d in allpay_profile(scene):
        assert d.total_mass() == pytest.approx(1.0, abs=1e-12)
        grid = np.linspace(-0.1, 1.1, 241)
        g = d.eval(grid)
        assert np.all(np.diff(g) >= -1e-15)
        assert g[0] == 0.0 and g[-1] == 1.0
        assert np.all(d.eval_left(grid) <= g + 1e-15)


@given(scenes, st.floats(0.0, 0.999))
def test_inverse_inverts(scene, u):
    for d in allpay_profile(scene):
        p = d.inverse(u)
        assert d.eval(p) >= u - 1e-12
        assert d.eval_left(p) <= u + 1e-12


@given(scenes, st.floats(0.0, 0.999))
def test_firstprice_inverse_round_trip(scene, u):
    d = firstprice_high_cdf(scene)
    assert d.eval(d.inverse(u)) == pytest.approx(u, abs=1e-10)
