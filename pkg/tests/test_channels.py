import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci
from scipy.stats import norm

from mbios_bounds.channels import (
    BEC, BIAWGN, BSC, INF, Custom, GaussianPart, LlrDensity, QuantizerLevels, TabulatedPart,
    biawgn_for_capacity, biawgn_from_ebn0, capacity, cell_probabilities, density_from_dict,
    ebn0_from_sigma, error_weight, llr_density, load_custom_channel, quantity_a, tanh_moment,
)
from mbios_bounds.numerics import DomainError, h2


def quad_capacity(sigma):
    """C = 1 - E[log2(1 + e^{-L})], an independent route to capacity."""
    m, s = 2 / sigma**2, 2 / sigma
    f = lambda l: norm.pdf(l, m, s) * np.logaddexp(0, -l) / math.log(2)
    return 1 - sci.quad(f, m - 40 * s, m + 40 * s, epsabs=1e-13, limit=400)[0]


def quad_moment(sigma, p):
    m, s = 2 / sigma**2, 2 / sigma
    f = lambda l: norm.pdf(l, m, s) * math.tanh(l / 2) ** (2 * p)
    return sci.quad(f, m - 40 * s, m + 40 * s, epsabs=1e-13, limit=400)[0]


def test_llr_densities_of_standard_channels():
    assert llr_density(BEC(0.5)).atoms == ((0.0, 0.5), (INF, 0.5))
    d = llr_density(BSC(0.25))
    assert [v for atom in d.atoms for v in atom] == pytest.approx([-math.log(3), 0.25, math.log(3), 0.75])
    g = llr_density(BIAWGN(1.0)).continuous
    assert (g.mean, g.var) == (2.0, 4.0)
    ls = np.linspace(0.1, 20, 64)
    assert g.pdf(ls) == pytest.approx(np.exp(ls) * g.pdf(-ls), rel=1e-10)


@pytest.mark.parametrize("ch", [BEC(0.0), BEC(1.0), BSC(0.0), BSC(0.5), BEC(0.3), BSC(0.07)])
def test_edge_parameters_build_valid_densities(ch):
    d = llr_density(ch)
    assert sum(m for _, m in d.atoms) == pytest.approx(1.0)


def test_capacity_values():
    assert capacity(BEC(0.5)) == 0.5
    assert capacity(BSC(0.11)) == pytest.approx(0.4999, abs=2e-4)
    assert capacity(biawgn_from_ebn0(0.187, 0.5)) == pytest.approx(0.5, abs=5e-4)
    assert capacity(biawgn_from_ebn0(-0.495, 1 / 3)) == pytest.approx(1 / 3, abs=5e-4)


@pytest.mark.parametrize("eps", [0.01, 0.11, 0.3, 0.49])
def test_bsc_capacity_matches_closed_form(eps):
    assert capacity(BSC(eps)) == pytest.approx(1 - h2(eps), abs=1e-13)


@pytest.mark.parametrize("sigma", [0.4, 0.8, 0.97869, 1.3, 2.5])
def test_biawgn_capacity_against_independent_route(sigma):
    assert capacity(BIAWGN(sigma)) == pytest.approx(quad_capacity(sigma), abs=1e-9)


def test_error_weight():
    assert error_weight(BEC(0.3)) == pytest.approx(0.15)
    assert error_weight(BSC(0.2)) == pytest.approx(0.2)
    assert error_weight(BIAWGN(1.0)) == pytest.approx(0.15866, abs=1e-5)
    assert error_weight(BIAWGN(0.7)) == pytest.approx(norm.sf(1 / 0.7), abs=1e-13)


@pytest.mark.parametrize("p", [1, 2, 5, 10])
def test_tanh_moments(p):
    assert tanh_moment(BSC(0.1), p) == pytest.approx(0.8 ** (2 * p), abs=1e-12)
    assert tanh_moment(BEC(0.3), p) == pytest.approx(0.7, abs=1e-12)
    assert tanh_moment(BIAWGN(0.9), p) == pytest.approx(quad_moment(0.9, p), abs=1e-10)


def test_tanh_moment_via_general_path_matches_closed_forms():
    # a custom channel goes through the generic atom code, not the fast path
    for ch in (BSC(0.1), BEC(0.3)):
        custom = Custom(llr_density(ch))
        for p in (1, 3, 7):
            assert tanh_moment(custom, p) == pytest.approx(tanh_moment(ch, p), abs=1e-12)
        assert capacity(custom) == pytest.approx(capacity(ch), abs=1e-12)


def test_quantity_a():
    assert quantity_a(BEC(0.4)) == pytest.approx(0.6)
    assert quantity_a(BSC(0.1)) == pytest.approx(0.64)
    ch = BIAWGN(1.0)
    a = quantity_a(ch)
    assert max(capacity(ch), (1 - 2 * error_weight(ch)) ** 2) <= a <= 1
    assert a == tanh_moment(ch, 1)


def test_moments_decrease_with_order():
    ch = BIAWGN(1.1)
    g = [tanh_moment(ch, p) for p in range(1, 12)]
    assert all(b <= a for a, b in zip(g, g[1:]))


@pytest.mark.parametrize("family, grid", [
    (BIAWGN, np.linspace(0.3, 3, 12)), (BSC, np.linspace(0.01, 0.49, 12)), (BEC, np.linspace(0.01, 0.99, 12)),
])
def test_quantities_monotone_in_noise(family, grid):
    chans = [family(float(v)) for v in grid]
    c = [capacity(ch) for ch in chans]
    w = [error_weight(ch) for ch in chans]
    a = [quantity_a(ch) for ch in chans]
    assert all(y <= x + 1e-15 for x, y in zip(c, c[1:]))
    assert all(y >= x - 1e-15 for x, y in zip(w, w[1:]))
    assert all(y <= x + 1e-15 for x, y in zip(a, a[1:]))


def test_bsc_cell_probabilities():
    eps = 0.1
    l0 = math.log(9)
    below = cell_probabilities(BSC(eps), QuantizerLevels((l0 / 2,), 2)).probs
    above = cell_probabilities(BSC(eps), QuantizerLevels((l0 * 2,), 2)).probs
    assert below == pytest.approx((0.9, 0, 0, 0.1))
    assert above == pytest.approx((0, 0.9, 0.1, 0))


def test_bec_cell_probabilities_split_zero_atom():
    assert cell_probabilities(BEC(0.4), QuantizerLevels((1.0, 0.5, 0.2), 3)).probs == pytest.approx(
        (0.6, 0, 0, 0.2, 0.2, 0, 0, 0))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 3.0), st.lists(st.floats(0.0, 30.0), min_size=3, max_size=3))
def test_cell_probabilities_sum_and_order(sigma, raw):
    levels = tuple(sorted(raw, reverse=True))
    probs = cell_probabilities(BIAWGN(sigma), QuantizerLevels(levels, 3))
    assert sum(probs.probs) == pytest.approx(1.0, abs=1e-10)
    for good, bad in probs.pairs():
        assert good >= bad - 1e-15


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 3.0), st.lists(st.floats(0.0, 30.0), min_size=3, max_size=3),
       st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
def test_refinement_merges_back(sigma, raw, fractions):
    coarse = sorted(raw, reverse=True)
    # one extra level inside each coarse cell; even-indexed fine levels equal the coarse ones
    inner = [coarse[0] + 5.0 * fractions[0]]
    for j, m in enumerate(coarse):
        nxt = coarse[j + 1] if j + 1 < len(coarse) else 0.0
        inner.append(min(m, nxt + fractions[j + 1] * (m - nxt)))
    fine = [inner[0]]
    for m, extra in zip(coarse, inner[1:]):
        fine += [m, extra]
    ch = BIAWGN(sigma)
    pc = cell_probabilities(ch, QuantizerLevels(tuple(coarse), 3)).probs
    pf = cell_probabilities(ch, QuantizerLevels(tuple(fine), 4)).probs
    merged = [pf[2 * i] + pf[2 * i + 1] for i in range(8)]
    assert merged == pytest.approx(pc, abs=1e-12)


def test_ebn0_mapping():
    assert biawgn_from_ebn0(0.0, 0.5).sigma == pytest.approx(1.0)
    assert biawgn_from_ebn0(0.187, 0.5).sigma == pytest.approx(0.97869, abs=5e-5)
    assert ebn0_from_sigma(biawgn_from_ebn0(1.3, 0.3).sigma, 0.3) == pytest.approx(1.3)
    with pytest.raises(DomainError):
        biawgn_from_ebn0(1.0, 0.0)


def test_channel_for_capacity():
    assert capacity(biawgn_for_capacity(0.5)) == pytest.approx(0.5, abs=1e-12)


def test_validation_errors():
    with pytest.raises(DomainError):
        BEC(1.5)
    with pytest.raises(DomainError):
        BSC(0.6)
    with pytest.raises(DomainError):
        BIAWGN(0.0)
    with pytest.raises(DomainError):
        LlrDensity(atoms=((1.0, 0.5), (-1.0, 0.5)))  # not symmetric
    with pytest.raises(DomainError):
        LlrDensity(atoms=((0.0, 0.7),))  # not normalized
    with pytest.raises(DomainError):
        LlrDensity(continuous=GaussianPart(1.0, 1.0))  # variance must be twice the mean


def test_custom_gaussian_matches_biawgn(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"continuous": {"type": "gaussian", "mean": 2.0, "var": 4.0}}))
    ch = load_custom_channel(path)
    assert capacity(ch) == pytest.approx(capacity(BIAWGN(1.0)), abs=1e-12)
    assert tanh_moment(ch, 3) == pytest.approx(tanh_moment(BIAWGN(1.0), 3), abs=1e-12)


def test_custom_mixture_with_atoms():
    # half BEC(0.5), half BIAWGN(1): capacity is linear in the mixture
    dens = density_from_dict({"atoms": [[0, 0.25], ["inf", 0.25]],
                              "continuous": {"type": "gaussian", "mean": 2.0, "var": 4.0, "weight": 0.5}})
    ch = Custom(dens)
    assert capacity(ch) == pytest.approx(0.5 * capacity(BEC(0.5)) + 0.5 * capacity(BIAWGN(1.0)), abs=1e-11)
    assert error_weight(ch) == pytest.approx(0.5 * 0.25 + 0.5 * error_weight(BIAWGN(1.0)))


def test_tabulated_density_close_to_gaussian():
    g = GaussianPart(2.0, 4.0)
    xs = np.linspace(-26, 30, 20001)
    tab = LlrDensity(continuous=TabulatedPart(tuple(zip(xs, g.pdf(xs)))), symmetry_rtol=1e-3)
    ch = Custom(tab)
    assert capacity(ch) == pytest.approx(capacity(BIAWGN(1.0)), abs=1e-6)
    assert error_weight(ch) == pytest.approx(error_weight(BIAWGN(1.0)), abs=1e-6)


def test_tabulated_asymmetric_is_rejected():
    xs = np.linspace(-5, 5, 101)
    with pytest.raises(DomainError):
        LlrDensity(continuous=TabulatedPart(tuple(zip(xs, np.exp(-((xs - 1) ** 2))))))


def test_bad_custom_json_names_field():
    with pytest.raises(DomainError, match="continuous.type"):
        density_from_dict({"continuous": {"type": "laplace"}})
