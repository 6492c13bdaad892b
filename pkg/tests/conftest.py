from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import HealthCheck, settings

from shubin_trace.poly import GaussianRational, GeneralizedMonomial, TermBundle

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

small_fractions = st.fractions(min_value=-3, max_value=3, max_denominator=4)
gaussians = st.builds(GaussianRational, small_fractions, small_fractions)
radials = st.sampled_from([Fraction(0), Fraction(-1), Fraction(-2), Fraction(1), Fraction(1, 2), Fraction(-3, 2)])


@st.composite
def bundles(draw, nvars=2, max_terms=4, max_exp=3, radial=True):
    terms = []
    for _ in range(draw(st.integers(0, max_terms))):
        exps = tuple(draw(st.integers(0, max_exp)) for _ in range(nvars))
        s = draw(radials) if radial else Fraction(0)
        terms.append(GeneralizedMonomial(draw(gaussians), exps, s))
    return TermBundle.from_terms(terms, nvars)


@st.composite
def homogeneous_bundles(draw, nvars=2, degree=Fraction(2), max_terms=4, max_exp=3):
    terms = []
    for _ in range(draw(st.integers(1, max_terms))):
        exps = tuple(draw(st.integers(0, max_exp)) for _ in range(nvars))
        terms.append(GeneralizedMonomial(draw(gaussians), exps, degree - sum(exps)))
    return TermBundle.from_terms(terms, nvars)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
