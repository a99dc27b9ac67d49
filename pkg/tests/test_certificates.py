from fractions import Fraction

import pytest

from termcert.certificates import (
    CertificateError,
    CertParams,
    eval_cert,
    parse_certificate,
)
from termcert.extreal import INF, ExtReal
from termcert.valuation import Valuation


def test_eval_running_example_values(halving):
    cfg, _, cert = halving
    assert eval_cert(cert, "f", 1, Valuation({"n": 5}), cfg) == ExtReal(56)
    assert eval_cert(cert, "f", 7, Valuation({"n": -3}), cfg) == ExtReal(0)
    assert eval_cert(cert, "f", 2, Valuation({"n": 0}), cfg) == INF
    # fractional coordinate: value at the handoff label for n = 2
    assert eval_cert(cert, "f", 5, Valuation({"n": 2}), cfg) == ExtReal(Fraction(21, 2))


def test_first_matching_guard_wins():
    cert = parse_certificate("f@1: [n >= 0] 1 ; [n >= 0] 2 ; 3\n")
    assert cert.value("f", 1, Valuation({"n": 0})) == ExtReal(1)
    assert cert.value("f", 1, Valuation({"n": -1})) == ExtReal(3)


def test_unmatched_point_is_infinite():
    cert = parse_certificate("f@1: [n >= 1] n\n")
    assert cert.value("f", 1, Valuation({"n": 0})) == INF


def test_terminal_without_stanza_defaults_to_zero():
    cert = parse_certificate("f@1: 5\n")
    assert cert.value("f", 9, Valuation({"n": 3}), is_terminal=True) == ExtReal(0)
    assert cert.value("f", 9, Valuation({"n": 3}), is_terminal=False) == INF


def test_negative_value_is_a_format_error():
    cert = parse_certificate("f@1: 2*n - 4\n")
    with pytest.raises(CertificateError):
        cert.value("f", 1, Valuation({"n": 0}))


def test_power_expressions_use_exact_big_integers():
    cert = parse_certificate("f@1: [n >= 0] 2^(n+1) + 4\n")
    got = cert.value("f", 1, Valuation({"n": 100}))
    assert got == ExtReal(2**101 + 4)


def test_decimal_and_fraction_literals_are_exact():
    cert = parse_certificate("f@1: 13.5 ; 2\nf@2: 27/2\n")
    assert cert.value("f", 1, Valuation({})) == ExtReal(Fraction(27, 2))
    assert cert.value("f", 2, Valuation({})) == ExtReal(Fraction(27, 2))


def test_ill_defined_arithmetic_raises():
    from termcert.lang import EvalError

    cert = parse_certificate("f@1: 2 ^ (n - 5)\nf@2: n div (n - n)\n")
    with pytest.raises(EvalError):
        cert.value("f", 1, Valuation({"n": 0}))  # negative exponent
    with pytest.raises(EvalError):
        cert.value("f", 2, Valuation({"n": 3}))  # division by zero
    assert cert.value("f", 1, Valuation({"n": 7})) == ExtReal(4)


def test_params_header_parses():
    cert = parse_certificate("eps=1 delta=13 zeta=13\nf@1: 0\n")
    assert cert.params == CertParams(Fraction(1), Fraction(13), Fraction(13))


def test_params_reject_expected_decrease_window_inversion():
    with pytest.raises(CertificateError):
        CertParams(eps=Fraction(3), delta=Fraction(2))
    with pytest.raises(CertificateError):
        CertParams(eps=Fraction(0))


def test_duplicate_stanza_rejected():
    with pytest.raises(CertificateError):
        parse_certificate("f@1: 0\nf@1: 1\n")


def test_render_round_trips():
    text = "eps=1 delta=13 zeta=13\nf@1: [n >= 1] 12*n - 4 ; [n <= 0] 2\nf@7: 0\n"
    cert = parse_certificate(text)
    again = parse_certificate(cert.render())
    assert again.stanzas == cert.stanzas
    assert again.params == cert.params


def test_digest_is_stable(halving):
    _, _, cert = halving
    assert cert.digest() == cert.digest()
    other = parse_certificate("f@1: 1\n")
    assert cert.digest() != other.digest()
