import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import modalpf as m


def test_parse_ex1_is_linear(ex1):
    assert ex1.n == 4
    assert ex1.max_order == 1
    assert ex1.A[2, 0] == -20


def test_parse_ex2_has_quadratic_term(ex2):
    assert ex2.max_order == 2
    assert ex2.tensors[2][(2, (0, 2))] == -2.0


def test_noncanonical_entries_fold_by_summation():
    doc = {
        "n": 4,
        "A": np.zeros((4, 4)).tolist(),
        "tensors": [
            {
                "order": 2,
                "entries": [
                    {"k": 3, "index": [1, 3], "coeff": -1.0},
                    {"k": 3, "index": [3, 1], "coeff": -1.0},
                ],
            }
        ],
    }
    sys = m.parse_model(json.dumps(doc))
    assert sys.tensors[2] == {(2, (0, 2)): -2.0}


def test_parse_rejects_bad_documents():
    with pytest.raises(m.ModelFormatError):
        m.parse_model("{not json")
    with pytest.raises(m.ModelFormatError):
        m.parse_model(json.dumps({"n": 3, "A": [[0, 0], [0, 0]]}))
    with pytest.raises(m.ModelFormatError):
        m.parse_model(
            json.dumps(
                {
                    "n": 2,
                    "A": [[0, 0], [0, 0]],
                    "tensors": [{"order": 2, "entries": [{"k": 1, "index": [1, 3], "coeff": 1.0}]}],
                }
            )
        )
    with pytest.raises(m.ModelFormatError):
        m.parse_model(
            json.dumps(
                {
                    "n": 2,
                    "A": [[0, 0], [0, 0]],
                    "tensors": [{"order": 2, "entries": [{"k": 1, "index": [1, 1], "coeff": "nan"}]}],
                }
            )
        )


def test_evaluate_rhs_ex2_hand_value(ex2):
    # A x at (1,0,1,0) is (1, 0, -21, 5); the quadratic adds (0, 0, -2, 0)
    x = np.array([1.0, 0.0, 1.0, 0.0])
    np.testing.assert_allclose(m.evaluate_rhs(ex2, x), [1.0, 0.0, -23.0, 5.0])


def test_evaluate_rhs_zero_at_origin(ex2):
    np.testing.assert_array_equal(m.evaluate_rhs(ex2, np.zeros(4)), np.zeros(4))


def test_evaluate_rhs_linear_system_is_first_column(ex1):
    e1 = np.zeros(4)
    e1[0] = 1.0
    np.testing.assert_array_equal(m.evaluate_rhs(ex1, e1), ex1.A[:, 0])


def test_evaluate_rhs_linear_in_each_coefficient(ex2):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(4)
    base = m.evaluate_rhs(ex2, x)
    doubled = m.PolynomialSystem(n=4, A=ex2.A, tensors={2: {(2, (0, 2)): -4.0}})
    diff = m.evaluate_rhs(doubled, x) - base
    # doubling the only stored coefficient doubles its monomial contribution
    np.testing.assert_allclose(diff, [0.0, 0.0, -2.0 * x[0] * x[2], 0.0], atol=1e-14)


def test_linear_systems_evaluate_exactly_as_Ax(ex1):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x = rng.standard_normal(4) * rng.uniform(0.1, 10)
        np.testing.assert_array_equal(m.evaluate_rhs(ex1, x), ex1.A @ x)


def test_roundtrip_is_idempotent(ex2):
    once = m.parse_model(m.serialize_model(ex2))
    twice = m.parse_model(m.serialize_model(once))
    assert once.tensors == twice.tensors == ex2.tensors
    np.testing.assert_array_equal(once.A, ex2.A)


@given(
    entries=st.lists(
        st.tuples(
            st.integers(0, 2),
            st.tuples(st.integers(0, 2), st.integers(0, 2)),
            st.floats(-5, 5, allow_nan=False),
        ),
        max_size=8,
    )
)
@settings(max_examples=50, deadline=None)
def test_folding_is_order_independent(entries):
    # feeding the same entries under any index ordering folds to one canonical table
    def doc(perm):
        return json.dumps(
            {
                "n": 3,
                "A": np.zeros((3, 3)).tolist(),
                "tensors": [
                    {
                        "order": 2,
                        "entries": [
                            {"k": k + 1, "index": [m_[0] + 1, m_[1] + 1], "coeff": c}
                            for k, m_, c in perm
                        ],
                    }
                ],
            }
        )

    flipped = [(k, (mi[1], mi[0]), c) for k, mi, c in entries]
    a = m.parse_model(doc(entries))
    b = m.parse_model(doc(flipped))
    assert set(a.tensors.get(2, {})) == set(b.tensors.get(2, {}))
    for key, val in a.tensors.get(2, {}).items():
        assert b.tensors[2][key] == pytest.approx(val, abs=1e-12)


def test_ordering_multiplicity():
    assert m.ordering_multiplicity((0, 1)) == 2
    assert m.ordering_multiplicity((1, 1)) == 1
    assert m.ordering_multiplicity((0, 1, 2)) == 6
    assert m.ordering_multiplicity((0, 0, 1)) == 3
    assert m.ordering_multiplicity((2, 2, 2)) == 1
