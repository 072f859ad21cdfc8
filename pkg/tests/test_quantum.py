import numpy as np
import pytest

from kerrpolariton.errors import InvalidDimensionError, LayoutError, SpaceMismatchError, ValidationError
from kerrpolariton.quantum import (
    Operator,
    QuantumState,
    SpaceDescriptor,
    add,
    annihilation,
    commutator,
    creation,
    density_matrix,
    embed,
    expectation,
    identity,
    multiply,
    number,
    pauli,
    product_ket,
    scale,
)


def test_annihilation_dim2():
    assert np.array_equal(annihilation(2).matrix, [[0, 1], [0, 0]])


def test_annihilation_dim3_entries():
    a = annihilation(3).matrix
    expected = np.zeros((3, 3))
    expected[0, 1] = 1.0
    expected[1, 2] = np.sqrt(2.0)
    assert np.array_equal(a, expected)


def test_truncated_commutator_dim8():
    c = commutator(annihilation(8), creation(8)).matrix
    expected = np.eye(8)
    expected[7, 7] = -7.0
    np.testing.assert_allclose(c, expected, atol=1e-14)


@pytest.mark.parametrize("dim", [0, 1, -3])
def test_annihilation_rejects_small_dims(dim):
    with pytest.raises(InvalidDimensionError):
        annihilation(dim)


def test_number_operator_is_adag_a():
    a = annihilation(6)
    np.testing.assert_allclose((a.dag() @ a).matrix, number(6).matrix, atol=1e-14)


def test_pauli_conventions():
    z, sp, sm = pauli("z"), pauli("plus"), pauli("minus")
    assert np.array_equal(z.matrix, np.diag([1.0, -1.0]))
    assert np.array_equal((sp @ sm).matrix, np.diag([1.0, 0.0]))
    assert np.array_equal(commutator(sp, sm).matrix, z.matrix)
    assert np.array_equal(sm.matrix, sp.dag().matrix)


def test_sigma_plus_raises_ground():
    ground = np.array([0.0, 1.0])
    np.testing.assert_array_equal(pauli("plus").matrix @ ground, [1.0, 0.0])


def test_unknown_pauli():
    with pytest.raises(ValidationError):
        pauli("w")


def test_embed_identity_gives_identity():
    space = SpaceDescriptor((2, 3, 4))
    for slot, d in enumerate(space.factors):
        assert np.array_equal(embed(identity(d), slot, space).matrix, np.eye(24))


def test_embed_kronecker_order():
    big = embed(pauli("z"), 0, SpaceDescriptor((2, 3)))
    assert np.array_equal(big.matrix, np.diag([1, 1, 1, -1, -1, -1]))


def test_embedded_commutator_matches_truncated_commutator():
    space = SpaceDescriptor((2, 5))
    a = embed(annihilation(5), 1, space)
    ad = embed(creation(5), 1, space)
    lhs = (a @ ad - ad @ a).matrix
    rhs = embed(commutator(annihilation(5), creation(5)), 1, space).matrix
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_embed_errors():
    space = SpaceDescriptor((2, 3))
    with pytest.raises(LayoutError):
        embed(pauli("z"), 2, space)
    with pytest.raises(InvalidDimensionError):
        embed(pauli("z"), 1, space)


def test_space_descriptor_invariants():
    assert SpaceDescriptor((2, 3, 4)).dim == 24
    with pytest.raises(InvalidDimensionError):
        SpaceDescriptor((2, 1))
    with pytest.raises(InvalidDimensionError):
        SpaceDescriptor(())
    with pytest.raises(InvalidDimensionError):
        SpaceDescriptor((2, 3), ("spin1",))
    sp = SpaceDescriptor((2, 10), ("spin1", "lp"))
    assert sp.slot("lp") == 1
    with pytest.raises(LayoutError):
        sp.slot("hp")


def test_operator_shape_checked_and_frozen():
    with pytest.raises(InvalidDimensionError):
        Operator(SpaceDescriptor((2, 2)), np.eye(3))
    op = identity(SpaceDescriptor((2, 2)))
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 5.0


def test_arithmetic_helpers():
    x = pauli("x")
    assert np.array_equal(commutator(x, x).matrix, np.zeros((2, 2)))
    assert np.array_equal(add(x, x).matrix, scale(x, 2).matrix)
    assert np.array_equal(multiply(x, x).matrix, np.eye(2))
    assert (x / 2).matrix[0, 1] == 0.5


def test_space_mismatch():
    a = identity(SpaceDescriptor((2, 3)))
    b = identity(SpaceDescriptor((3, 2)))
    with pytest.raises(SpaceMismatchError):
        a + b
    with pytest.raises(SpaceMismatchError):
        a @ b
    with pytest.raises(SpaceMismatchError):
        expectation(a, product_ket(SpaceDescriptor((3, 2)), (0, 0)))


def test_expectations():
    excited = product_ket(SpaceDescriptor((2,)), (0,))
    assert expectation(pauli("z"), excited) == pytest.approx(1.0)
    fock2 = product_ket(SpaceDescriptor((5,)), (2,))
    assert expectation(number(5), fock2) == pytest.approx(2.0)
    assert expectation(number(5), density_matrix(fock2)) == pytest.approx(2.0)


def test_state_validation():
    sp = SpaceDescriptor((2,))
    QuantumState(sp, np.array([1.0, 0.0])).validate()
    with pytest.raises(ValidationError):
        QuantumState(sp, np.array([1.0, 1.0])).validate()
    with pytest.raises(ValidationError):
        QuantumState(sp, np.diag([0.6, 0.6])).validate()
    with pytest.raises(ValidationError):
        QuantumState(sp, np.array([[0.5, 0.3], [0.1, 0.5]])).validate()
    with pytest.raises(ValidationError):
        QuantumState(sp, np.diag([1.1, -0.1])).validate()
    with pytest.raises(InvalidDimensionError):
        QuantumState(sp, np.ones(3))


def test_product_ket_levels():
    space = SpaceDescriptor((2, 2, 3))
    psi = product_ket(space, (0, 1, 2)).data
    assert np.flatnonzero(psi).tolist() == [0 * 6 + 1 * 3 + 2]
    with pytest.raises(LayoutError):
        product_ket(space, (0, 1))
