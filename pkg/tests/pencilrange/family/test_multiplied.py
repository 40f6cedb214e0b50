import numpy as np
import pytest

from pencilrange import gallery
from pencilrange.errors import InvalidSpec
from pencilrange.family import (
    BlockMultiplier,
    FunctionMultiplier,
    MatrixMultiplier,
    MultipliedFamily,
)
from pencilrange.family import stencil
from pencilrange.types import Multiplier, TruncationSpec

SPEC = TruncationSpec(n=9, half_length=2.0)


def test_function_multiplier_on_every_component():
    """Test if a function multiplier repeats its samples per component"""
    family = gallery.dirac1d()
    M = FunctionMultiplier(lambda x: 1 + x).matrix(family, SPEC)
    x = stencil.grid(SPEC)
    assert isinstance(FunctionMultiplier(1.0), Multiplier)
    assert np.allclose(np.diagonal(M), np.concatenate((1 + x, 1 + x)))


def test_block_multiplier():
    """Test if the two blocks get their own functions"""
    M = BlockMultiplier(1.0, 2.0).matrix(gallery.dirac1d(), SPEC)
    assert np.allclose(np.diagonal(M), [1.0] * SPEC.n + [2.0] * SPEC.n)


def test_block_multiplier_needs_two_components():
    """Test if a scalar family is rejected"""
    with pytest.raises(InvalidSpec):
        BlockMultiplier(1.0, 2.0).matrix(gallery.schrodinger1d(0.0), SPEC)


def test_matrix_multiplier_size():
    """Test if a constant matrix only fits its own section size"""
    family = gallery.unifposb()
    multiplier = MatrixMultiplier(2 * np.eye(4))
    assert np.allclose(multiplier.matrix(family, TruncationSpec(n=4)), 2 * np.eye(4))
    with pytest.raises(InvalidSpec):
        multiplier.matrix(family, TruncationSpec(n=5))


def test_multiplied_section():
    """Test if the multiplied pencil is (MA, MB) at every resolution"""
    base = gallery.sl_indefinite(1.0, 1.0, a=-0.5, b=0.5)
    multiplier = gallery.sl_rotation_multiplier(np.pi / 2, -0.5, 0.5)
    family = MultipliedFamily(base, multiplier)
    section = family.section(SPEC)
    M = multiplier.matrix(base, SPEC)
    assert np.allclose(section.A, M @ base.section(SPEC).A)
    assert np.allclose(section.B, M @ base.section(SPEC).B)
    assert family.id == "sl_rotation(1.5708)*sturm_liouville_indefinite"
    assert family.components == 1


def test_multiplied_window_delegates():
    """Test if windows come from the base family"""
    base = gallery.unifposb()
    family = MultipliedFamily(base, FunctionMultiplier(1j))
    spec = family.window_spec(4, 2)
    assert spec == base.window_spec(4, 2)
    assert family.window_indices(spec, 4, 2).tolist() == [4, 5]
