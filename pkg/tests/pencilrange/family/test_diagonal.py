import numpy as np
import pytest

from pencilrange import gallery
from pencilrange.errors import InvalidSpec
from pencilrange.family import BlockFamily, DiagonalFamily
from pencilrange.types import PencilFamily, TruncationSpec


@pytest.mark.parametrize(
    "kwargs", [{"n": 1}, {"n": 4, "half_length": 0.0}, {"n": 4, "half_length": -1.0}]
)
def test_truncation_spec_invalid(kwargs):
    """Test if degenerate truncations are rejected"""
    with pytest.raises(InvalidSpec):
        TruncationSpec(**kwargs)


def test_truncation_spec_step():
    """Test if the step is only defined with a half-length"""
    assert TruncationSpec(n=19, half_length=1.0).step == pytest.approx(0.1)
    assert str(TruncationSpec(n=19, half_length=1.0)) == "L=1,N=19"
    assert str(TruncationSpec(n=5)) == "N=5"
    with pytest.raises(InvalidSpec):
        TruncationSpec(n=5).step  # pylint: disable=expression-not-assigned


def test_diagonal_section():
    """Test if the section holds a_1..a_N and b_1..b_N"""
    family = DiagonalFamily(lambda n: n * 1.0, lambda n: n**2.0)
    section = family.section(TruncationSpec(n=4))
    assert isinstance(family, PencilFamily)
    assert np.allclose(np.diagonal(section.A), [1, 2, 3, 4])
    assert np.allclose(np.diagonal(section.B), [1, 4, 9, 16])
    assert section.structure == "diagonal"


def test_diagonal_window():
    """Test if a window picks e_{depth+1}, ..., e_{depth+size}"""
    family = gallery.unifposb()
    spec = family.window_spec(5, 3)
    assert spec.n == 8
    assert family.window_indices(spec, 5, 3).tolist() == [5, 6, 7]
    with pytest.raises(InvalidSpec):
        family.window_indices(TruncationSpec(n=6), 5, 3)
    with pytest.raises(InvalidSpec):
        family.window_spec(-1, 3)


def test_block_section():
    """Test if the JT pencil stacks S over S with B = diag(I, -I)"""
    section = gallery.jt_pencil().section(TruncationSpec(n=6))
    assert np.allclose(np.diagonal(section.A), [1, 2, 3, 1, 2, 3])
    assert np.allclose(np.diagonal(section.B), [1, 1, 1, -1, -1, -1])
    eigenvalues = np.sort(np.diagonal(section.A).real / np.diagonal(section.B).real)
    assert np.allclose(eigenvalues, [-3, -2, -1, 1, 2, 3])


@pytest.mark.parametrize("n", (2, 5))
def test_block_section_invalid(n):
    """Test if odd or too small block sections are rejected"""
    with pytest.raises(InvalidSpec):
        gallery.jt_pencil().section(TruncationSpec(n=n))


def test_block_window():
    """Test if a block window takes the same rows from both blocks"""
    family = BlockFamily(gallery.unifposb(), gallery.unifposb())
    spec = family.window_spec(2, 3)
    assert spec.n == 10
    assert family.window_indices(TruncationSpec(n=20), 2, 3).tolist() == [2, 3, 4, 12, 13, 14]
    assert family.components == 2
