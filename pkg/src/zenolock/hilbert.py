"""Tensor-product Hilbert spaces of multi-level atoms and truncated bosonic modes.

States are dense complex vectors over an ordered tensor product, atoms first
and then modes.  Every Hamiltonian in this package is piecewise constant, so
time evolution is done exactly through a single eigendecomposition that is
cached on the operator.  hbar = 1 throughout; all frequencies are angular
unless a module says otherwise.

All values are immutable after construction (backing arrays are marked
read-only) and every operation returns a new value, so states and operators
can be shared freely between threads.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
MODE_PURITY_TOL = 1e-10
ZERO_PROBABILITY = 1e-30


class BasisMismatchError(ValueError):
    """A state and an operator live on different product bases."""


class EntangledModeError(ValueError):
    """A mode-factor swap was requested while the mode is entangled.

    In the measurement protocols this signals a sequencing bug: photons must
    be injected or removed only between segments, when the mode factorizes.
    """


@dataclass(frozen=True)
class Atom:
    """An atom with a fixed number of internal levels (2, 3 or 4)."""

    levels: int

    def __post_init__(self):
        if self.levels not in (2, 3, 4):
            raise ValueError(f"atom must have 2, 3 or 4 levels, got {self.levels}")

    @property
    def dim(self) -> int:
        return self.levels


@dataclass(frozen=True)
class Mode:
    """A bosonic mode truncated at a highest representable occupancy."""

    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f"mode cutoff must be >= 1, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1


SubsystemSpec = Union[Atom, Mode]


class ProductBasis:
    """Ordered tensor product of subsystems.

    The basis index runs row-major over the local occupation numbers, i.e.
    the first subsystem is the most significant digit, matching the ordering
    produced by chained ``numpy.kron``.
    """

    __slots__ = ("subsystems", "dims", "dimension")

    def __init__(self, subsystems: Sequence[SubsystemSpec]):
        subsystems = tuple(subsystems)
        if not subsystems:
            raise ValueError("a product basis needs at least one subsystem")
        for sub in subsystems:
            if not isinstance(sub, (Atom, Mode)):
                raise TypeError(f"not an Atom or Mode subsystem: {sub!r}")
        self.subsystems = subsystems
        self.dims = tuple(sub.dim for sub in subsystems)
        self.dimension = int(np.prod(self.dims))

    def __eq__(self, other):
        return isinstance(other, ProductBasis) and self.subsystems == other.subsystems

    def __hash__(self):
        return hash(self.subsystems)

    def __repr__(self):
        inner = ", ".join(repr(sub) for sub in self.subsystems)
        return f"ProductBasis([{inner}], dimension={self.dimension})"

    def index(self, occupations: Sequence[int]) -> int:
        """Flat index of the product state with the given local occupations."""
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def occupations(self, index: int) -> tuple:
        """Local occupations of a flat basis index (inverse of :meth:`index`)."""
        return tuple(int(k) for k in np.unravel_index(index, self.dims))

    def atom_indices(self) -> tuple:
        return tuple(i for i, s in enumerate(self.subsystems) if isinstance(s, Atom))

    def mode_indices(self) -> tuple:
        return tuple(i for i, s in enumerate(self.subsystems) if isinstance(s, Mode))


def build_basis(specs: Sequence[SubsystemSpec]) -> ProductBasis:
    """Build a product basis, reordering subsystems atoms-first.

    Atoms come first, then modes, each group keeping its declaration order.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("cannot build a basis from an empty subsystem list")
    atoms = [s for s in specs if isinstance(s, Atom)]
    modes = [s for s in specs if isinstance(s, Mode)]
    if len(atoms) + len(modes) != len(specs):
        bad = next(s for s in specs if not isinstance(s, (Atom, Mode)))
        raise TypeError(f"not an Atom or Mode subsystem: {bad!r}")
    return ProductBasis(atoms + modes)


class StateVector:
    """Pure state over a :class:`ProductBasis`."""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: ProductBasis, amplitudes, normalize: bool = False):
        amps = np.array(amplitudes, dtype=complex)
        if amps.shape != (basis.dimension,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, basis dimension is {basis.dimension}"
            )
        if normalize:
            norm = np.linalg.norm(amps)
            if norm <= 0.0:
                raise ValueError("cannot normalize a zero state vector")
            amps /= norm
        amps.flags.writeable = False
        self.basis = basis
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if self.basis != other.basis:
            raise BasisMismatchError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        """|<self|other>|, insensitive to global phase."""
        return abs(self.overlap(other))

    def probability(self, occupations: Sequence[int]) -> float:
        return float(abs(self.amplitudes[self.basis.index(occupations)]) ** 2)

    def __repr__(self):
        return f"StateVector(dimension={self.basis.dimension}, norm={self.norm():.6f})"


def _bare_state(basis: ProductBasis, amps: np.ndarray) -> StateVector:
    # Internal constructor that trusts shape/dtype and skips the copy.
    state = object.__new__(StateVector)
    amps.flags.writeable = False
    state.basis = basis
    state.amplitudes = amps
    return state


def basis_state(basis: ProductBasis, occupations: Sequence[int]) -> StateVector:
    """Product basis state |occupations>."""
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index(occupations)] = 1.0
    return _bare_state(basis, amps)


class OperatorMatrix:
    """Dense operator tagged with the basis it acts on.

    The ``hermitian`` and ``unitary`` flags are verified at construction when
    set.  The eigendecomposition used by :func:`evolve` is computed lazily and
    cached, which makes repeated evolution under the same piecewise-constant
    Hamiltonian cheap.
    """

    __slots__ = ("basis", "matrix", "hermitian", "unitary", "_eig", "_diag")

    def __init__(self, basis: ProductBasis, matrix, hermitian: bool = False,
                 unitary: bool = False):
        m = np.array(matrix, dtype=complex)
        d = basis.dimension
        if m.shape != (d, d):
            raise ValueError(f"operator has shape {m.shape}, expected ({d}, {d})")
        if hermitian:
            defect = np.max(np.abs(m - m.conj().T))
            if defect >= HERMITIAN_TOL:
                raise ValueError(f"hermitian flag set but max|M - M^dag| = {defect:.3e}")
        if unitary:
            defect = np.max(np.abs(m.conj().T @ m - np.eye(d)))
            if defect >= UNITARY_TOL:
                raise ValueError(f"unitary flag set but max|M^dag M - 1| = {defect:.3e}")
        m.flags.writeable = False
        self.basis = basis
        self.matrix = m
        self.hermitian = bool(hermitian)
        self.unitary = bool(unitary)
        self._eig = None
        self._diag = None

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.matrix.conj().T,
                              hermitian=self.hermitian, unitary=self.unitary)

    def is_diagonal(self) -> bool:
        if self._diag is None:
            off = self.matrix - np.diag(self.matrix.diagonal())
            self._diag = not np.any(off)
        return self._diag

    def eigensystem(self):
        """Cached (eigenvalues, eigenvectors) of a Hermitian operator."""
        if not self.hermitian:
            raise ValueError("eigensystem is only provided for Hermitian operators")
        if self._eig is None:
            w, v = scipy.linalg.eigh(self.matrix)
            self._eig = (w, v)
        return self._eig

    def __repr__(self):
        return (f"OperatorMatrix(dimension={self.basis.dimension}, "
                f"hermitian={self.hermitian}, unitary={self.unitary})")


def _embed(basis: ProductBasis, subsystem_index: int, local: np.ndarray) -> np.ndarray:
    """Kronecker-embed a local operator, identity on all other factors."""
    out = None
    for i, d in enumerate(basis.dims):
        factor = local if i == subsystem_index else np.eye(d)
        out = factor if out is None else np.kron(out, factor)
    return out


def _require_mode(basis: ProductBasis, subsystem_index: int) -> Mode:
    sub = basis.subsystems[subsystem_index]
    if not isinstance(sub, Mode):
        raise TypeError(f"subsystem {subsystem_index} is an atom, expected a mode")
    return sub


def _require_atom(basis: ProductBasis, subsystem_index: int) -> Atom:
    sub = basis.subsystems[subsystem_index]
    if not isinstance(sub, Atom):
        raise TypeError(f"subsystem {subsystem_index} is a mode, expected an atom")
    return sub


def annihilation(basis: ProductBasis, mode_index: int) -> OperatorMatrix:
    """Ladder operator a on one mode factor: a|k> = sqrt(k)|k-1>.

    Under truncation the image of the top occupancy under a^dag is dropped,
    i.e. a^dag|cutoff> = 0.
    """
    sub = _require_mode(basis, mode_index)
    local = np.diag(np.sqrt(np.arange(1.0, sub.dim)), k=1).astype(complex)
    return OperatorMatrix(basis, _embed(basis, mode_index, local))


def creation(basis: ProductBasis, mode_index: int) -> OperatorMatrix:
    return annihilation(basis, mode_index).dagger()


def number_operator(basis: ProductBasis, mode_index: int) -> OperatorMatrix:
    sub = _require_mode(basis, mode_index)
    local = np.diag(np.arange(sub.dim, dtype=float)).astype(complex)
    return OperatorMatrix(basis, _embed(basis, mode_index, local), hermitian=True)


def atomic_projector(basis: ProductBasis, atom_index: int, i: int, j: int) -> OperatorMatrix:
    """|i><j| on one atom factor, identity elsewhere.

    Raising and lowering operators are built from this block, e.g.
    sigma^+ = |excited><ground|.
    """
    sub = _require_atom(basis, atom_index)
    if not (0 <= i < sub.levels and 0 <= j < sub.levels):
        raise ValueError(f"level indices ({i}, {j}) out of range for {sub.levels} levels")
    local = np.zeros((sub.levels, sub.levels), dtype=complex)
    local[i, j] = 1.0
    return OperatorMatrix(basis, _embed(basis, atom_index, local), hermitian=(i == j))


def evolve(state: StateVector, hamiltonian: OperatorMatrix, duration: float) -> StateVector:
    """Exact propagation exp(-i H t)|state> via the cached eigensystem of H."""
    if hamiltonian.basis != state.basis:
        raise BasisMismatchError("state and Hamiltonian live on different bases")
    if not hamiltonian.hermitian:
        raise ValueError("evolution requires a Hamiltonian with the hermitian flag set")
    return _bare_state(state.basis,
                       _propagate(hamiltonian, state.amplitudes, float(duration)))


def _propagate(hamiltonian: OperatorMatrix, amps: np.ndarray, duration: float) -> np.ndarray:
    if hamiltonian.is_diagonal():
        phases = np.exp(-1j * duration * hamiltonian.matrix.diagonal().real)
        return phases * amps
    w, v = hamiltonian.eigensystem()
    return v @ (np.exp(-1j * duration * w) * (v.conj().T @ amps))


def expectation(state: StateVector, op: OperatorMatrix) -> complex:
    """<state|Op|state>.  Real up to 1e-12 for Hermitian operators."""
    if op.basis != state.basis:
        raise BasisMismatchError("state and operator live on different bases")
    return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))


def _mode_view(state: StateVector, mode_index: int) -> np.ndarray:
    """Amplitudes reshaped to (before, mode, after) around one mode axis."""
    dims = state.basis.dims
    pre = int(np.prod(dims[:mode_index], dtype=np.int64)) if mode_index else 1
    post = int(np.prod(dims[mode_index + 1:], dtype=np.int64)) if mode_index + 1 < len(dims) else 1
    return state.amplitudes.reshape(pre, dims[mode_index], post)


class ProjectionResult(NamedTuple):
    """Outcome of a projective photon-number measurement.

    ``state`` is None when the requested outcome has (numerically) zero Born
    probability; this is a flagged result, not an error.
    """

    state: Optional[StateVector]
    probability: float


def project_photon_number(state: StateVector, mode_index: int, k: int) -> ProjectionResult:
    """Project one mode onto exactly k photons and renormalize."""
    sub = _require_mode(state.basis, mode_index)
    if not 0 <= k <= sub.cutoff:
        raise ValueError(f"photon number {k} outside 0..{sub.cutoff}")
    view = _mode_view(state, mode_index)
    branch = view[:, k, :]
    probability = float(np.sum(np.abs(branch) ** 2))
    if probability <= ZERO_PROBABILITY:
        return ProjectionResult(None, probability)
    out = np.zeros_like(view)
    out[:, k, :] = branch / np.sqrt(probability)
    return ProjectionResult(_bare_state(state.basis, out.reshape(-1)), probability)


def photon_number_distribution(state: StateVector, mode_index: int) -> np.ndarray:
    """Born probabilities of every photon-number outcome on one mode."""
    _require_mode(state.basis, mode_index)
    view = _mode_view(state, mode_index)
    return np.sum(np.abs(view) ** 2, axis=(0, 2))


def mode_purity(state: StateVector, mode_index: int) -> float:
    """Purity tr(rho^2) of the reduced state of one mode."""
    _require_mode(state.basis, mode_index)
    view = _mode_view(state, mode_index)
    m = np.moveaxis(view, 1, 2).reshape(-1, view.shape[1])
    rho = m.T @ m.conj()
    trace = float(np.trace(rho).real)
    return float(np.sum(np.abs(rho) ** 2) / trace**2)


def replace_mode_state(state: StateVector, mode_index: int, k: int) -> StateVector:
    """Swap an unentangled mode factor to the Fock state |k>.

    Used to inject photons (|0> -> |n>) before a measurement segment and to
    remove them afterwards.  Requires the reduced purity of the mode to be
    at least 1 - 1e-10, otherwise the swap would silently discard
    correlations and an :class:`EntangledModeError` is raised.
    """
    sub = _require_mode(state.basis, mode_index)
    if not 0 <= k <= sub.cutoff:
        raise ValueError(f"photon number {k} outside 0..{sub.cutoff}")
    view = _mode_view(state, mode_index)
    m = np.moveaxis(view, 1, 2).reshape(-1, view.shape[1])
    rho = m.T @ m.conj()
    trace = float(np.trace(rho).real)
    purity = float(np.sum(np.abs(rho) ** 2) / trace**2)
    if purity < 1.0 - MODE_PURITY_TOL:
        raise EntangledModeError(
            f"mode {mode_index} is entangled with the rest of the system "
            f"(reduced purity {purity:.12f}); photon injection/removal is only "
            "valid between protocol segments"
        )
    _, vecs = np.linalg.eigh(rho)
    factor = vecs[:, -1]
    anchor = int(np.argmax(np.abs(factor)))
    factor = factor * (factor[anchor].conj() / abs(factor[anchor]))
    rest = m @ factor.conj()
    rest /= np.linalg.norm(rest)
    out = np.zeros_like(m)
    out[:, k] = rest
    out = np.moveaxis(out.reshape(view.shape[0], view.shape[2], view.shape[1]), 2, 1)
    return _bare_state(state.basis, np.ascontiguousarray(out).reshape(-1))


def mode_top_population(state: StateVector, mode_index: int, top_levels: int = 2) -> float:
    """Total population in the highest occupancies of one mode.

    A run is numerically valid only while this stays tiny; support touching
    the truncation boundary means the cutoff was too low.
    """
    dist = photon_number_distribution(state, mode_index)
    return float(np.sum(dist[-top_levels:]))


def occupation_labels(basis: ProductBasis, local_weights: Sequence[Sequence[int]]) -> np.ndarray:
    """Integer label per basis state: sum of per-subsystem level weights.

    With atom weights selecting excited levels and mode weights equal to the
    occupancy, the label is a conserved excitation number for every
    rotating-wave Hamiltonian in this package.
    """
    if len(local_weights) != len(basis.dims):
        raise ValueError("need one weight vector per subsystem")
    for w, d in zip(local_weights, basis.dims):
        if len(w) != d:
            raise ValueError("weight vector length must match subsystem dimension")
    multi = np.unravel_index(np.arange(basis.dimension), basis.dims)
    labels = np.zeros(basis.dimension, dtype=np.int64)
    for w, idx in zip(local_weights, multi):
        labels += np.asarray(w, dtype=np.int64)[idx]
    return labels


def combine_labels(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Pack two label arrays into one (for doubly conserved numbers)."""
    stride = int(second.max()) + 1
    return first * stride + second


def commutator_norm(a: OperatorMatrix, b: OperatorMatrix) -> float:
    return float(np.max(np.abs(a.matrix @ b.matrix - b.matrix @ a.matrix)))


class BlockEvolver:
    """Exact evolution exploiting a conserved occupation label.

    The Hamiltonian must be block diagonal with respect to ``labels`` (checked
    at construction); each block is eigendecomposed once.  Observables agree
    with the dense :func:`evolve` path to 1e-10 by construction, which is
    asserted in the test suite.
    """

    def __init__(self, hamiltonian: OperatorMatrix, labels: np.ndarray, tol: float = 1e-12):
        if not hamiltonian.hermitian:
            raise ValueError("block evolution requires a Hermitian Hamiltonian")
        labels = np.asarray(labels)
        d = hamiltonian.basis.dimension
        if labels.shape != (d,):
            raise ValueError("labels must assign one integer per basis state")
        off_block = labels[:, None] != labels[None, :]
        leakage = float(np.max(np.abs(hamiltonian.matrix[off_block]))) if off_block.any() else 0.0
        if leakage > tol:
            raise ValueError(
                f"Hamiltonian couples different label sectors (max element {leakage:.3e})"
            )
        self.basis = hamiltonian.basis
        self._blocks = []
        for value in np.unique(labels):
            idx = np.flatnonzero(labels == value)
            block = hamiltonian.matrix[np.ix_(idx, idx)]
            w, v = scipy.linalg.eigh(block)
            self._blocks.append((idx, w, v))

    def propagate(self, amplitudes: np.ndarray, duration: float) -> np.ndarray:
        out = np.zeros_like(amplitudes)
        for idx, w, v in self._blocks:
            sub = amplitudes[idx]
            if not np.any(sub):
                continue
            out[idx] = v @ (np.exp(-1j * duration * w) * (v.conj().T @ sub))
        return out

    def evolve(self, state: StateVector, duration: float) -> StateVector:
        if state.basis != self.basis:
            raise BasisMismatchError("state lives on a different basis")
        return _bare_state(state.basis, self.propagate(state.amplitudes, float(duration)))
