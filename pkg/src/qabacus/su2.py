"""Exact algebra of 2x2 unitary gates.

Pauli expansion, Bloch-sphere parametrization, conjugation, closed-form
diagonalization, and lowering of arbitrary U(2) targets to short sequences of
Bloch-sphere reflections.

Conventions
-----------
* sigma(c) = c1 sx + c2 sy + c3 sz for a real unit 3-vector c.  These are
  exactly the Hermitian unitaries with eigenvalues {+1, -1}; together with
  +/-I they form the scale-invariant junction family.
* bloch_matrix(mu, nu) = sigma(c) with c = (sin mu cos nu, sin mu sin nu,
  cos mu), i.e. sigma(c) = exp(-i nu sz / 2) exp(-i mu sy / 2) sz
  exp(i mu sy / 2) exp(i nu sz / 2).
* diagonalize(U) returns V with det V = 1 and V U V^-1 =
  diag(e^{i th+}, e^{i th-}), angles reduced to [0, 2 pi) and th+ <= th-.
* decompose_gate(U) writes U = e^{i xi} * (step_1 ... step_k), each step a
  Bloch matrix or a literal +/-I, with k <= 4 and k = 1 whenever U itself is
  a Bloch matrix or +/-I.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL

__all__ = [
    "UnitaryGate",
    "DiagonalGate",
    "BlochVector",
    "GateDecomposition",
    "GateClass",
    "IDENTITY",
    "MINUS_IDENTITY",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "HADAMARD",
    "pauli_decompose",
    "bloch_matrix",
    "conjugate",
    "diagonalize",
    "decompose_gate",
    "classify",
    "is_scale_invariant",
    "random_unitary",
    "random_bloch",
    "wrap_angle",
    "wrap_two_pi",
]

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)
_PAULI = (_SX, _SY, _SZ)


def wrap_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    w = -((-a + math.pi) % (2.0 * math.pi) - math.pi)
    return w


def wrap_two_pi(a: float) -> float:
    """Reduce an angle to [0, 2 pi)."""
    w = a % (2.0 * math.pi)
    return 0.0 if w == 2.0 * math.pi else w


class UnitaryGate:
    """A validated 2x2 unitary matrix.

    Wraps a read-only complex ndarray (attribute ``m``).  Construction checks
    U dagger U = I and |det U| = 1 to the algebraic tolerance.
    """

    __slots__ = ("m",)

    def __init__(self, matrix, *, check: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.shape == (4,):
            m = m.reshape(2, 2)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("gate entries must be finite")
        if check:
            dev = np.abs(m.conj().T @ m - _I2).max()
            if dev > 100 * TOL.algebraic:
                raise ValueError(f"matrix is not unitary (|U+U - I| = {dev:.3e})")
            ddet = abs(abs(np.linalg.det(m)) - 1.0)
            if ddet > 100 * TOL.algebraic:
                raise ValueError(f"matrix determinant is not unimodular ({ddet:.3e})")
        m.setflags(write=False)
        self.m = m

    def __array__(self, dtype=None, copy=None):
        return np.array(self.m, dtype=dtype)

    @property
    def dagger(self) -> np.ndarray:
        return self.m.conj().T

    def isclose(self, other, tol: float = TOL.algebraic) -> bool:
        return bool(np.abs(self.m - as_matrix(other)).max() <= tol)

    def to_json_entries(self) -> list[list[float]]:
        """Row-major list of [re, im] pairs."""
        flat = self.m.reshape(-1)
        return [[float(z.real), float(z.imag)] for z in flat]

    @classmethod
    def from_json_entries(cls, entries) -> "UnitaryGate":
        if len(entries) != 4:
            raise ValueError("gate serialization needs exactly 4 [re, im] pairs")
        vals = [complex(re, im) for re, im in entries]
        return cls(np.array(vals, dtype=complex).reshape(2, 2))

    def __repr__(self) -> str:
        return f"UnitaryGate({self.m.tolist()!r})"


def as_matrix(gate) -> np.ndarray:
    """Coerce a UnitaryGate or array-like to a (2, 2) complex ndarray."""
    if isinstance(gate, UnitaryGate):
        return gate.m
    m = np.asarray(gate, dtype=complex)
    if m.shape == (4,):
        m = m.reshape(2, 2)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


def as_gate(gate) -> UnitaryGate:
    return gate if isinstance(gate, UnitaryGate) else UnitaryGate(gate)


IDENTITY = UnitaryGate(_I2)
MINUS_IDENTITY = UnitaryGate(-_I2)
PAULI_X = UnitaryGate(_SX)
PAULI_Y = UnitaryGate(_SY)
PAULI_Z = UnitaryGate(_SZ)
HADAMARD = UnitaryGate((_SX + _SZ) / math.sqrt(2.0))


class GateClass(enum.Enum):
    SCALE_INVARIANT_BLOCH = "scale_invariant_bloch"
    PLUS_IDENTITY = "plus_identity"
    MINUS_IDENTITY = "minus_identity"
    SEPARATING_DIAGONAL = "separating_diagonal"
    GENERIC = "generic"


@dataclass(frozen=True)
class DiagonalGate:
    """diag(e^{i theta_plus}, e^{i theta_minus}) with angles in [0, 2 pi)."""

    theta_plus: float
    theta_minus: float

    def __post_init__(self):
        object.__setattr__(self, "theta_plus", wrap_two_pi(float(self.theta_plus)))
        object.__setattr__(self, "theta_minus", wrap_two_pi(float(self.theta_minus)))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag([np.exp(1j * self.theta_plus), np.exp(1j * self.theta_minus)])

    def gate(self) -> UnitaryGate:
        return UnitaryGate(self.matrix)


@dataclass(frozen=True)
class BlochVector:
    """Unit 3-vector c labelling the Hermitian unitary sigma(c).

    Angles follow c = (sin mu cos nu, sin mu sin nu, cos mu) with
    mu in [0, pi], nu in [0, 2 pi).
    """

    c: tuple[float, float, float]
    mu: float = field(default=None)  # type: ignore[assignment]
    nu: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        c = tuple(float(v) for v in self.c)
        n = math.sqrt(sum(v * v for v in c))
        if not math.isfinite(n) or abs(n - 1.0) > 1e-9:
            raise ValueError(f"Bloch vector must be unit length, |c| = {n}")
        c = tuple(v / n for v in c)
        object.__setattr__(self, "c", c)
        if self.mu is None or self.nu is None:
            mu = math.acos(max(-1.0, min(1.0, c[2])))
            nu = math.atan2(c[1], c[0]) if math.hypot(c[0], c[1]) > 1e-15 else 0.0
            object.__setattr__(self, "mu", mu)
            object.__setattr__(self, "nu", wrap_two_pi(nu))

    @classmethod
    def from_angles(cls, mu: float, nu: float) -> "BlochVector":
        mu = float(mu)
        nu = wrap_two_pi(float(nu))
        c = (math.sin(mu) * math.cos(nu), math.sin(mu) * math.sin(nu), math.cos(mu))
        return cls(c=c, mu=mu, nu=nu)

    @classmethod
    def from_matrix(cls, gate) -> "BlochVector":
        m = as_matrix(gate)
        c0, c = pauli_decompose(m)
        if abs(c0) > 1e-9 or np.abs(c.imag).max() > 1e-9:
            raise ValueError("matrix is not a real traceless Pauli combination")
        return cls(c=tuple(c.real))

    @property
    def matrix(self) -> np.ndarray:
        c = self.c
        return c[0] * _SX + c[1] * _SY + c[2] * _SZ

    def gate(self) -> UnitaryGate:
        return UnitaryGate(self.matrix)


def pauli_decompose(gate) -> tuple[complex, np.ndarray]:
    """Coefficients (c0, c) of U = c0 I + c . sigma.

    Exact and linear: c0 = tr(U)/2, c_k = tr(sigma_k U)/2.
    """
    m = as_matrix(gate)
    c0 = complex(np.trace(m)) / 2.0
    c = np.array([complex(np.trace(s @ m)) / 2.0 for s in _PAULI])
    return c0, c


def pauli_compose(c0: complex, c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    return c0 * _I2 + c[0] * _SX + c[1] * _SY + c[2] * _SZ


def bloch_matrix(mu: float, nu: float) -> UnitaryGate:
    """sigma(c) for the Bloch angles (mu, nu)."""
    return BlochVector.from_angles(mu, nu).gate()


def conjugate(gate, v) -> UnitaryGate:
    """V U V^-1 for unitary V (no det normalization required of V)."""
    u = as_matrix(gate)
    vm = as_matrix(v)
    return UnitaryGate(vm @ u @ vm.conj().T)


def classify(gate, tol: float = 1e-10) -> GateClass:
    """Mutually exclusive gate classes, in priority order.

    scale_invariant_bloch  Hermitian unitary with eigenvalues {+1, -1}
    plus_identity / minus_identity  U = +/-I
    separating_diagonal    off-diagonal entries vanish (sides decouple)
    generic                everything else
    """
    m = as_matrix(gate)
    if np.abs(m - m.conj().T).max() <= tol and abs(np.trace(m)) <= tol:
        return GateClass.SCALE_INVARIANT_BLOCH
    if np.abs(m - _I2).max() <= tol:
        return GateClass.PLUS_IDENTITY
    if np.abs(m + _I2).max() <= tol:
        return GateClass.MINUS_IDENTITY
    if abs(m[0, 1]) + abs(m[1, 0]) <= tol:
        return GateClass.SEPARATING_DIAGONAL
    return GateClass.GENERIC


def is_scale_invariant(gate, tol: float = 1e-10) -> bool:
    """True for Bloch matrices and +/-I (the junction family with the
    equally spaced ladder spectrum)."""
    return classify(gate, tol) in (
        GateClass.SCALE_INVARIANT_BLOCH,
        GateClass.PLUS_IDENTITY,
        GateClass.MINUS_IDENTITY,
    )


def _su2_axis_angle(m: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Write U = e^{i phi} (cos g I + i sin g n.sigma); return (phi, g, n).

    phi is the principal half-argument of det U, g in [0, pi], n a real unit
    3-vector (z axis when U is scalar and the axis is undefined).
    """
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    phi = 0.5 * math.atan2(det.imag, det.real)
    w = np.exp(-1j * phi) * m
    w0, wc = pauli_decompose(w)
    # for SU(2), w0 is real and wc is purely imaginary up to roundoff
    axis = wc.imag.astype(float)
    s = float(np.linalg.norm(axis))
    g = math.atan2(s, float(w0.real))
    if s < 1e-12:
        n = np.array([0.0, 0.0, 1.0])
    else:
        n = axis / s
    return phi, g, n


def diagonalize(gate) -> tuple[UnitaryGate, DiagonalGate]:
    """Closed-form eigendecomposition V U V^-1 = diag(e^{i th+}, e^{i th-}).

    V is returned in SU(2) with rows equal to the eigenvector daggers.  The
    construction is deterministic: th+ <= th- in [0, 2 pi); the first
    eigenvector has its first significant component made real and positive and
    the second is the orthogonal complement fixed by det V = 1.  A scalar
    U = e^{i th} I returns V = I.
    """
    m = as_matrix(gate)
    g_check = UnitaryGate(m)  # validate unitarity
    phi, g, n = _su2_axis_angle(g_check.m)

    if math.sin(g) < 1e-12:
        th = wrap_two_pi(phi + g)  # g ~ 0 or ~ pi; both eigenvalues coincide
        return UnitaryGate(_I2), DiagonalGate(th, th)

    mu = math.acos(max(-1.0, min(1.0, float(n[2]))))
    nu = math.atan2(float(n[1]), float(n[0])) if math.hypot(n[0], n[1]) > 1e-15 else 0.0
    # eigenvectors of n.sigma for eigenvalues +1 / -1
    v_plus = np.array([math.cos(mu / 2.0), math.sin(mu / 2.0) * np.exp(1j * nu)])
    v_minus = np.array([-math.sin(mu / 2.0) * np.exp(-1j * nu), math.cos(mu / 2.0)])
    lam_plus = wrap_two_pi(phi + g)
    lam_minus = wrap_two_pi(phi - g)

    if lam_plus <= lam_minus:
        th1, th2, v1 = lam_plus, lam_minus, v_plus
    else:
        th1, th2, v1 = lam_minus, lam_plus, v_minus

    # phase convention: first significant component of v1 real-positive,
    # partner fixed by orthogonality and det V = 1
    piv = v1[0] if abs(v1[0]) > 1e-8 else v1[1]
    v1 = v1 * (abs(piv) / piv)
    v2 = np.array([-np.conj(v1[1]), np.conj(v1[0])])
    v = np.vstack([v1.conj(), v2.conj()])
    return UnitaryGate(v), DiagonalGate(th1, th2)


@dataclass(frozen=True)
class GateDecomposition:
    """U = e^{i xi} * product(steps), steps applied right to left.

    Each step is a BlochVector or one of the literals "I" / "-I".
    """

    xi: float
    steps: tuple
    target: UnitaryGate

    def step_matrices(self) -> list[np.ndarray]:
        out = []
        for s in self.steps:
            if isinstance(s, BlochVector):
                out.append(s.matrix)
            elif s == "I":
                out.append(_I2.copy())
            elif s == "-I":
                out.append(-_I2)
            else:
                raise ValueError(f"unknown step {s!r}")
        return out

    def product(self) -> np.ndarray:
        """e^{i xi} times the ordered product of the step matrices."""
        acc = _I2
        for m in self.step_matrices():
            acc = acc @ m
        return np.exp(1j * self.xi) * acc

    def max_error(self) -> float:
        return float(np.abs(self.product() - self.target.m).max())


def _equatorial(phi: float) -> BlochVector:
    return BlochVector.from_angles(math.pi / 2.0, phi)


def decompose_gate(gate) -> GateDecomposition:
    """Lower an arbitrary U(2) gate to at most four Bloch steps and a phase.

    Branches:
    * scalar e^{i th} I        -> one literal step "I" or "-I", xi absorbs th
    * Bloch matrix             -> that single step, xi = 0
    * separating diagonal      -> two equatorial steps: sigma(a) sigma(b) =
                                  diag(e^{i d}, e^{-i d}) with a.b = cos d,
                                  a x b = (0, 0, sin d); xi = (th+ + th-)/2
    * generic                  -> sigma(c) [two equatorial steps] sigma(c),
                                  where sigma(c) realizes the diagonalizing
                                  conjugation as a single Bloch reflection
    """
    u = as_gate(gate)
    m = u.m

    c0, cvec = pauli_decompose(m)
    if np.abs(cvec).max() <= 1e-12:  # scalar
        th = wrap_angle(math.atan2(c0.imag, c0.real))
        if abs(th) <= math.pi / 2.0:
            return GateDecomposition(xi=th, steps=("I",), target=u)
        return GateDecomposition(xi=wrap_angle(th - math.pi), steps=("-I",), target=u)

    if classify(u) is GateClass.SCALE_INVARIANT_BLOCH:
        return GateDecomposition(xi=0.0, steps=(BlochVector.from_matrix(m),), target=u)

    v, d = diagonalize(u)
    xi = 0.5 * (d.theta_plus + d.theta_minus)
    delta = 0.5 * (d.theta_plus - d.theta_minus)
    a = _equatorial(0.0)
    b = _equatorial(delta)

    if abs(m[0, 1]) + abs(m[1, 0]) <= 1e-12:
        # already diagonal, but diagonalize() may have ordered the angles;
        # rebuild from the raw diagonal so no conjugation step is needed
        thp = wrap_two_pi(math.atan2(m[0, 0].imag, m[0, 0].real))
        thm = wrap_two_pi(math.atan2(m[1, 1].imag, m[1, 1].real))
        xi = 0.5 * (thp + thm)
        b = _equatorial(0.5 * (thp - thm))
        return GateDecomposition(xi=xi, steps=(a, b), target=u)

    # sigma(c) = V^+ Lambda with Lambda diagonal chosen to make it Hermitian
    # and traceless; then sigma(c) D sigma(c) = V^+ D V = U
    v00 = v.m[0, 0]
    alpha = math.atan2(v00.imag, v00.real) if abs(v00) > 1e-12 else 0.0
    lam = np.diag([np.exp(1j * alpha), -np.exp(-1j * alpha)])
    sc = v.dagger @ lam
    c = BlochVector.from_matrix(sc)
    return GateDecomposition(xi=xi, steps=(c, a, b, c), target=u)


def random_unitary(rng: np.random.Generator) -> UnitaryGate:
    """Haar-like U(2) sample: unit quaternion SU(2) times a random phase."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w = pauli_compose(q[0], 1j * q[1:])
    phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
    return UnitaryGate(phase * w)


def random_bloch(rng: np.random.Generator) -> BlochVector:
    """Uniform point on the Bloch sphere."""
    mu = math.acos(rng.uniform(-1.0, 1.0))
    nu = rng.uniform(0.0, 2.0 * math.pi)
    return BlochVector.from_angles(mu, nu)
