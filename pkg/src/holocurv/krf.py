"""Class-level bounds along the Kähler-Ricci flow and the singularity-type criterion.

Only cohomology classes evolve here: ``[eta(t)] = [eta0] + 2 pi t c1(K_Y)``, so
every pairing along ``t`` is affine and no parabolic equation is solved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    InvalidClassData, NonPositiveDenominator, NonPositivePairing, TargetNotNef,
)
from .geometry import curvature_batch, volume_density
from .functionals import lambda_from_pack
from .maps import classify_map, energy_batch
from .models import FlatTorus, ProductManifold
from .quadrature import weighted_sum

WORDING_NOTE = ("hypothesis implemented as int lambda omega^n > 0, "
                "not as positivity of the total second Ricci curvature")


class SingularityType(str, Enum):
    TYPE_IIB_FORCED = "TypeIIbForced"
    TYPE_IIB_OR_IIIA_FORCED = "TypeIIbOrIIIaForced"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class FlowClassData:
    lambda_total: float
    eta0_pairing: float
    ky_pairing: float
    dim_source: int

    def validate(self):
        vals = (self.lambda_total, self.eta0_pairing, self.ky_pairing)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidClassData("class data must be finite")
        if int(self.dim_source) != self.dim_source or self.dim_source < 1:
            raise InvalidClassData("dim_source must be a positive integer")
        if self.eta0_pairing <= 0:
            raise InvalidClassData("eta0 pairing must be positive for a non-constant map")
        if self.ky_pairing < 0:
            raise InvalidClassData("negative canonical pairing: K_Y is not nef")
        return self

    def scaled(self, c):
        return FlowClassData(c * self.lambda_total, c * self.eta0_pairing, c * self.ky_pairing, self.dim_source)


@dataclass(frozen=True)
class SingularityVerdict:
    data: FlowClassData
    limsup_t_times_bound: float
    classification: SingularityType
    notes: tuple = ()
    provenance: dict = field(default_factory=dict)

    def bound_fn(self, t):
        return flow_bound(self.data, t)


def flow_bound(data, t):
    """Lower bound for ``sup_Y H`` of ``eta(t)``: ``(lambda_total / n) / (eta0 + 2 pi t ky)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    denom = data.eta0_pairing + 2.0 * np.pi * t * data.ky_pairing
    if np.any(denom <= 0):
        raise NonPositiveDenominator("pairing of [eta(t)] must stay positive")
    out = (data.lambda_total / data.dim_source) / denom
    return float(out) if out.ndim == 0 else out


def limsup_t_bound(data):
    """Closed-form ``lim t * flow_bound(t)``."""
    if data.ky_pairing > 0:
        return data.lambda_total / (2.0 * np.pi * data.dim_source * data.ky_pairing)
    if data.lambda_total > 0:
        return math.inf
    return 0.0 if data.lambda_total == 0 else -math.inf


def classify_flow(data):
    data.validate()
    if data.lambda_total > 0 and data.ky_pairing == 0:
        kind = SingularityType.TYPE_IIB_FORCED
    elif data.lambda_total > 0:
        kind = SingularityType.TYPE_IIB_OR_IIIA_FORCED
    else:
        kind = SingularityType.INCONCLUSIVE
    return SingularityVerdict(data, limsup_t_bound(data), kind, (WORDING_NOTE,))


def mu_lower_bound(lambda_total, alpha_pairing, n):
    """``mu_alpha >= int lambda omega^n / (n int f* alpha ^ omega^{n-1})``."""
    if alpha_pairing <= 0:
        raise NonPositivePairing("alpha pairing must be positive")
    return lambda_total / (n * alpha_pairing)


def nu_lower_bound(scal_total, alpha_pairing, n):
    """``nu_alpha >= int R omega^n / (n int f* alpha ^ omega^{n-1})``."""
    if alpha_pairing <= 0:
        raise NonPositivePairing("alpha pairing must be positive")
    return scal_total / (n * alpha_pairing)


def _torus_like(model):
    if isinstance(model, FlatTorus):
        return True
    if isinstance(model, ProductManifold):
        return all(_torus_like(m) for m in model.factors)
    return False


def canonical_pairing_from_model(f):
    """``int f* c1(K_Y) ^ omega^{n-1}`` from class metadata, or None when unknown."""
    Y = f.target
    if Y.topo.canonical_nef is False:
        raise TargetNotNef(f"{Y.name}: canonical bundle is not nef")
    if _torus_like(Y):
        return 0.0
    return None


def canonical_pairing_from_metric(f, omega, eta, scheme):
    """Metric route: ``c1(K_Y)`` represented by ``-Ric(eta) / 2 pi``."""
    pts = scheme.nodes
    img, J = f.apply(pts)
    ric = curvature_batch(eta, img).ricci
    ginv = curvature_batch(omega, pts).metric_inv
    tr = np.einsum("nji,nij->n", ginv, np.einsum("nai,nab,nbj->nij", J, ric, np.conj(J))).real
    w = scheme.weights * volume_density(omega, pts)
    return -weighted_sum(w * tr) / (2.0 * np.pi * f.source.dim)


def lambda_total(model, omega, resolution=None, seed=0):
    """``int lambda omega^n`` with its two-resolution error and ``int |lambda| omega^n``."""
    fine = model.default_resolution if resolution is None else int(resolution)
    out = []
    for res in (fine, model.coarser(fine)):
        scheme = model.quadrature(res, seed)
        w = scheme.weights * volume_density(omega, scheme.nodes)
        lam = lambda_from_pack(curvature_batch(omega, scheme.nodes))
        out.append((weighted_sum(w * lam), weighted_sum(w * np.abs(lam))))
    return out[0][0], abs(out[0][0] - out[1][0]), out[0][1]


def end_to_end_flow_scenario(f, omega, eta0=None, ky_pairing=None, source=None, eta0_pairing=None,
                             target_nef=None, resolution=None, seed=0):
    """Assemble :class:`FlowClassData` from quadrature plus class metadata, then classify.

    With a concrete map ``f`` the eta0 pairing is computed and the canonical
    pairing comes from the target's metadata unless declared.  With ``f=None``
    the target is abstract: ``source``, ``eta0_pairing``, ``ky_pairing`` and
    ``target_nef`` must all be declared.
    """
    notes = [WORDING_NOTE]
    prov = {"seed": seed}
    if f is None:
        if source is None or eta0_pairing is None or ky_pairing is None or target_nef is None:
            raise InvalidClassData("an abstract target needs declared pairings and nef flag")
        X = source
        prov["target"] = "declared"
    else:
        X = f.source
        if classify_map(f, omega, eta0).constant:
            raise InvalidClassData(f"{f.name} is constant")
        prov["target"] = f.target.name
    if not (omega.gauduchon_known or X.dim == 1):
        raise InvalidClassData("source metric must be Gauduchon")
    if target_nef is False:
        raise TargetNotNef("declared: canonical bundle of the target is not nef")
    if f is not None:
        declared = ky_pairing
        from_meta = canonical_pairing_from_model(f)
        scheme = X.quadrature(resolution, seed)
        if eta0_pairing is None:
            w = scheme.weights * volume_density(omega, scheme.nodes)
            eta0_pairing = weighted_sum(w * energy_batch(f, omega, eta0, scheme.nodes)) / X.dim
        if f.target.topo.kahler and eta0 is not None:
            computed = canonical_pairing_from_metric(f, omega, eta0, scheme)
            prov["ky_pairing_metric"] = computed
            ref = declared if declared is not None else from_meta
            if ref is not None and abs(computed - ref) > 1e-6 * max(1.0, abs(ref)):
                notes.append(f"metric canonical pairing {computed:.6g} differs from class value {ref:.6g}")
        ky_pairing = declared if declared is not None else from_meta
        if ky_pairing is None:
            raise InvalidClassData(f"no canonical pairing known for {f.target.name}; declare it")
    if ky_pairing < 0:
        raise TargetNotNef("negative canonical pairing")
    lam, err, mass = lambda_total(X, omega, resolution, seed)
    # finite-difference curvature is accurate to about 1e-9 relative
    if abs(lam) <= max(1e-8 * max(mass, 1.0), 10.0 * err):
        notes.append(f"total first eigenvalue {lam:.3e} is zero within quadrature tolerance")
        lam = 0.0
    prov.update({"lambda_total": lam, "eta0_pairing": eta0_pairing, "ky_pairing": ky_pairing})
    data = FlowClassData(lam, float(eta0_pairing), float(ky_pairing), X.dim)
    verdict = classify_flow(data)
    return SingularityVerdict(data, verdict.limsup_t_times_bound, verdict.classification, tuple(notes), prov)
