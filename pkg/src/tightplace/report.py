"""Placement reports: every number needed to judge a placement, in text or JSON."""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import irregularity
from .optimality import DEFAULT_TOL, certify
from .sensors import coefficients_of, common_kind, criteria_report, fim

SIG_DIGITS = 12


@dataclass(frozen=True)
class PlacementReport:
    kind: str
    d: int
    target: np.ndarray
    bearings: np.ndarray
    positions: np.ndarray
    sigmas: np.ndarray
    ranges: np.ndarray
    coefficients: np.ndarray
    k0: int
    dominant: tuple
    residual_sensors: tuple
    regime: str
    objective: float
    bound: float
    error: float
    det_F: float
    lambda_bar_pow_d: float
    deviation: float
    verdict: bool
    tol: float
    certificate_residual: float
    method: Optional[str] = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "dimension": self.d,
            "method": self.method,
            "target": self.target.tolist(),
            "sensors": [
                {"index": i, "sigma": float(s), "range": float(r), "coefficient": float(c),
                 "coefficient_sq": float(c) ** 2, "bearing": g.tolist(), "position": p.tolist()}
                for i, (s, r, c, g, p) in enumerate(zip(self.sigmas, self.ranges, self.coefficients,
                                                          self.bearings, self.positions))
            ],
            "irregularity": {"k0": self.k0, "dominant": list(self.dominant),
                             "residual": list(self.residual_sensors)},
            "regime": self.regime,
            "objective": self.objective,
            "bound": self.bound,
            "optimality_error": self.error,
            "det_F": self.det_F,
            "lambda_bar_pow_d": self.lambda_bar_pow_d,
            "fim_deviation": self.deviation,
            "verdict": self.verdict,
            "tol": self.tol,
            "certificate_residual": self.certificate_residual,
        }

    def to_json(self):
        # json writes floats with repr, so values survive the round trip exactly
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        f = _num
        lines = [f"sensor kind      {self.kind}", f"dimension        {self.d}"]
        if self.method:
            lines.append(f"method           {self.method}")
        lines.append("target           " + " ".join(f(v) for v in self.target))
        lines.append("")
        axes = "xyz"[: self.d]
        head = ["i", "sigma", "range", "c", "c^2"] + [f"g_{a}" for a in axes] + [f"p_{a}" for a in axes]
        rows = [head]
        for i in range(len(self.coefficients)):
            c = self.coefficients[i]
            rows.append([str(i), f(self.sigmas[i]), f(self.ranges[i]), f(c), f(c * c)]
                        + [f(v) for v in self.bearings[i]] + [f(v) for v in self.positions[i]])
        widths = [max(len(r[j]) for r in rows) for j in range(len(head))]
        lines += ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in rows]
        lines.append("")
        lines.append(f"k0               {self.k0}")
        if self.k0:
            lines.append(f"dominant         {list(self.dominant)}")
            lines.append(f"residual         {list(self.residual_sensors)}")
        lines += [
            f"regime           {self.regime}",
            f"||G||^2          {f(self.objective)}",
            f"bound            {f(self.bound)}",
            f"error            {f(self.error)}",
            f"det F            {f(self.det_F)}",
            f"lambda_bar^d     {f(self.lambda_bar_pow_d)}",
            f"||F-lbar I||^2   {f(self.deviation)}",
            f"residual         {f(self.certificate_residual)} (tol {f(self.tol)})",
            f"verdict          {'optimal' if self.verdict else 'not optimal'}",
        ]
        return "\n".join(lines) + "\n"


def _num(x):
    return f"{float(x):.{SIG_DIGITS}g}"


def build_report(placement, specs, tol=DEFAULT_TOL, method=None):
    """Assemble the report for a placement and its sensor specs."""
    cert = certify(placement, specs, tol)
    coeffs = coefficients_of(specs)
    irr = irregularity(coeffs, placement.d)
    crit = criteria_report(fim(placement, specs))
    return PlacementReport(
        kind=common_kind(specs).value,
        d=placement.d,
        target=np.array(placement.target),
        bearings=np.array(placement.bearings),
        positions=np.array(placement.positions),
        sigmas=np.array([s.sigma for s in specs]),
        ranges=np.array(placement.ranges),
        coefficients=np.array(coeffs.values),
        k0=irr.k0,
        dominant=tuple(int(i) for i in irr.dominant),
        residual_sensors=tuple(int(i) for i in irr.residual),
        regime=cert.regime.value,
        objective=cert.objective,
        bound=cert.bound,
        error=cert.error,
        det_F=crit.det_F,
        lambda_bar_pow_d=crit.lambda_bar_pow_d,
        deviation=crit.deviation,
        verdict=cert.verdict,
        tol=cert.tol,
        certificate_residual=cert.residual,
        method=method,
    )
