"""Central tolerance defaults (all overridable from the CLI)."""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-9         # identities exact up to rounding
    jet_fd: float = 1e-6            # jets vs central differences
    curvature_oracle: float = 1e-5  # curvature via two independent routes
    exact: float = 1e-6             # pass band for jet-exact residuals
    curvature: float = 1e-4         # pass band for curvature-level residuals
    mixed_block: float = 1e-7       # direct mixed Ricci block
    non_soliton: float = 1e-3       # above this a fit is "not-a-soliton"

    def as_dict(self) -> dict:
        return asdict(self)

    def override(self, **values) -> "Tolerances":
        return replace(self, **{k: float(v) for k, v in values.items() if v is not None})


DEFAULT = Tolerances()
