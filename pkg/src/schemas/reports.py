"""Schemas for verification reports emitted by the engine and the CLI."""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

Verdict = Literal["pass", "fail"]
StageVerdict = Literal["pass", "fail", "not applicable", "error"]


class PointCheck(BaseModel):
    """Outcome of the pointwise conditions at one sample."""

    index: int = Field(..., description="Sample index")
    point: Dict[str, str] = Field(..., description="Sample coordinates as exact rationals")
    ranks: Dict[str, int] = Field(default_factory=dict, description="Ranks of the computed subspaces")
    checks: Dict[str, bool] = Field(default_factory=dict, description="Named pointwise conditions")
    verdict: Verdict = Field(..., description="pass iff every pointwise condition holds")
    witness: Optional[str] = Field(default=None, description="First violated condition with a witness")


class StructureReport(BaseModel):
    """Report of a definitional or identity check over a sample set."""

    check: str = Field(..., description="Name of the check")
    verdict: Verdict = Field(..., description="pass iff all symbolic and pointwise conditions hold")
    samples: int = Field(default=0, description="Number of sample points used")
    seed: Optional[int] = Field(default=None, description="Seed of the sample generator")
    symbolic: Dict[str, bool] = Field(default_factory=dict, description="Symbolic identities and their outcome")
    equality_method: str = Field(default="normal form", description="How symbolic equalities were decided")
    points: List[PointCheck] = Field(default_factory=list, description="Per-sample outcomes")
    witness: Optional[str] = Field(default=None, description="First failure witness")
    flags: List[str] = Field(default_factory=list, description="Diagnostics that do not change the verdict")
    details: Dict[str, Any] = Field(default_factory=dict, description="Check-specific data")

    @classmethod
    def build(
        cls,
        check: str,
        points: Optional[List[PointCheck]] = None,
        symbolic: Optional[Dict[str, bool]] = None,
        seed: Optional[int] = None,
        symbolic_witness: Optional[str] = None,
        **extra: Any,
    ) -> "StructureReport":
        points = points or []
        symbolic = symbolic or {}
        witness = None
        failed = [name for name, ok in symbolic.items() if not ok]
        if failed:
            witness = symbolic_witness or f"symbolic identity failed: {failed[0]}"
        else:
            for point in points:
                if point.verdict == "fail":
                    witness = f"sample {point.index}: {point.witness}"
                    break
        verdict: Verdict = "fail" if witness else "pass"
        return cls(
            check=check,
            verdict=verdict,
            samples=len(points),
            seed=seed,
            symbolic=symbolic,
            points=points,
            witness=witness,
            **extra,
        )

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


class SubspaceSummary(BaseModel):
    """A subspace as rank plus readable basis."""

    rank: int = Field(..., description="Dimension of the subspace")
    basis: List[str] = Field(default_factory=list, description="Basis vectors in coordinate notation")


class ConditionPoint(BaseModel):
    """Subspaces and equality verdicts of the reduction conditions at one sample."""

    index: int = Field(..., description="Sample index")
    point: Dict[str, str] = Field(..., description="Sample coordinates")
    subspaces: Dict[str, SubspaceSummary] = Field(default_factory=dict, description="Every constituent subspace")
    equalities: Dict[str, bool] = Field(default_factory=dict, description="Tested subspace equalities")
    verdict: Verdict = Field(..., description="pass iff all equalities hold")


class ConditionReport(BaseModel):
    """Pointwise verification of the reduction conditions."""

    check: str = Field(..., description="contact or symplectic")
    verdict: Verdict = Field(..., description="pass iff both equalities hold at all samples")
    samples: int = Field(default=0, description="Number of samples")
    seed: Optional[int] = Field(default=None, description="Seed of the sample generator")
    reduction_algebra: str = Field(default="bracket", description="Which subalgebra acts as reduction algebra")
    points: List[ConditionPoint] = Field(default_factory=list, description="Per-sample outcomes")
    witness: Optional[str] = Field(default=None, description="First failing equality")
    flags: List[str] = Field(default_factory=list, description="Diagnostics, e.g. fixed-value rows")
    cross_check: Optional[Dict[str, Any]] = Field(default=None, description="Agreement with the other checker")

    @classmethod
    def build(cls, check: str, points: List[ConditionPoint], **extra: Any) -> "ConditionReport":
        witness = None
        for point in points:
            if point.verdict == "fail":
                failed = [name for name, ok in point.equalities.items() if not ok]
                witness = f"sample {point.index}: {', '.join(failed)} fails"
                break
        verdict: Verdict = "fail" if witness else "pass"
        return cls(check=check, verdict=verdict, samples=len(points), points=points, witness=witness, **extra)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


class IsotropyReport(BaseModel):
    """Coadjoint isotropy data of a k-covector in a Lie algebra."""

    dimension: int = Field(..., description="Dimension of the Lie algebra")
    basis_names: List[str] = Field(..., description="Names of the algebra basis")
    per_row: List[Dict[str, List[List[str]]]] = Field(
        default_factory=list, description="For each row: ker, isotropy and projective isotropy bases"
    )
    kernel: List[List[str]] = Field(default_factory=list, description="ker of all rows")
    isotropy: List[List[str]] = Field(default_factory=list, description="Intersection of the row isotropies")
    projective_isotropy: List[List[str]] = Field(default_factory=list, description="Intersection of projective isotropies")
    k_mu: List[List[str]] = Field(default_factory=list, description="ker mu intersected with the isotropy")
    k_bracket_mu: List[List[str]] = Field(default_factory=list, description="ker mu intersected with the projective isotropy")
    dims: Dict[str, int] = Field(default_factory=dict, description="Dimensions of every subalgebra")
    willett: List[bool] = Field(default_factory=list, description="Willett condition per row")
    bracket_closed: bool = Field(default=True, description="Reduction algebra closed under the bracket")
    flags: List[str] = Field(default_factory=list, description="Diagnostics, e.g. zero rows")


class ProbePoint(BaseModel):
    """Reduction-group probe outcome at one sample."""

    index: int = Field(..., description="Sample index")
    point: Dict[str, str] = Field(..., description="Sample coordinates")
    level_dim: int = Field(..., description="Dimension of the level-set tangent")
    kernel_rank: int = Field(..., description="Rank of T intersected with its orthogonal")
    bracket_orbit_rank: int = Field(..., description="Rank of the reduction-algebra orbit")
    isotropy_orbit_rank: int = Field(..., description="Rank of the isotropy-algebra orbit")
    matches: Literal["bracket", "isotropy", "both", "neither"] = Field(..., description="Which orbit equals the kernel")
    strictly_contains_isotropy: bool = Field(..., description="Kernel strictly contains the isotropy orbit")


class ProbeReport(BaseModel):
    """Which subalgebra the symplectic kernel of the level set singles out."""

    verdict: Verdict = Field(..., description="pass iff the kernel equals the reduction-algebra orbit at all samples")
    samples: int = Field(default=0, description="Number of samples")
    seed: Optional[int] = Field(default=None, description="Seed of the sample generator")
    recommended: str = Field(..., description="Subalgebra matching the kernel")
    points: List[ProbePoint] = Field(default_factory=list, description="Per-sample outcomes")
    quotient_dims: Dict[str, Dict[str, Any]] = Field(
        default_factory=dict, description="Would-be reduced dimensions and their parity per subalgebra"
    )
    flags: List[str] = Field(default_factory=list, description="Diagnostics such as parity obstructions")


class StageResult(BaseModel):
    """Outcome of one pipeline stage."""

    verdict: StageVerdict = Field(..., description="Stage verdict")
    summary: Dict[str, Any] = Field(default_factory=dict, description="Compact stage data (sub-verdicts, ranks)")
    expected: Optional[Dict[str, Any]] = Field(default=None, description="Expected outcome with provenance")
    matches_expected: Optional[bool] = Field(default=None, description="Summary agrees with the expectation")
    message: Optional[str] = Field(default=None, description="Reason for not applicable or error")
    error_type: Optional[str] = Field(default=None, description="Exception class behind an error verdict")
    seconds: Optional[float] = Field(default=None, description="Wall time, only when timings are requested")


class RunReport(BaseModel):
    """Machine-readable result of running a scenario through the pipeline."""

    scenario: str = Field(..., description="Scenario id")
    seed: int = Field(..., description="Seed used for all sample sets")
    samples: int = Field(..., description="Samples per pointwise check")
    stages: Dict[str, StageResult] = Field(default_factory=dict, description="Stage outcomes in execution order")

    @property
    def failed(self) -> bool:
        return any(stage.verdict in ("fail", "error") for stage in self.stages.values())

    @property
    def expectations_met(self) -> bool:
        return all(stage.matches_expected is not False for stage in self.stages.values())

    @property
    def ok(self) -> bool:
        """Every stage passed, was not applicable, or failed exactly as expected."""
        return all(
            stage.matches_expected is True or (stage.matches_expected is None and stage.verdict in ("pass", "not applicable"))
            for stage in self.stages.values()
        )
