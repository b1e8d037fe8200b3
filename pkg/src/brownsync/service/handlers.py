"""Service operations behind the HTTP endpoints.

The CLI calls these functions directly when no --server is given, so the
request/response models are the single contract for both transports.
"""

from __future__ import annotations

import numpy as np

from .. import __version__
from ..analysis import closed_form_R, renewal_check, sweep
from ..engine import estimate_R
from ..errors import EpochBudgetError
from ..particles import (
    InteractionSignature,
    ParticleConfiguration,
    kappa_analytic,
    kappa_enumerate,
)
from . import schemas

# enumeration-vs-formula agreement expected at double precision
KAPPA_TOLERANCE = 1e-9


def _echo(req: schemas.StrictModel) -> dict:
    """Normalized effective config: validated input with defaults filled.

    None-valued fields are dropped; the models refill them on re-validation,
    so the echo reproduces the run when fed back through the CLI.
    """
    return req.model_dump(mode="json", by_alias=True, exclude_none=True)


def run_simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    config = req.to_config()
    try:
        result = estimate_R(config, workers=req.workers)
    except EpochBudgetError:
        return schemas.SimulateResponse(
            rows=[],
            markov=config.is_markov,
            degenerate=config.is_degenerate,
            budget_exceeded=True,
            replicas_completed=0,
            config=_echo(req),
            version=__version__,
        )
    r0 = config.initial_spread()
    rows = []
    for est, m_var in zip(result.estimates, result.m_variance):
        if config.is_markov and config.sigma > 0:
            theory = closed_form_R(
                est.t, config.n, config.sigma,
                config.epochs.params[0], config.kappa, r0,
            )
        elif config.epochs is None:
            # free diffusion: R(t) = R0 + sigma^2 t
            theory = r0 + config.sigma * config.sigma * est.t
        else:
            theory = None
        if theory is None:
            z = None
        elif est.stderr > 0:
            z = (est.mean - theory) / est.stderr
        elif est.mean == theory:
            z = 0.0
        else:
            z = None  # zero spread across replicas yet off target: no finite z
        rows.append(
            schemas.SimulateRow(
                t=est.t,
                mc_mean=est.mean,
                mc_stderr=est.stderr,
                replicas=est.replicas,
                closed_form=theory,
                zscore=z,
                m_variance=m_var,
            )
        )
    return schemas.SimulateResponse(
        rows=rows,
        markov=config.is_markov,
        degenerate=config.is_degenerate,
        budget_exceeded=result.budget_exceeded,
        replicas_completed=result.replicas_completed,
        config=_echo(req),
        version=__version__,
    )


def run_kappa(req: schemas.KappaRequest) -> schemas.KappaResponse:
    rng = np.random.default_rng(req.seed)
    rows = []
    for parts in req.signatures:
        sig = InteractionSignature(tuple(parts))
        analytic = kappa_analytic(sig)
        worst_val, worst_diff = analytic, -1.0
        for _ in range(req.configs):
            x = ParticleConfiguration(tuple(rng.normal(size=req.n)))
            enum = kappa_enumerate(sig, req.n, x)
            if abs(enum - analytic) > worst_diff:
                worst_val, worst_diff = enum, abs(enum - analytic)
        rows.append(
            schemas.KappaRow(
                signature="+".join(str(p) for p in sig.parts),
                n=req.n,
                kappa_analytic=analytic,
                kappa_enumerated=worst_val,
                abs_diff=worst_diff,
                passed=worst_diff <= KAPPA_TOLERANCE,
            )
        )
    return schemas.KappaResponse(rows=rows, config=_echo(req), version=__version__)


def run_oracle(req: schemas.OracleRequest) -> schemas.OracleResponse:
    kappa = req.kappa_value()
    rows = [
        schemas.OracleRow(
            t=t,
            closed_form=closed_form_R(t, req.n, req.sigma, req.delta, kappa, req.r0),
        )
        for t in req.t
    ]
    return schemas.OracleResponse(rows=rows, config=_echo(req), version=__version__)


def run_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    plan = req.to_plan()
    mc = req.to_mc_settings() if req.observe == "monte-carlo" else None
    report = sweep(
        plan,
        observe=req.observe,
        mc=mc,
        workers=req.workers,
        regime_hint=req.regime(),
    )
    rows = [
        schemas.SweepRowModel(
            n=r.n, t=r.t, alpha=r.alpha, regime=r.regime,
            predicted=r.predicted, observed=r.observed, ratio=r.ratio,
            passed=r.passed, closed_form=r.closed_form, stderr=r.stderr,
            tolerance=r.tolerance, label=r.label,
        )
        for r in report.rows
    ]
    return schemas.SweepResponse(
        rows=rows,
        regime=report.regime,
        c=report.c,
        mode=report.mode,
        observe=report.observe,
        all_passed=report.all_passed,
        config=_echo(req),
        version=__version__,
    )


def run_renewal_check(
    req: schemas.RenewalCheckRequest,
) -> schemas.RenewalCheckResponse:
    rows = renewal_check(
        laws=[law.to_spec() for law in req.laws],
        n=req.n,
        sigma=req.sigma,
        signature=InteractionSignature(tuple(req.signature)),
        replicas=req.replicas,
        base_seed=req.seed,
        horizon_multiple=req.horizon_multiple,
        workers=req.workers,
        max_epochs=req.max_epochs,
    )
    models = [
        schemas.RenewalCheckRowModel(
            law=r.law, n=r.n, t=r.t, target=r.target, mc_mean=r.mc_mean,
            mc_stderr=r.mc_stderr, ratio=r.ratio, basis=r.basis, passed=r.passed,
        )
        for r in rows
    ]
    return schemas.RenewalCheckResponse(
        rows=models,
        all_passed=all(r.passed for r in models),
        config=_echo(req),
        version=__version__,
    )
