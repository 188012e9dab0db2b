"""FastAPI service exposing the simulation bench.

Stateless request/response endpoints around the core package; the CLI
drives them through an in-process ASGI transport by default and over the
network when a server is running.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core.decomposition import (
    DegenerateFitError,
    check_w2_bound,
    fit_exponential_decay,
    run_decomposition,
)
from ..core.dynamics import NumericalAbort, StepperConfig, initial_state, simulate
from ..core.energy import ENERGY_COLUMNS, PairConstants
from ..core.experiments import (
    EnsembleSpec,
    run_absorbing_probe,
    run_convergence_study,
    run_pair_study,
)
from ..core.memory import ConfigurationError, KernelHypothesisError
from ..core.model import validate_hypotheses, validate_lyapunov_params
from . import schemas as sc


def create_app() -> FastAPI:
    app = FastAPI(title="kirchwave", version=__version__)

    @app.exception_handler(NumericalAbort)
    async def _abort_handler(request: Request, exc: NumericalAbort):
        return JSONResponse(
            status_code=500,
            content={"detail": {"kind": "numerical-abort", "step": exc.step_index, "t": exc.t}},
        )

    @app.exception_handler(ConfigurationError)
    async def _config_handler(request: Request, exc: ConfigurationError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"kind": "config-error", "message": str(exc)}},
        )

    @app.exception_handler(KernelHypothesisError)
    async def _kernel_handler(request: Request, exc: KernelHypothesisError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"kind": "config-error", "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.get("/problems/default", response_model=sc.ProblemConfig)
    def problems_default():
        return sc.default_problem_config()

    @app.post("/check", response_model=sc.CheckResponse)
    def check(req: sc.CheckRequest):
        spec = req.problem.build()
        violations = validate_hypotheses(spec)
        lyap = validate_lyapunov_params(spec)
        return sc.CheckResponse(
            ok=not violations,
            violations=[sc.ViolationModel(equation=v.equation, message=v.message) for v in violations],
            lyapunov_checks=[
                sc.LyapunovCheckModel(name=c.name, satisfied=c.satisfied, detail=c.detail)
                for c in lyap.checks
            ],
            lyapunov_all_satisfied=lyap.all_satisfied,
        )

    @app.post("/simulate", response_model=sc.SimulateResponse)
    def simulate_endpoint(req: sc.SimulateRequest):
        spec = req.problem.build()
        ic = initial_state(spec, req.ic.u0_amp, req.ic.u0_mode, req.ic.v0_amp, req.ic.v0_mode)
        result = simulate(spec, StepperConfig(dt=req.dt), req.t_final, ic=ic)
        rows = [list(r.row()) for r in result.reports]
        return sc.SimulateResponse(
            energy=sc.EnergySeries(columns=list(ENERGY_COLUMNS), rows=rows),
            n_steps=result.n_steps,
            final_norm_h_sq=result.final_state.norm_h_sq(spec),
        )

    @app.post("/decompose", response_model=sc.DecomposeResponse)
    def decompose(req: sc.DecomposeRequest):
        spec = req.problem.build()
        ic = initial_state(spec, req.ic.u0_amp, req.ic.u0_mode, req.ic.v0_amp, req.ic.v0_mode)
        result = run_decomposition(spec, StepperConfig(dt=req.dt), req.t_final, ic=ic)
        try:
            fit = fit_exponential_decay(result.t, result.h1_w1, req.floor_window)
            fit_model = sc.DecayFitModel(rate=fit.rate, floor=fit.floor, r_squared=fit.r_squared)
            fit_error = None
        except DegenerateFitError as exc:
            fit_model = None
            fit_error = str(exc)
        w2 = check_w2_bound(result.t, result.h1_w2)
        return sc.DecomposeResponse(
            series=sc.EnergySeries(
                columns=["t", "H1_full", "H1_w1", "H1_w2", "additivity_defect"],
                rows=[list(r.row()) for r in result.rows],
            ),
            fit=fit_model,
            fit_error=fit_error,
            w2=sc.W2BoundModel(
                sup_after_burnin=w2.sup_after_burnin,
                sup_full=w2.sup_full,
                t_at_sup=w2.t_at_sup,
                bounded_evidence=w2.bounded_evidence,
            ),
            max_additivity_defect=result.max_defect,
        )

    @app.post("/absorb", response_model=sc.AbsorbResponse)
    def absorb(req: sc.AbsorbRequest):
        spec = req.problem.build()
        ens_cfg = req.ensemble
        threshold = ens_cfg.threshold_R
        if threshold is None:
            # Calibration pass: measure the long-time sup over the ensemble
            # and place the candidate ball 10% above it.
            cal = EnsembleSpec(
                n_traj=ens_cfg.n_traj,
                radius_set=tuple(ens_cfg.radii),
                seed=ens_cfg.seed,
                t_final=ens_cfg.t_final,
                threshold_r=float("inf"),
                dt=ens_cfg.dt,
            )
            cal_report = run_absorbing_probe(spec, cal)
            threshold = 1.1 * max(e.long_time_sup for e in cal_report.entries)
        ens = EnsembleSpec(
            n_traj=ens_cfg.n_traj,
            radius_set=tuple(ens_cfg.radii),
            seed=ens_cfg.seed,
            t_final=ens_cfg.t_final,
            threshold_r=float(threshold),
            dt=ens_cfg.dt,
        )
        report = run_absorbing_probe(spec, ens)
        return sc.AbsorbResponse(
            threshold_R=report.threshold_r,
            entries=[
                sc.ProbeEntryModel(
                    id=e.traj_id,
                    radius=e.radius,
                    entry_time=e.entry_time,
                    stayed=e.stayed,
                    long_time_sup=e.long_time_sup,
                )
                for e in report.entries
            ],
            max_entry_time=report.max_entry_time,
            all_absorbed=report.all_absorbed,
        )

    @app.post("/pair", response_model=sc.PairResponse)
    def pair(req: sc.PairRequest):
        spec = req.problem.build()
        ic1 = initial_state(spec, req.ic1.u0_amp, req.ic1.u0_mode, req.ic1.v0_amp, req.ic1.v0_mode)
        ic2 = initial_state(spec, req.ic2.u0_amp, req.ic2.u0_mode, req.ic2.v0_amp, req.ic2.v0_mode)
        constants = PairConstants(
            c2_delta=req.constants.c2_delta,
            c_delta=req.constants.c_delta,
            c_growth=req.constants.c_growth,
        )
        study = run_pair_study(spec, ic1, ic2, req.t_final, dt=req.dt, constants=constants)
        rep = study.report
        return sc.PairResponse(
            t=rep.t.tolist(),
            Atilde1=rep.Atilde1.tolist(),
            E=rep.E.tolist(),
            T=rep.T,
            C_Atilde1=rep.C_Atilde1,
            Phi_T=rep.Phi_T,
            lhs=rep.lhs,
            rhs=rep.rhs,
            bound_rhs=rep.bound_rhs,
            holds=rep.holds,
        )

    @app.post("/converge", response_model=sc.ConvergeResponse)
    def converge(req: sc.ConvergeRequest):
        spec = req.problem.build()
        ic = initial_state(spec, req.ic.u0_amp, req.ic.u0_mode, req.ic.v0_amp, req.ic.v0_mode)
        try:
            table = run_convergence_study(spec, req.dts, req.t_final, req.dt_ref, ic=ic)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        return sc.ConvergeResponse(
            rows=[
                sc.ConvergenceRowModel(dt=r.dt, error=r.error, ratio=r.ratio, valid=r.valid, note=r.note)
                for r in table.rows
            ],
            dt_ref=table.dt_ref,
        )

    return app
