"""
Run ledger service: records metric reports and reads them back.
"""
import json
from typing import Optional

from evaluation.metrics import MetricsReport
from results.database import close_db, get_db, init_db
from results.models import ClassScoreRecord, EvaluationRun, RunKind


class ResultsService:
    """Service for recording and querying evaluation runs."""

    def __init__(self, url: Optional[str] = None):
        self.url = url
        init_db(url)

    def record_report(
        self,
        report: MetricsReport,
        name: str = None,
        kind: RunKind = RunKind.EVALUATE,
        run_config: dict = None
    ) -> EvaluationRun:
        """Store a report with its per-object scores.

        Args:
            report: Metrics report to store
            name: Free-form run name (dataset, experiment)
            kind: What produced the report
            run_config: Resolved configuration of the run

        Returns:
            Created run
        """
        averages = report.averages
        db = get_db(self.url)
        try:
            run = EvaluationRun(
                name=name,
                method=report.method,
                kind=kind,
                flow_mode=report.meta.get("flow_mode"),
                miou=averages["miou"],
                precision=averages["precision"],
                recall=averages["recall"],
                config_json=json.dumps(run_config) if run_config is not None else None,
            )
            for score in report.per_class:
                run.scores.append(ClassScoreRecord(
                    name=score.name,
                    miou=score.miou,
                    precision=score.precision,
                    recall=score.recall,
                    frame_count=score.frame_count,
                ))
            db.add(run)
            db.commit()
            db.refresh(run)
            return run
        finally:
            close_db(db)

    def get_run(self, run_id: int) -> Optional[EvaluationRun]:
        """Get a run by ID, or None if not found."""
        db = get_db(self.url)
        try:
            return db.query(EvaluationRun).filter(EvaluationRun.id == run_id).first()
        finally:
            close_db(db)

    def list_runs(self, method: str = None, limit: int = 100) -> list[EvaluationRun]:
        """Most recent runs first, optionally for one method."""
        db = get_db(self.url)
        try:
            query = db.query(EvaluationRun)
            if method:
                query = query.filter(EvaluationRun.method == method)
            return query.order_by(EvaluationRun.created_at.desc(), EvaluationRun.id.desc()).limit(limit).all()
        finally:
            close_db(db)


# Convenience functions
def record_report(report: MetricsReport, url: Optional[str] = None, **kwargs) -> EvaluationRun:
    """Record a report in the configured ledger."""
    return ResultsService(url).record_report(report, **kwargs)


def list_runs(url: Optional[str] = None, **kwargs) -> list[EvaluationRun]:
    """List recorded runs."""
    return ResultsService(url).list_runs(**kwargs)
