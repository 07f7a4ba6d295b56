"""
SQLAlchemy models for the evaluation run ledger.
"""
from datetime import datetime
from sqlalchemy import Column, Integer, String, Text, Float, DateTime, Enum, ForeignKey
from sqlalchemy.orm import declarative_base, relationship
import enum

Base = declarative_base()


class RunKind(enum.Enum):
    """What produced the recorded scores."""
    EVALUATE = "evaluate"
    BENCHMARK = "benchmark"
    ABLATION = "ablation"


class EvaluationRun(Base):
    """One scored method run."""

    __tablename__ = "evaluation_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)

    name = Column(String(255), nullable=True)
    method = Column(String(100), nullable=False)
    kind = Column(Enum(RunKind), default=RunKind.EVALUATE, nullable=False)
    flow_mode = Column(String(20), nullable=True)

    # Unweighted means over classes
    miou = Column(Float, nullable=False)
    precision = Column(Float, nullable=False)
    recall = Column(Float, nullable=False)

    config_json = Column(Text, nullable=True)

    scores = relationship("ClassScoreRecord", back_populates="run", cascade="all, delete-orphan",
                          lazy="selectin")

    def __repr__(self):
        return f"<EvaluationRun {self.id}: {self.method} mIoU={self.miou:.4f}>"

    def to_dict(self) -> dict:
        """Convert run to dictionary."""
        return {
            "id": self.id,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "name": self.name,
            "method": self.method,
            "kind": self.kind.value if self.kind else None,
            "flow_mode": self.flow_mode,
            "miou": self.miou,
            "precision": self.precision,
            "recall": self.recall,
            "scores": [s.to_dict() for s in self.scores],
        }


class ClassScoreRecord(Base):
    """Pooled scores of one object within a run."""

    __tablename__ = "class_scores"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("evaluation_runs.id"), nullable=False)
    name = Column(String(255), nullable=False)
    miou = Column(Float, nullable=False)
    precision = Column(Float, nullable=False)
    recall = Column(Float, nullable=False)
    frame_count = Column(Integer, nullable=False)

    run = relationship("EvaluationRun", back_populates="scores")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "miou": self.miou,
            "precision": self.precision,
            "recall": self.recall,
            "frame_count": self.frame_count,
        }
