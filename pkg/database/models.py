"""
SQLAlchemy models for the simulation run history
"""
from datetime import datetime
import json
import os
import logging

from sqlalchemy import create_engine, Column, Integer, String, Float, DateTime, Text
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()


class RunRecord(Base):
    """
    One finished replication of one scenario
    """
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True, autoincrement=True)

    # Run identification
    scenario_id = Column(String(100), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    stack = Column(String(100), nullable=False, index=True)  # '13,7,2' or 'baseline'
    digest = Column(String(64), nullable=False)  # SHA-256 of the event log

    # Headline ledger fields
    mt_arrivals = Column(Integer, nullable=False, default=0)
    mt_delivered = Column(Integer, nullable=False, default=0)
    signaling_units = Column(Integer, nullable=False, default=0)
    wasted_paging_units = Column(Integer, nullable=False, default=0)
    misleading_events = Column(Integer, nullable=False, default=0)
    interruption_ms = Column(Float, nullable=False, default=0.0)
    rx_on_ms = Column(Float, nullable=False, default=0.0)
    median_latency_ms = Column(Float, nullable=True)

    ledger_json = Column(Text, nullable=False)  # full ledger
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)

    def __repr__(self):
        return (f"<RunRecord(id={self.id}, scenario='{self.scenario_id}', seed={self.seed}, "
                f"stack='{self.stack}', digest='{self.digest[:12]}')>")

    def to_dict(self):
        return {
            'id': self.id,
            'scenario_id': self.scenario_id,
            'seed': self.seed,
            'stack': self.stack,
            'digest': self.digest,
            'mt_arrivals': self.mt_arrivals,
            'mt_delivered': self.mt_delivered,
            'signaling_units': self.signaling_units,
            'wasted_paging_units': self.wasted_paging_units,
            'misleading_events': self.misleading_events,
            'interruption_ms': self.interruption_ms,
            'rx_on_ms': self.rx_on_ms,
            'median_latency_ms': self.median_latency_ms,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    @property
    def ledger(self) -> dict:
        return json.loads(self.ledger_json)

    @classmethod
    def from_replication(cls, replication) -> 'RunRecord':
        """
        Build a row from a finished replication

        Args:
            replication: runner.orchestrator.Replication

        Returns:
            RunRecord: New, unsaved row
        """
        result, ledger = replication.result, replication.ledger
        return cls(
            scenario_id=result.scenario_id,
            seed=result.seed,
            stack=result.stack_label,
            digest=result.digest,
            mt_arrivals=ledger.mt_arrivals,
            mt_delivered=ledger.mt_delivered,
            signaling_units=ledger.signaling_units,
            wasted_paging_units=ledger.wasted_paging_units,
            misleading_events=ledger.misleading_reachability_events,
            interruption_ms=ledger.interruption_ms,
            rx_on_ms=ledger.rx_on_ms,
            median_latency_ms=ledger.median_latency_ms,
            ledger_json=json.dumps(ledger.to_dict(), sort_keys=True),
        )


def create_database_engine(db_path: str):
    """
    Create SQLAlchemy engine for a SQLite file

    Args:
        db_path: Path to SQLite database file (':memory:' for tests)
    """
    if db_path != ':memory:':
        directory = os.path.dirname(db_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
    database_uri = f'sqlite:///{db_path}'
    engine = create_engine(database_uri, echo=False)
    logger.info(f"Created database engine: {database_uri}")
    return engine


def create_tables(engine):
    Base.metadata.create_all(engine)
    logger.info("Database tables created successfully")


def get_session_maker(engine):
    return sessionmaker(bind=engine)
