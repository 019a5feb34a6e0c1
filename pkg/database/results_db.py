"""
Run-history helpers on top of the SQLite store
"""
from typing import Dict, List, Optional, Sequence
from sqlalchemy.orm import Session
from sqlalchemy import desc, func
import logging

from .models import RunRecord, create_database_engine, create_tables, get_session_maker

logger = logging.getLogger(__name__)


class ResultsDatabase:
    """
    Database manager for finished simulation runs
    """

    def __init__(self, db_path: str):
        """
        Initialize database connection

        Args:
            db_path: Path to SQLite database file
        """
        self.engine = create_database_engine(db_path)
        create_tables(self.engine)
        self.Session = get_session_maker(self.engine)

        logger.info(f"ResultsDatabase initialized with engine: {self.engine.url}")

    def get_session(self) -> Session:
        return self.Session()

    def add_run(self, replication) -> Optional[int]:
        """
        Store one replication

        Returns:
            int: Row id, or None if the insert failed
        """
        session = self.get_session()
        try:
            record = RunRecord.from_replication(replication)
            session.add(record)
            session.commit()
            session.refresh(record)
            logger.info(f"Stored run: {record.scenario_id} seed={record.seed} stack={record.stack}")
            return record.id

        except Exception as e:
            session.rollback()
            logger.error(f"Error storing run: {e}")
            return None
        finally:
            session.close()

    def add_runs(self, replications: Sequence) -> int:
        """Store several replications in one transaction; returns how many were written"""
        session = self.get_session()
        try:
            records = [RunRecord.from_replication(r) for r in replications]
            session.add_all(records)
            session.commit()
            logger.info(f"Stored {len(records)} runs")
            return len(records)

        except Exception as e:
            session.rollback()
            logger.error(f"Error storing runs: {e}")
            return 0
        finally:
            session.close()

    def get_runs(self, scenario_id: Optional[str] = None, stack: Optional[str] = None,
                 limit: int = 100) -> List[Dict]:
        """
        Most recent runs first, optionally filtered

        Args:
            scenario_id: Only this scenario
            stack: Only this strategy stack label
            limit: Maximum number of rows
        """
        session = self.get_session()
        try:
            query = session.query(RunRecord)
            if scenario_id:
                query = query.filter(RunRecord.scenario_id == scenario_id)
            if stack:
                query = query.filter(RunRecord.stack == stack)
            runs = query.order_by(desc(RunRecord.id)).limit(limit).all()
            return [r.to_dict() for r in runs]

        except Exception as e:
            logger.error(f"Error getting runs: {e}")
            return []
        finally:
            session.close()

    def get_run_stats(self, scenario_id: Optional[str] = None) -> Dict:
        """
        Per-stack aggregates over the stored runs
        """
        session = self.get_session()
        try:
            query = session.query(
                RunRecord.stack,
                func.count(RunRecord.id).label('runs'),
                func.sum(RunRecord.mt_arrivals).label('mt_arrivals'),
                func.sum(RunRecord.mt_delivered).label('mt_delivered'),
                func.avg(RunRecord.signaling_units).label('avg_signaling_units'),
                func.sum(RunRecord.misleading_events).label('misleading_events'),
            )
            if scenario_id:
                query = query.filter(RunRecord.scenario_id == scenario_id)
            rows = query.group_by(RunRecord.stack).order_by(RunRecord.stack).all()
            total = sum(r.runs for r in rows)
            return {
                'total_runs': total,
                'stacks': [{
                    'stack': r.stack,
                    'runs': r.runs,
                    'mt_arrivals': int(r.mt_arrivals or 0),
                    'mt_delivered': int(r.mt_delivered or 0),
                    'avg_signaling_units': float(r.avg_signaling_units or 0.0),
                    'misleading_events': int(r.misleading_events or 0),
                } for r in rows],
            }

        except Exception as e:
            logger.error(f"Error getting run stats: {e}")
            return {}
        finally:
            session.close()

    def get_digests(self, scenario_id: str, seed: int) -> List[str]:
        """Stored log digests of one (scenario, seed); repeated runs should agree"""
        session = self.get_session()
        try:
            rows = (session.query(RunRecord.digest)
                    .filter(RunRecord.scenario_id == scenario_id, RunRecord.seed == seed)
                    .order_by(RunRecord.id)
                    .all())
            return [r.digest for r in rows]
        finally:
            session.close()
