"""
Database setup and session management for the run ledger.
"""
import logging
from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, Session
from config import config
from errors import ConfigError
from results.models import Base

logger = logging.getLogger(__name__)

# One engine and session factory per database URL
_factories: dict = {}


def resolve_url(url: Optional[str] = None) -> str:
    """Explicit URL, else RESULTS_DATABASE_URL; empty means recording is off."""
    return url or config.RESULTS_DATABASE_URL


def _factory(url: str) -> sessionmaker:
    if not url:
        raise ConfigError("no results database configured (set RESULTS_DATABASE_URL or pass --db)")
    if url not in _factories:
        connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
        engine = create_engine(url, echo=False, connect_args=connect_args)
        _factories[url] = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return _factories[url]


def init_db(url: Optional[str] = None):
    """Initialize the database - create all tables."""
    url = resolve_url(url)
    Base.metadata.create_all(bind=_factory(url).kw["bind"])
    logger.debug(f"Results database ready at {url}")


def get_db(url: Optional[str] = None) -> Session:
    """Get a database session; the caller closes it with close_db."""
    return _factory(resolve_url(url))()


def close_db(db: Session):
    """Close a database session."""
    if db:
        db.close()
