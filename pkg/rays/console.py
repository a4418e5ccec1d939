#!/usr/bin/env python3
"""
Console output for the rays toolkit
Status lines use the emoji prefixes of the command line; library modules log
through the standard logging tree configured here.
"""

import logging
import os
import sys

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def is_quiet():
    return os.getenv("RAYS_QUIET", "0").strip().lower() in ("1", "true", "yes", "on")


def status(message):
    """Print a progress line unless RAYS_QUIET is set"""
    if not is_quiet():
        print(message, file=sys.stderr)


def print_header(title):
    status("\n" + "=" * 80)
    status(title.center(80))
    status("=" * 80)


def configure_logging(level=None):
    """Set the root level from the argument or RAYS_LOG_LEVEL (default WARNING)"""
    level = level or os.getenv("RAYS_LOG_LEVEL", "WARNING")
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)
    return level


def env_jobs(default=None):
    """Worker count from RAYS_JOBS, or the given default"""
    value = os.getenv("RAYS_JOBS")
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        status(f"⚠️  Ignoring RAYS_JOBS={value!r}: not an integer")
        return default
